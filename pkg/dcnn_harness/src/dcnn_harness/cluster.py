"""Embedding extraction, k-means clustering, and exemplar montages."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from sklearn.cluster import KMeans
from torch.utils.data import DataLoader

from .data import TileDataset, load_tile_image
from .model import embed


def embed_tiles(model: torch.nn.Module, dataset: TileDataset, batch_size: int = 64) -> np.ndarray:
    """GAP embeddings for every tile, (N, 1024), in dataset order."""
    model.eval()
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False)
    chunks = []
    with torch.no_grad():
        for x, _ in loader:
            chunks.append(embed(model, x).numpy())
    return np.concatenate(chunks, axis=0) if chunks else np.empty((0, 1024))


def cluster_embeddings(embeddings: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > embeddings.shape[0]:
        raise ValueError(f"k={k} exceeds the {embeddings.shape[0]} available tiles")
    km = KMeans(n_clusters=k, random_state=seed, n_init=10)
    return km.fit_predict(embeddings)


def montage(tiles_dir: Path, tile_ids: list[str], out_path: Path, thumb: int = 80, cols: int = 8) -> Path:
    """Grid image of tile thumbnails (figure-ground polarity preserved)."""
    cols = max(1, min(cols, len(tile_ids)))
    rows = (len(tile_ids) + cols - 1) // cols
    sheet = Image.new("L", (cols * thumb, rows * thumb), color=255)
    for i, tile_id in enumerate(tile_ids):
        arr = load_tile_image(tiles_dir, tile_id, thumb)  # buildings = 1
        img = Image.fromarray(((1.0 - arr) * 255.0).astype(np.uint8), mode="L")
        sheet.paste(img, ((i % cols) * thumb, (i // cols) * thumb))
    sheet.save(out_path)
    return out_path


def embed_and_cluster(
    model: torch.nn.Module,
    tiles_dir: Path,
    dataset: TileDataset,
    k: int,
    seed: int = 0,
    out_dir: Path | None = None,
    exemplars_per_cluster: int = 16,
) -> tuple[np.ndarray, list[Path]]:
    """Cluster one class's tiles by embedding; emit an exemplar montage each."""
    embeddings = embed_tiles(model, dataset)
    assignments = cluster_embeddings(embeddings, k, seed=seed)
    paths: list[Path] = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ids = dataset.tile_ids()
        for c in range(k):
            members = [ids[i] for i in np.nonzero(assignments == c)[0][:exemplars_per_cluster]]
            if members:
                paths.append(montage(tiles_dir, members, out_dir / f"cluster_{c}.png"))
    return assignments, paths
