"""Tile-directory loading.

The harness consumes the figure-ground pipeline's export format: a directory
of 8-bit grayscale tiles (0 = building/black, 255 = background/white, PGM or
PNG) plus a `tiles.csv` sidecar (`id,category,split`) whose first line is a
`# schema:` marker. Images are resized to the training input size and the
single channel is replicated to three so stock DenseNet definitions apply
unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

TILES_CSV_SCHEMA = "figground/tiles/1"


@dataclass
class TileRecord:
    tile_id: str
    category: int
    split: str


def load_tile_table(tiles_dir: Path) -> list[TileRecord]:
    path = Path(tiles_dir) / "tiles.csv"
    if not path.exists():
        raise FileNotFoundError(f"no tiles.csv in {tiles_dir}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        first = f.readline().strip()
        if first != f"# schema: {TILES_CSV_SCHEMA}":
            raise ValueError(f"tiles.csv schema line {first!r}, expected {TILES_CSV_SCHEMA!r}")
        reader = csv.reader(f)
        header = next(reader)
        if header[:2] != ["id", "category"]:
            raise ValueError(f"unexpected tiles.csv header {header}")
        records = []
        for row in reader:
            if not row:
                continue
            split = row[2] if len(row) > 2 else ""
            records.append(TileRecord(tile_id=row[0], category=int(row[1]), split=split))
    return records


def load_tile_image(tiles_dir: Path, tile_id: str, input_size: int) -> np.ndarray:
    """Grayscale tile as float32 in [0,1] with buildings = 1, resized."""
    tiles_dir = Path(tiles_dir)
    for ext in ("pgm", "png"):
        path = tiles_dir / f"{tile_id}.{ext}"
        if path.exists():
            img = Image.open(path).convert("L")
            if img.size != (input_size, input_size):
                img = img.resize((input_size, input_size), Image.BILINEAR)
            arr = np.asarray(img, dtype=np.float32) / 255.0
            return 1.0 - arr  # black buildings become the signal
    raise FileNotFoundError(f"no image for tile {tile_id!r} in {tiles_dir}")


class TileDataset(Dataset):
    """Tiles of one split (or all), cached in memory, in sidecar order."""

    def __init__(self, tiles_dir: Path, split: str | None = None, input_size: int = 80):
        self.tiles_dir = Path(tiles_dir)
        self.input_size = input_size
        self.records = [
            r for r in load_tile_table(tiles_dir) if split is None or r.split == split
        ]
        self._images = [
            load_tile_image(self.tiles_dir, r.tile_id, input_size) for r in self.records
        ]

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i: int):
        x = torch.from_numpy(self._images[i]).unsqueeze(0).repeat(3, 1, 1)
        return x, self.records[i].category

    def labels(self) -> np.ndarray:
        return np.array([r.category for r in self.records], dtype=np.int64)

    def tile_ids(self) -> list[str]:
        return [r.tile_id for r in self.records]
