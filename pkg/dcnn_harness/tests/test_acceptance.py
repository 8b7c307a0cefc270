"""Acceptance suite for the tile classifier harness; one PASS line per criterion.

Run with `pytest tests/test_acceptance.py -s`.
"""

import numpy as np
import torch
from sklearn.metrics import adjusted_rand_score
from torch.utils.data import DataLoader

from dcnn_harness import TileDataset, build_model, cam_map, cluster_embeddings, embed_tiles


def check(name: str, ok: bool, detail: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_shape_and_gradient_suite(tiles_dir):
    torch.manual_seed(7)
    model = build_model(num_classes=8)
    loader = DataLoader(TileDataset(tiles_dir, split="train"), batch_size=32, shuffle=False)
    x, y = next(iter(loader))
    model.eval()
    with torch.no_grad():
        logits = model(x)
    softmax_ok = bool(torch.all((torch.softmax(logits, 1).sum(1) - 1.0).abs() <= 1e-6))
    shape_ok = logits.shape == (32, 8)

    model.train()
    optimizer = torch.optim.SGD(model.parameters(), lr=0.1)
    loss_fn = torch.nn.CrossEntropyLoss()
    loss = loss_fn(model(x), y)
    before = loss.item()
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    with torch.no_grad():
        after = loss_fn(model(x), y).item()
    check(
        "dcnn-shapes",
        shape_ok and softmax_ok and after < before,
        f"logits {tuple(logits.shape)}, softmax rows sum to 1 +- 1e-6, "
        f"one SGD step at lr 0.1 moved fixed-batch loss {before:.4f} -> {after:.4f}",
    )


def test_desk_protocol(desk_run, tiles_dir):
    history = desk_run["history"]
    model = desk_run["model"]
    accuracy = history["test_accuracy"]

    dataset = TileDataset(tiles_dir, split="test")
    x, y = dataset[0]
    heat = cam_map(model, x, y)
    cam_ok = heat.shape == (80, 80) and heat.min() >= 0.0 and heat.max() <= 1.0

    # two visually distinct recipes treated as one unlabeled pool: k = 2
    # embedding clustering must recover the recipe split
    embeddings = embed_tiles(model, dataset)
    assignments = cluster_embeddings(embeddings, k=2, seed=0)
    ari = adjusted_rand_score(dataset.labels(), assignments)

    checkpoints = sorted(p.name for p in desk_run["out"].glob("*.pt"))
    check(
        "desk-protocol",
        accuracy >= 0.90 and cam_ok and ari >= 0.8 and "model_final.pt" in checkpoints,
        f"10-epoch held-out accuracy {accuracy:.4f}; CAM 80x80 in [0,1]; "
        f"k=2 clustering ARI {ari:.3f}; checkpoints {checkpoints}",
    )
