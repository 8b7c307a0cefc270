"""Training loop, evaluation, and the per-category accuracy report."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .data import TileDataset
from .model import TrainProtocol, build_model

logger = logging.getLogger(__name__)

CATEGORY_LABELS = (
    "Less than $15,000",
    "$15,000 - $24,999",
    "$25,000 - $34,999",
    "$35,000 - $49,999",
    "$50,000 - $74,999",
    "$75,000 - $99,999",
    "$100,000 - $149,999",
    "Higher than $150,000",
)


def evaluate(model: torch.nn.Module, dataset: TileDataset, batch_size: int = 64):
    """(overall accuracy, per-category accuracy dict, confusion matrix)."""
    model.eval()
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False)
    n_classes = model.classifier.out_features
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    with torch.no_grad():
        for x, y in loader:
            pred = model(x).argmax(dim=1)
            for t, p in zip(y.tolist(), pred.tolist()):
                confusion[t, p] += 1
    total = confusion.sum()
    overall = float(np.trace(confusion)) / total if total else float("nan")
    per_category = {}
    for c in range(n_classes):
        n_c = confusion[c].sum()
        if n_c:
            per_category[c] = float(confusion[c, c]) / float(n_c)
    return overall, per_category, confusion


def write_accuracy_report(path: Path, overall: float, per_category: dict[int, float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["category", "label", "accuracy"])
        for c, acc in sorted(per_category.items()):
            label = CATEGORY_LABELS[c] if c < len(CATEGORY_LABELS) else f"category {c}"
            writer.writerow([c, label, f"{acc:.4f}"])
        writer.writerow(["overall", "", f"{overall:.4f}"])


def train_model(
    tiles_dir: Path,
    protocol: TrainProtocol,
    out_dir: Path | None = None,
    num_classes: int = 8,
) -> tuple[torch.nn.Module, dict]:
    """Train on the tile export's train split; evaluate on val and test.

    Checkpoints land in out_dir at every learning-rate milestone and at the
    end. Raises if some class present in the sidecar is missing from the
    training split.
    """
    protocol.validate()
    torch.manual_seed(protocol.seed)

    train_set = TileDataset(tiles_dir, split="train", input_size=protocol.input_size)
    if len(train_set) == 0:
        raise ValueError("training split is empty")
    all_labels = {r.category for r in TileDataset(tiles_dir, split=None, input_size=1).records}
    train_labels = set(train_set.labels().tolist())
    missing = sorted(all_labels - train_labels)
    if missing:
        raise ValueError(f"classes missing from the training split: {missing}")

    generator = torch.Generator().manual_seed(protocol.seed)
    loader = DataLoader(
        train_set, batch_size=protocol.batch_size, shuffle=True, generator=generator
    )
    model = build_model(num_classes)
    optimizer = torch.optim.SGD(
        model.parameters(),
        lr=protocol.lr,
        momentum=protocol.momentum,
        weight_decay=protocol.weight_decay,
    )
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=protocol.milestones, gamma=protocol.lr_gamma
    )
    loss_fn = torch.nn.CrossEntropyLoss()

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    history = {"train_loss": []}
    for epoch in range(protocol.epochs):
        model.train()
        total_loss = 0.0
        seen = 0
        for x, y in loader:
            optimizer.zero_grad()
            loss = loss_fn(model(x), y)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * x.shape[0]
            seen += x.shape[0]
        scheduler.step()
        history["train_loss"].append(total_loss / seen)
        logger.info("epoch %d/%d loss %.4f", epoch + 1, protocol.epochs, total_loss / seen)
        if out_dir is not None and (epoch + 1) in protocol.milestones:
            torch.save(model.state_dict(), out_dir / f"checkpoint_epoch{epoch + 1:03d}.pt")

    for split in ("val", "test"):
        dataset = TileDataset(tiles_dir, split=split, input_size=protocol.input_size)
        if len(dataset) == 0:
            continue
        overall, per_category, _ = evaluate(model, dataset, protocol.batch_size)
        history[f"{split}_accuracy"] = overall
        history[f"{split}_per_category"] = per_category
        logger.info("%s accuracy %.4f", split, overall)
        if out_dir is not None:
            write_accuracy_report(out_dir / f"accuracy_{split}.csv", overall, per_category)
    if out_dir is not None:
        torch.save(model.state_dict(), out_dir / "model_final.pt")
    return model, history


def load_checkpoint(path: Path, num_classes: int = 8) -> torch.nn.Module:
    model = build_model(num_classes)
    model.load_state_dict(torch.load(path, map_location="cpu", weights_only=True))
    model.eval()
    return model
