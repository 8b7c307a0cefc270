"""dcnn: train, evaluate, and interpret the tile classifier.

All subcommands consume a tile directory exported by the figure-ground
pipeline (`figground rasterize` / `figground synth`).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import torch

from .cam import cam_map
from .cluster import embed_and_cluster
from .data import TileDataset, load_tile_image
from .model import TrainProtocol
from .train import evaluate, load_checkpoint, train_model, write_accuracy_report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the classifier on the train split")
    p.add_argument("--tiles", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("dcnn_out"))
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--lr-step", type=int, default=30)
    p.add_argument("--input-size", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-classes", type=int, default=8)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--tiles", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--input-size", type=int, default=80)
    p.add_argument("--num-classes", type=int, default=8)

    p = sub.add_parser("cam", help="write a class activation map for one tile")
    p.add_argument("--tiles", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--tile-id", required=True)
    p.add_argument("--class-idx", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--input-size", type=int, default=80)
    p.add_argument("--num-classes", type=int, default=8)

    p = sub.add_parser("cluster", help="cluster one class's tiles by embedding")
    p.add_argument("--tiles", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--category", type=int, default=None, help="restrict to one class")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("clusters"))
    p.add_argument("--input-size", type=int, default=80)
    p.add_argument("--num-classes", type=int, default=8)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, FileNotFoundError, IndexError) as e:
        print(f"[{args.command}] error: {e}", file=sys.stderr)
        return 2


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "train":
        protocol = TrainProtocol(
            input_size=args.input_size,
            batch_size=args.batch_size,
            epochs=args.epochs,
            lr=args.lr,
            lr_step=args.lr_step,
            seed=args.seed,
        )
        _, history = train_model(args.tiles, protocol, out_dir=args.out, num_classes=args.num_classes)
        for split in ("val", "test"):
            if f"{split}_accuracy" in history:
                print(f"{split} accuracy: {history[f'{split}_accuracy']:.4f}")
        print(args.out / "model_final.pt")
    elif args.command == "eval":
        model = load_checkpoint(args.model, num_classes=args.num_classes)
        dataset = TileDataset(args.tiles, split=args.split, input_size=args.input_size)
        overall, per_category, _ = evaluate(model, dataset)
        print(f"{args.split} accuracy: {overall:.4f}")
        if args.out is not None:
            write_accuracy_report(args.out, overall, per_category)
            print(args.out)
    elif args.command == "cam":
        from PIL import Image

        model = load_checkpoint(args.model, num_classes=args.num_classes)
        arr = load_tile_image(args.tiles, args.tile_id, args.input_size)
        image = torch.from_numpy(arr).unsqueeze(0).repeat(3, 1, 1)
        heat = cam_map(model, image, args.class_idx)
        Image.fromarray((heat * 255.0).astype(np.uint8), mode="L").save(args.out)
        print(args.out)
    elif args.command == "cluster":
        model = load_checkpoint(args.model, num_classes=args.num_classes)
        dataset = TileDataset(args.tiles, split=None, input_size=args.input_size)
        if args.category is not None:
            keep = [i for i, r in enumerate(dataset.records) if r.category == args.category]
            dataset.records = [dataset.records[i] for i in keep]
            dataset._images = [dataset._images[i] for i in keep]
        assignments, paths = embed_and_cluster(
            model, args.tiles, dataset, k=args.k, seed=args.seed, out_dir=args.out
        )
        sizes = np.bincount(assignments, minlength=args.k)
        print("cluster sizes:", " ".join(str(int(s)) for s in sizes))
        for path in paths:
            print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
