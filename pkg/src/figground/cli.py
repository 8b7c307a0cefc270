"""Command-line entry point.

Subcommands mirror the pipeline stages; every one takes --config (a key =
value manifest) and an optional --seed override. Exit code 0 on success,
nonzero with a stage-tagged message on stderr otherwise.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import PipelineConfig
from .errors import FiggroundError, StageError


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="key = value manifest file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figground", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("ingest", help="parse and validate all inputs"))

    p = sub.add_parser("sample", help="sample, label, balance, and split points")
    _add_common(p)
    p.add_argument("--n", type=int, default=None, help="number of points to sample")
    p.add_argument("--min-dist", type=float, default=None, help="minimum separation in meters")
    p.add_argument("--cap", type=int, default=None, help="per-category balance cap")

    p = sub.add_parser("rasterize", help="clip and render tiles for sampled points")
    _add_common(p)
    p.add_argument("--tiles-out", type=Path, default=None, help="tile directory (default OUT/tiles)")
    p.add_argument("--format", choices=("pgm", "png"), default=None, help="tile image format")

    p = sub.add_parser("featurize", help="compute 40-d feature vectors for tiles")
    _add_common(p)
    p.add_argument("--tiles", type=Path, default=None, help="tile directory to read")
    p.add_argument("--out", type=Path, default=None, help="output features CSV")

    p = sub.add_parser("split", help="materialize train/val/test feature files")
    _add_common(p)
    p.add_argument("--tiles", type=Path, default=None)
    p.add_argument("--features", type=Path, default=None)

    p = sub.add_parser("train-rf", help="train the random forest and evaluate")
    _add_common(p)
    p.add_argument("--features", type=Path, default=None, help="training features CSV")
    p.add_argument("--model-out", type=Path, default=None)
    p.add_argument("--n-trees", type=int, default=None)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=None)

    p = sub.add_parser("importance", help="OOB permutation importance report")
    _add_common(p)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--features", type=Path, default=None)

    p = sub.add_parser("predict-region", help="predict categories over a lon/lat grid")
    _add_common(p)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--footprints", type=Path, default=None)
    p.add_argument("--bbox", required=True, help="lon_min,lat_min,lon_max,lat_max")
    p.add_argument("--step-m", type=float, default=200.0)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("synth", help="generate synthetic labeled tiles")
    _add_common(p)
    p.add_argument("--tiles-out", type=Path, default=None)
    p.add_argument("--tiles-per-class", type=int, default=None)

    _add_common(sub.add_parser("report", help="assemble the run report"))
    _add_common(sub.add_parser("run", help="run every stage end to end"))
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = PipelineConfig.from_file(Path(args.config))
        if args.seed is not None:
            cfg.seed = args.seed
        _dispatch(args, cfg)
    except StageError as e:
        print(str(e), file=sys.stderr)
        return 2
    except FiggroundError as e:
        print(f"[{args.command}] error: {e}", file=sys.stderr)
        return 2
    return 0


def _dispatch(args: argparse.Namespace, cfg: PipelineConfig) -> None:
    cmd = args.command
    if cmd == "run":
        report = pipeline.run_pipeline(cfg)
        print(report)
        return
    cfg.validate()
    if cmd == "ingest":
        pipeline.run_ingest(cfg)
        print(cfg.out_dir / "ingest_report.txt")
    elif cmd == "sample":
        if args.n is not None:
            cfg.n_points = args.n
        if args.min_dist is not None:
            cfg.min_dist_m = args.min_dist
        if args.cap is not None:
            cfg.balance_cap = args.cap
        print(_staged("sample", pipeline.run_sample, cfg))
    elif cmd == "rasterize":
        if args.format is not None:
            cfg.tile_format = args.format
        print(_staged("rasterize", pipeline.run_rasterize, cfg, args.tiles_out))
    elif cmd == "featurize":
        print(_staged("featurize", pipeline.run_featurize, cfg, args.tiles, args.out))
    elif cmd == "split":
        outputs = _staged("split", pipeline.run_split, cfg, args.tiles, args.features)
        for path in outputs.values():
            print(path)
    elif cmd == "train-rf":
        for name in ("n_trees", "features_per_split", "max_depth", "min_samples_leaf"):
            value = getattr(args, name)
            if value is not None:
                setattr(cfg, name, value)
        print(_staged("train-rf", pipeline.run_train, cfg, args.features, None, None, args.model_out))
    elif cmd == "importance":
        print(_staged("importance", pipeline.run_importance, cfg, args.model, args.features))
    elif cmd == "predict-region":
        bbox = tuple(float(v) for v in args.bbox.split(","))
        if len(bbox) != 4:
            raise FiggroundError("--bbox needs lon_min,lat_min,lon_max,lat_max")
        model = args.model or (cfg.out_dir / "model.txt")
        footprints = args.footprints or cfg.footprints
        if footprints is None:
            raise FiggroundError("no footprints configured or passed via --footprints")
        print(
            _staged(
                "predict-region", pipeline.predict_region, cfg, model, footprints, bbox, args.step_m, args.out
            )
        )
    elif cmd == "synth":
        if args.tiles_per_class is not None:
            cfg.synth_tiles_per_class = args.tiles_per_class
        print(_staged("synth", pipeline.run_synth, cfg, args.tiles_out))
    elif cmd == "report":
        print(_staged("report", pipeline.run_report, cfg))


def _staged(stage: str, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except FiggroundError as e:
        raise StageError(stage, str(e)) from e


if __name__ == "__main__":
    sys.exit(main())
