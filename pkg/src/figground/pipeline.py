"""Stage orchestration, artifact schemas, and report emission.

Every artifact CSV starts with a `# schema:` line; stages refuse inputs whose
schema version does not match. All randomness flows from the config seed, so
a rerun with the same config produces byte-identical artifacts. On a stage
failure a `_STALE` marker naming the failed stage is left in the output
directory; it is removed when a run completes.
"""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path

import numpy as np

from . import forest as rf
from .config import PipelineConfig
from .errors import ConfigError, FiggroundError, SchemaError, StageError
from .geodata import (
    LocalProjection,
    ResidentialZone,
    parse_footprints,
    parse_income,
    parse_landuse,
)
from .morpho import FEATURE_NAMES, featurize
from .raster import (
    TILES_CSV_SCHEMA,
    FootprintIndex,
    clip_tile,
    rasterize,
    read_tile_dir,
    write_tile_dir,
)
from .sampler import (
    CATEGORY_LABELS,
    N_CATEGORIES,
    SPLIT_NAMES,
    balance_and_split,
    label_point,
    sample_points,
    _split_sizes,
)
from .synth import generate_synthetic

logger = logging.getLogger(__name__)

POINTS_SCHEMA = "figground/points/1"
FEATURES_SCHEMA = "figground/features/1"
METRICS_SCHEMA = "figground/metrics/1"
ACCURACY_SCHEMA = "figground/accuracy/1"
CONFUSION_SCHEMA = "figground/confusion/1"
IMPORTANCE_SCHEMA = "figground/importance/1"
REGION_SCHEMA = "figground/region/1"

# Stated in every report so downstream consumers know which convention the
# direction block uses (conventions differ across HOG write-ups).
ORIENTATION_NOTE = (
    "edge orientation = atan2(gy, gx) mod 180 deg (vertical material edge reads 0 deg)"
)


def fmt(x: float) -> str:
    """Shortest exact decimal for a float; round-trips bit-identically."""
    return repr(float(x))


def write_csv(path: Path, schema: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# schema: {schema}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path: Path, schema: str) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise FiggroundError(f"missing artifact: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        first = f.readline().strip()
        if first != f"# schema: {schema}":
            raise SchemaError(f"{path.name}: schema line {first!r}, expected {schema!r}")
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader if row]
    return header, rows


# --------------------------------------------------------------------------
# stages


def run_ingest(cfg: PipelineConfig) -> dict:
    """Parse and validate all configured inputs; write a count summary."""
    cfg.require("footprints", "landuse", "income_csv", "zip_boundaries", "residential_codes")
    fp = parse_footprints(cfg.footprints.read_bytes())
    zones = parse_landuse(
        cfg.landuse.read_bytes(), set(cfg.residential_codes), cfg.landuse_code_property
    )
    income = parse_income(cfg.income_csv.read_bytes(), cfg.zip_boundaries.read_bytes(), cfg.zip_property)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    lines = [
        "ingest summary",
        f"footprints parsed: {len(fp.footprints)}",
        f"footprints rejected (invalid rings): {fp.rejected}",
        f"footprints skipped (non-polygon): {fp.skipped}",
        f"residential zones: {len(zones.zones)}",
        f"landuse features missing code: {zones.missing_code}",
        f"landuse geometries rejected: {zones.rejected}",
        f"zip shapes: {len(income.shapes)}",
        f"income rows rejected: {income.rejected_rows}",
        f"income duplicate zips: {income.duplicate_zips}",
        f"income zips without polygon (dropped): {income.dropped_zips}",
        f"zip polygons without income (unlabeled): {income.unlabeled_zips}",
    ]
    (cfg.out_dir / "ingest_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {"footprints": fp, "zones": zones, "income": income}


def _region_projection(zones: list[ResidentialZone]) -> LocalProjection:
    lons = [v for z in zones for v in (z.bbox()[0], z.bbox()[2])]
    lats = [v for z in zones for v in (z.bbox()[1], z.bbox()[3])]
    return LocalProjection((min(lons) + max(lons)) / 2.0, (min(lats) + max(lats)) / 2.0)


def run_sample(cfg: PipelineConfig, ingested: dict | None = None) -> Path:
    """Sample, label, balance, and split points; writes points.csv."""
    cfg.require("landuse", "income_csv", "zip_boundaries", "residential_codes")
    if ingested is None:
        zones_parse = parse_landuse(
            cfg.landuse.read_bytes(), set(cfg.residential_codes), cfg.landuse_code_property
        )
        income = parse_income(
            cfg.income_csv.read_bytes(), cfg.zip_boundaries.read_bytes(), cfg.zip_property
        )
    else:
        zones_parse = ingested["zones"]
        income = ingested["income"]
    zones = zones_parse.zones
    if not zones:
        raise FiggroundError("no residential zones to sample from")
    proj = _region_projection(zones)
    zones_metric = [
        ResidentialZone(
            exterior=proj.project_ring(z.exterior),
            holes=[proj.project_ring(h) for h in z.holes],
            zone_code=z.zone_code,
        )
        for z in zones
    ]
    points = sample_points(
        zones_metric,
        n=cfg.n_points,
        min_dist=cfg.min_dist_m,
        seed=cfg.seed,
        rejection_budget_factor=cfg.rejection_budget_factor,
        projection=proj,
    )
    for pt in points:
        label_point(pt, income)
    train, val, test = balance_and_split(points, cfg.balance_cap, cfg.split_ratios, seed=cfg.seed)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "points.csv"
    rows = []
    for split_name, split_points in zip(SPLIT_NAMES, (train, val, test)):
        for pt in split_points:
            rows.append(
                [pt.id, fmt(pt.lon), fmt(pt.lat), pt.zip or "", str(pt.category), split_name]
            )
    write_csv(out, POINTS_SCHEMA, ["id", "lon", "lat", "zip", "category", "split"], rows)
    logger.info("sample: %d points retained (%d/%d/%d)", len(rows), len(train), len(val), len(test))
    return out


def run_rasterize(cfg: PipelineConfig, tiles_out: Path | None = None) -> Path:
    """Cut and render a tile for every sampled point; writes the tile dir."""
    cfg.require("footprints")
    _, rows = read_csv(cfg.out_dir / "points.csv", POINTS_SCHEMA)
    fp = parse_footprints(cfg.footprints.read_bytes())
    cell_deg = cfg.tile_size_m / 111320.0
    index = FootprintIndex(fp.footprints, cell_size=cell_deg)
    tiles = []
    for row in rows:
        pid, lon, lat, _zip, category, split = row
        tiles.append(
            clip_tile(
                index,
                (float(lon), float(lat)),
                tile_id=pid,
                category=int(category),
                size_m=cfg.tile_size_m,
                split=split,
            )
        )
    out = tiles_out or (cfg.out_dir / "tiles")
    write_tile_dir(
        out, tiles, resolution=cfg.resolution_px, subsamples=cfg.subsamples, fmt=cfg.tile_format
    )
    logger.info("rasterize: wrote %d tiles to %s", len(tiles), out)
    return out


def run_synth(cfg: PipelineConfig, tiles_out: Path | None = None) -> Path:
    """Generate synthetic labeled tiles and write them as a tile dir."""
    spec = cfg.synthetic_spec()
    tiles = generate_synthetic(spec, cfg.synth_tiles_per_class, seed=cfg.seed, size_m=cfg.tile_size_m)
    # per-class split assignment, same ratio rule as the sampler
    by_class: dict[int, list] = {}
    for t in tiles:
        by_class.setdefault(t.category, []).append(t)
    for c, members in sorted(by_class.items()):
        rng = np.random.default_rng((cfg.seed, 101, c))
        order = rng.permutation(len(members))
        n_tr, n_va, _ = _split_sizes(len(members), cfg.split_ratios)
        for rank, idx in enumerate(order):
            if rank < n_tr:
                members[idx].split = "train"
            elif rank < n_tr + n_va:
                members[idx].split = "val"
            else:
                members[idx].split = "test"
    out = tiles_out or (cfg.out_dir / "tiles")
    write_tile_dir(
        out, tiles, resolution=cfg.resolution_px, subsamples=cfg.subsamples, fmt=cfg.tile_format
    )
    logger.info("synth: wrote %d tiles (%d classes) to %s", len(tiles), len(by_class), out)
    return out


def run_featurize(cfg: PipelineConfig, tiles_dir: Path | None = None, out_csv: Path | None = None) -> Path:
    """Compute the 40-d vector for every tile in the tile dir."""
    tiles_dir = tiles_dir or (cfg.out_dir / "tiles")
    tiles = read_tile_dir(tiles_dir)
    rows = []
    for t in tiles:
        raster = rasterize(t, resolution=cfg.resolution_px, subsamples=cfg.subsamples)
        vec = featurize(t, raster).concat()
        cat = "" if t.category is None else str(t.category)
        rows.append([t.tile_id, cat] + [fmt(v) for v in vec])
    out = out_csv or (cfg.out_dir / "features.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, FEATURES_SCHEMA, ["id", "category", *FEATURE_NAMES], rows)
    logger.info("featurize: %d tiles -> %s", len(rows), out)
    return out


def run_split(cfg: PipelineConfig, tiles_dir: Path | None = None, features_csv: Path | None = None) -> dict[str, Path]:
    """Materialize per-split feature files using the tile sidecar assignment."""
    tiles_dir = tiles_dir or (cfg.out_dir / "tiles")
    features_csv = features_csv or (cfg.out_dir / "features.csv")
    header, feat_rows = read_csv(features_csv, FEATURES_SCHEMA)
    _, tile_rows = read_csv(Path(tiles_dir) / "tiles.csv", TILES_CSV_SCHEMA)
    split_of = {row[0]: row[2] for row in tile_rows}
    outputs: dict[str, Path] = {}
    for split_name in SPLIT_NAMES:
        rows = [r for r in feat_rows if split_of.get(r[0]) == split_name]
        out = cfg.out_dir / f"features_{split_name}.csv"
        write_csv(out, FEATURES_SCHEMA, header, rows)
        outputs[split_name] = out
        if not rows:
            logger.warning("split: %s is empty", split_name)
    return outputs


def load_features(path: Path) -> tuple[list[str], np.ndarray, np.ndarray]:
    """(ids, X, y) from a features CSV; unlabeled rows get category -1."""
    header, rows = read_csv(path, FEATURES_SCHEMA)
    if header[:2] != ["id", "category"] or tuple(header[2:]) != FEATURE_NAMES:
        raise SchemaError(f"{Path(path).name}: unexpected feature columns")
    ids = [r[0] for r in rows]
    y = np.array([int(r[1]) if r[1] else -1 for r in rows], dtype=np.int64)
    X = np.array([[float(v) for v in r[2:]] for r in rows], dtype=np.float64)
    return ids, X, y


def _confusion(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[t, p] += 1
    return cm


def run_train(
    cfg: PipelineConfig,
    features_train: Path | None = None,
    features_val: Path | None = None,
    features_test: Path | None = None,
    model_out: Path | None = None,
    labels: tuple[str, ...] = CATEGORY_LABELS,
) -> Path:
    """Train the forest, save the model, evaluate on val/test splits."""
    features_train = features_train or (cfg.out_dir / "features_train.csv")
    _, X_train, y_train = load_features(features_train)
    if X_train.shape[0] == 0:
        raise FiggroundError("training split is empty")
    model = rf.train(X_train, y_train, cfg.forest_params)
    model_out = model_out or (cfg.out_dir / "model.txt")
    rf.save_model(model, model_out)

    metrics: list[tuple[str, str]] = [
        ("n_train", str(X_train.shape[0])),
        ("n_trees", str(cfg.n_trees)),
        ("features_per_split", str(cfg.features_per_split)),
        ("oob_error", fmt(rf.oob_error(model, X_train, y_train))),
    ]
    for split_name, path in (("val", features_val), ("test", features_test)):
        path = path or (cfg.out_dir / f"features_{split_name}.csv")
        if not Path(path).exists():
            continue
        _, X_eval, y_eval = load_features(path)
        metrics.append((f"n_{split_name}", str(X_eval.shape[0])))
        if X_eval.shape[0] == 0:
            continue
        pred, _ = rf.predict_matrix(model, X_eval)
        cm = _confusion(y_eval, pred, model.n_classes)
        accuracy = float(np.trace(cm)) / float(cm.sum())
        metrics.append((f"{split_name}_accuracy", fmt(accuracy)))
        if split_name == "test":
            write_csv(
                cfg.out_dir / "confusion_matrix.csv",
                CONFUSION_SCHEMA,
                ["true_category"] + [f"pred{j}" for j in range(model.n_classes)],
                ([str(i)] + [str(v) for v in cm[i]] for i in range(model.n_classes)),
            )
            rows = []
            for c in range(model.n_classes):
                n_c = int(cm[c].sum())
                if n_c == 0:
                    continue
                correct = int(cm[c, c])
                label = labels[c] if c < len(labels) else f"category {c}"
                rows.append([str(c), label, str(n_c), str(correct), fmt(correct / n_c)])
            write_csv(
                cfg.out_dir / "accuracy_by_category.csv",
                ACCURACY_SCHEMA,
                ["category", "label", "n", "correct", "accuracy"],
                rows,
            )
    write_csv(cfg.out_dir / "metrics.csv", METRICS_SCHEMA, ["key", "value"], ([k, v] for k, v in metrics))
    return model_out


def run_importance(
    cfg: PipelineConfig, model_path: Path | None = None, features_csv: Path | None = None
) -> Path:
    """OOB permutation importance per dimension, grouped into families."""
    model = rf.load_model(model_path or (cfg.out_dir / "model.txt"))
    _, X, y = load_features(features_csv or (cfg.out_dir / "features_train.csv"))
    report = rf.permutation_importance(model, X, y, seed=cfg.seed)
    write_csv(
        cfg.out_dir / "importance_per_dimension.csv",
        IMPORTANCE_SCHEMA,
        ["feature", "importance"],
        ([name, fmt(v)] for name, v in zip(report.feature_names, report.per_dimension)),
    )
    out = cfg.out_dir / "importance_families.txt"
    if report.per_family is not None:
        names = list(report.per_family)
        widths = [max(len(n), 6) for n in names]
        head = "  ".join(n.ljust(w) for n, w in zip(names, widths))
        vals = "  ".join(f"{report.per_family[n]:.4f}".ljust(w) for n, w in zip(names, widths))
        body = head + "\n" + vals + "\n"
    else:
        body = "per-family grouping undefined off the 40-d layout\n"
    out.write_text(
        "feature family importance (normalized permutation importance)\n" + body,
        encoding="utf-8",
    )
    return out


def run_report(cfg: PipelineConfig) -> Path:
    """Assemble the human-readable run report from emitted artifacts."""
    _, cm_rows = read_csv(cfg.out_dir / "confusion_matrix.csv", CONFUSION_SCHEMA)
    cm = np.array([[int(v) for v in r[1:]] for r in cm_rows], dtype=np.int64)
    total = int(cm.sum())
    overall = float(np.trace(cm)) / total if total else math.nan
    _, acc_rows = read_csv(cfg.out_dir / "accuracy_by_category.csv", ACCURACY_SCHEMA)
    _, metric_rows = read_csv(cfg.out_dir / "metrics.csv", METRICS_SCHEMA)
    metrics = dict(metric_rows)
    families = (cfg.out_dir / "importance_families.txt").read_text(encoding="utf-8")

    lines = [
        "figground run report",
        "====================",
        "",
        f"seed: {cfg.seed}",
        f"tile: {cfg.tile_size_m:g} m at {cfg.resolution_px} px",
        f"forest: {metrics.get('n_trees')} trees, {metrics.get('features_per_split')} features per split",
        f"train/val/test sizes: {metrics.get('n_train')}/{metrics.get('n_val')}/{metrics.get('n_test')}",
        f"out-of-bag error (train): {float(metrics['oob_error']):.4f}",
        "",
        "prediction accuracy within each category (test split)",
        "------------------------------------------------------",
    ]
    for row in acc_rows:
        _, label, n, _, acc = row
        lines.append(f"{label:<22} {float(acc) * 100.0:6.2f}%   (n={n})")
    lines += [
        f"{'overall':<22} {overall * 100.0:6.2f}%   (n={total})",
        "",
        families.rstrip("\n"),
        "",
        f"note: {ORIENTATION_NOTE}",
    ]
    out = cfg.out_dir / "run_report.txt"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def predict_region(
    cfg: PipelineConfig,
    model_path: Path,
    footprints_path: Path,
    bbox: tuple[float, float, float, float],
    step_m: float,
    out_csv: Path | None = None,
) -> Path:
    """Tile a lon/lat grid over a region and predict each point's category.

    Grid points with no buildings in range are still predicted (empty-tile
    feature vector) but flagged low confidence.
    """
    model = rf.load_model(model_path)
    fp = parse_footprints(Path(footprints_path).read_bytes())
    index = FootprintIndex(fp.footprints, cell_size=cfg.tile_size_m / 111320.0)
    lon_min, lat_min, lon_max, lat_max = bbox
    proj = LocalProjection((lon_min + lon_max) / 2.0, (lat_min + lat_max) / 2.0)
    x0, y0 = proj.project(lon_min, lat_min)
    x1, y1 = proj.project(lon_max, lat_max)
    xs = np.arange(x0, x1 + 1e-9, step_m)
    ys = np.arange(y0, y1 + 1e-9, step_m)

    points = []
    vectors = []
    empties = []
    for y in ys:
        for x in xs:
            lon, lat = proj.unproject(float(x), float(y))
            tile = clip_tile(index, (lon, lat), tile_id="q", size_m=cfg.tile_size_m)
            raster = rasterize(tile, resolution=cfg.resolution_px, subsamples=cfg.subsamples)
            vectors.append(featurize(tile, raster).concat())
            points.append((lon, lat))
            empties.append(len(tile.polygons) == 0)
    X = np.asarray(vectors, dtype=np.float64)
    pred, votes = rf.predict_matrix(model, X)
    sorted_votes = np.sort(votes, axis=1)
    margin = (sorted_votes[:, -1] - sorted_votes[:, -2]) / float(len(model.trees))

    out = out_csv or (cfg.out_dir / "region.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = (
        [fmt(lon), fmt(lat), str(int(p)), fmt(m), "1" if e else "0"]
        for (lon, lat), p, m, e in zip(points, pred, margin, empties)
    )
    write_csv(out, REGION_SCHEMA, ["lon", "lat", "category", "margin", "low_confidence"], rows)
    return out


# --------------------------------------------------------------------------
# orchestration

GEO_STAGES = ("ingest", "sample", "rasterize", "featurize", "split", "train-rf", "importance", "report")
SYNTH_STAGES = ("synth", "featurize", "split", "train-rf", "importance", "report")


def run_pipeline(cfg: PipelineConfig) -> Path:
    """Run every stage end to end; returns the run report path.

    Geographic mode when footprint inputs are configured, synthetic mode when
    only recipes are. Any stage failure raises StageError and leaves a _STALE
    marker naming the failed stage.
    """
    cfg.validate()
    if cfg.footprints is not None:
        stages = GEO_STAGES
        labels = CATEGORY_LABELS
    elif cfg.synth_recipes:
        stages = SYNTH_STAGES
        labels = tuple(r.name for r in cfg.synth_recipes)
    else:
        raise ConfigError("config has neither geographic inputs nor synthetic recipes")

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    stale = cfg.out_dir / "_STALE"
    stale.write_text("run in progress\n", encoding="utf-8")
    ingested = None
    try:
        for stage in stages:
            try:
                if stage == "ingest":
                    ingested = run_ingest(cfg)
                elif stage == "sample":
                    run_sample(cfg, ingested)
                elif stage == "rasterize":
                    run_rasterize(cfg)
                elif stage == "synth":
                    run_synth(cfg)
                elif stage == "featurize":
                    run_featurize(cfg)
                elif stage == "split":
                    run_split(cfg)
                elif stage == "train-rf":
                    run_train(cfg, labels=labels)
                elif stage == "importance":
                    run_importance(cfg)
                elif stage == "report":
                    run_report(cfg)
            except StageError:
                raise
            except Exception as e:
                raise StageError(stage, str(e)) from e
    except StageError as e:
        stale.write_text(f"stale: run failed at stage {e.stage}\n", encoding="utf-8")
        raise
    stale.unlink()
    return cfg.out_dir / "run_report.txt"
