#!/usr/bin/env python3
"""Build a tiny geographic demo dataset and a ready-to-run config.

Writes GeoJSON footprints, a residential land-use polygon, two zip polygons
with contrasting incomes, the income CSV, and demo.cfg into --out. Run the
geographic flow afterwards with:

    figground run --config OUT/demo.cfg
"""

import argparse
import json
import sys
from pathlib import Path

from figground.synth import generate_region, two_class_default

LON0, LAT0 = -71.0, 42.0


def feature(geometry, properties=None, fid=None):
    out = {"type": "Feature", "geometry": geometry, "properties": properties or {}}
    if fid is not None:
        out["id"] = fid
    return out


def box_ring(lon_min, lat_min, lon_max, lat_max):
    return [
        [lon_min, lat_min], [lon_max, lat_min], [lon_max, lat_max],
        [lon_min, lat_max], [lon_min, lat_min],
    ]


def dump(path: Path, features) -> None:
    path.write_text(
        json.dumps({"type": "FeatureCollection", "features": features}), encoding="utf-8"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo_data"))
    parser.add_argument("--seed", type=int, default=21)
    parser.add_argument("--width-m", type=float, default=1400.0)
    parser.add_argument("--height-m", type=float, default=900.0)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    recipes = two_class_default().recipes
    west = generate_region(
        recipes[0], args.width_m / 2, args.height_m, seed=args.seed, origin_lonlat=(LON0 - 0.006, LAT0)
    )
    east = generate_region(
        recipes[1], args.width_m / 2, args.height_m, seed=args.seed + 1, origin_lonlat=(LON0 + 0.006, LAT0)
    )
    feats = [
        feature({"type": "Polygon", "coordinates": [b.exterior.tolist()]}, fid=f"{side}-{b.id}")
        for side, group in (("w", west), ("e", east))
        for b in group
    ]
    dump(args.out / "footprints.geojson", feats)

    dlon = (args.width_m + 400.0) / 82000.0
    dlat = (args.height_m + 400.0) / 111320.0
    zone = feature(
        {"type": "Polygon", "coordinates": [box_ring(LON0 - dlon, LAT0 - dlat, LON0 + dlon, LAT0 + dlat)]},
        {"code": "R1"},
    )
    dump(args.out / "landuse.geojson", [zone])

    zips = [
        feature(
            {"type": "Polygon", "coordinates": [box_ring(LON0 - dlon, LAT0 - dlat, LON0, LAT0 + dlat)]},
            {"zip": "01001"},
        ),
        feature(
            {"type": "Polygon", "coordinates": [box_ring(LON0, LAT0 - dlat, LON0 + dlon, LAT0 + dlat)]},
            {"zip": "01002"},
        ),
    ]
    dump(args.out / "zips.geojson", zips)
    (args.out / "income.csv").write_text("zip,median_income\n01001,28000\n01002,118000\n")

    (args.out / "demo.cfg").write_text(
        "footprints = footprints.geojson\n"
        "landuse = landuse.geojson\n"
        "income_csv = income.csv\n"
        "zip_boundaries = zips.geojson\n"
        "residential_codes = R1\n"
        "out_dir = out\n"
        "n_points = 60\n"
        "min_dist_m = 80\n"
        "seed = 5\n"
        "balance_cap = 30\n"
        "n_trees = 50\n",
        encoding="utf-8",
    )
    print(f"demo dataset in {args.out}; run: figground run --config {args.out / 'demo.cfg'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
