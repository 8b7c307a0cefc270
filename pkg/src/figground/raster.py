"""Clip footprints into 200 m tiles and render anti-aliased figure-ground rasters.

A tile is an axis-aligned box centered on a sample point, held in a tile-local
metric frame (origin at the tile center, y up, row 0 of the raster is the top
of the tile). Rasterization computes a per-pixel coverage fraction by 4x4
subpixel point sampling of the union of building interiors; the binary
figure-ground image is coverage thresholded at 0.5.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError
from .geodata import FootprintPolygon, LocalProjection
from .geometry import clip_ring_to_box, lattice_parity, ring_bbox

logger = logging.getLogger(__name__)

TILE_SIZE_M = 200.0
RESOLUTION_PX = 224
SUBSAMPLES = 4

TILES_CSV_SCHEMA = "figground/tiles/1"
GEOMETRY_SCHEMA = "figground/tile-geometry/1"


@dataclass
class TileGeometry:
    """Geometry of one tile: full polygons, centroid members, box-clipped parts.

    `members` (full polygons whose centroid falls inside the box) feed the
    per-building size/complexity features; `clipped` (intersections with the
    box) feed rendering. Clipping a building for feature purposes would
    corrupt its area and contour.
    """

    tile_id: str
    category: int | None
    polygons: list[FootprintPolygon]
    size_m: float = TILE_SIZE_M
    center_lonlat: tuple[float, float] | None = None
    split: str | None = None
    members: list[FootprintPolygon] = field(default_factory=list)
    clipped: list[FootprintPolygon] = field(default_factory=list)


def make_tile(
    tile_id: str,
    category: int | None,
    polygons: list[FootprintPolygon],
    size_m: float = TILE_SIZE_M,
    center_lonlat: tuple[float, float] | None = None,
    split: str | None = None,
) -> TileGeometry:
    """Build a TileGeometry from polygons already in the tile-local frame."""
    half = size_m / 2.0
    kept: list[FootprintPolygon] = []
    members: list[FootprintPolygon] = []
    clipped: list[FootprintPolygon] = []
    for poly in polygons:
        xmin, ymin, xmax, ymax = poly.bbox()
        if xmax < -half or xmin > half or ymax < -half or ymin > half:
            continue
        kept.append(poly)
        cx, cy = poly.centroid()
        if -half <= cx <= half and -half <= cy <= half:
            members.append(poly)
        ext = clip_ring_to_box(poly.exterior, -half, -half, half, half)
        if ext is None:
            continue
        holes = []
        for h in poly.holes:
            hc = clip_ring_to_box(h, -half, -half, half, half)
            if hc is not None:
                holes.append(hc)
        clipped.append(FootprintPolygon(exterior=ext, holes=holes, id=poly.id))
    return TileGeometry(
        tile_id=tile_id,
        category=category,
        polygons=kept,
        size_m=size_m,
        center_lonlat=center_lonlat,
        split=split,
        members=members,
        clipped=clipped,
    )


class FootprintIndex:
    """Uniform-grid spatial index over polygon bounding boxes."""

    def __init__(self, footprints: list[FootprintPolygon], cell_size: float):
        self.footprints = footprints
        self.cell = cell_size
        self.cells: dict[tuple[int, int], list[int]] = {}
        for i, fp in enumerate(footprints):
            xmin, ymin, xmax, ymax = fp.bbox()
            for cx in range(math.floor(xmin / cell_size), math.floor(xmax / cell_size) + 1):
                for cy in range(math.floor(ymin / cell_size), math.floor(ymax / cell_size) + 1):
                    self.cells.setdefault((cx, cy), []).append(i)

    def query(self, xmin: float, ymin: float, xmax: float, ymax: float) -> list[int]:
        """Indices of footprints whose bbox may intersect the query box."""
        hits: set[int] = set()
        for cx in range(math.floor(xmin / self.cell), math.floor(xmax / self.cell) + 1):
            for cy in range(math.floor(ymin / self.cell), math.floor(ymax / self.cell) + 1):
                hits.update(self.cells.get((cx, cy), ()))
        return sorted(hits)


def clip_tile(
    index: FootprintIndex,
    center_lonlat: tuple[float, float],
    tile_id: str,
    category: int | None = None,
    size_m: float = TILE_SIZE_M,
    split: str | None = None,
) -> TileGeometry:
    """Cut a tile out of geographic footprints around a center point.

    Footprints (and the index) are in WGS84 degrees; the tile gets its own
    equirectangular projection centered on the sample point.
    """
    proj = LocalProjection(*center_lonlat)
    half = size_m / 2.0
    lon_min, lat_min = proj.unproject(-half, -half)
    lon_max, lat_max = proj.unproject(half, half)
    local: list[FootprintPolygon] = []
    for i in index.query(lon_min, lat_min, lon_max, lat_max):
        fp = index.footprints[i]
        local.append(
            FootprintPolygon(
                exterior=proj.project_ring(fp.exterior),
                holes=[proj.project_ring(h) for h in fp.holes],
                id=fp.id,
            )
        )
    return make_tile(tile_id, category, local, size_m=size_m, center_lonlat=center_lonlat, split=split)


@dataclass
class TileRaster:
    """Anti-aliased coverage in [0,1] plus the thresholded binary image."""

    coverage: np.ndarray  # float64 (res, res), fraction of pixel covered
    binary: np.ndarray  # uint8 (res, res), 1 = building
    size_m: float
    resolution: int

    @property
    def scale_m_per_px(self) -> float:
        return self.size_m / self.resolution


def rasterize(
    tile: TileGeometry, resolution: int = RESOLUTION_PX, subsamples: int = SUBSAMPLES
) -> TileRaster:
    """Render the tile's clipped polygons into a coverage raster.

    Coverage of a pixel is the fraction of its subsamples^2 sample points that
    fall inside the union of building interiors (holes excluded by even-odd
    parity); overlapping buildings saturate at 1.
    """
    n = resolution * subsamples
    step = tile.size_m / n
    half = tile.size_m / 2.0
    xs = -half + (np.arange(n) + 0.5) * step
    ys = half - (np.arange(n) + 0.5) * step  # row 0 = top
    mask = np.zeros((n, n), dtype=bool)
    for poly in tile.clipped:
        xmin, ymin, xmax, ymax = ring_bbox(poly.exterior)
        c0 = max(0, int((xmin + half) / step) - 1)
        c1 = min(n, int((xmax + half) / step) + 2)
        r0 = max(0, int((half - ymax) / step) - 1)
        r1 = min(n, int((half - ymin) / step) + 2)
        if c0 >= c1 or r0 >= r1:
            continue
        parity = lattice_parity(poly.rings(), xs[c0:c1], ys[r0:r1])
        mask[r0:r1, c0:c1] |= parity
    m8 = mask.astype(np.uint8)
    counts = m8.reshape(resolution, subsamples, n).sum(axis=1, dtype=np.uint16)
    counts = counts.reshape(resolution, resolution, subsamples).sum(axis=2, dtype=np.uint16)
    coverage = counts / float(subsamples * subsamples)
    binary = (coverage >= 0.5).astype(np.uint8)
    return TileRaster(coverage=coverage, binary=binary, size_m=tile.size_m, resolution=resolution)


def raster_to_image(raster: TileRaster) -> np.ndarray:
    """8-bit grayscale image: 0 = building (black), 255 = background (white).

    Anti-aliased edge pixels carry intermediate values.
    """
    return (255 - np.rint(raster.coverage * 255.0)).astype(np.uint8)


def write_pgm(path: Path, image: np.ndarray) -> None:
    h, w = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(image.astype(np.uint8).tobytes())


def write_image(path: Path, image: np.ndarray, fmt: str) -> None:
    if fmt == "pgm":
        write_pgm(path, image)
    elif fmt == "png":
        from PIL import Image

        Image.fromarray(image, mode="L").save(path)
    else:
        raise ValueError(f"unsupported tile image format: {fmt}")


def _rings_to_json(poly: FootprintPolygon) -> dict:
    return {
        "id": poly.id,
        "exterior": poly.exterior.tolist(),
        "holes": [h.tolist() for h in poly.holes],
    }


def _rings_from_json(obj: dict) -> FootprintPolygon:
    return FootprintPolygon(
        exterior=np.asarray(obj["exterior"], dtype=np.float64),
        holes=[np.asarray(h, dtype=np.float64) for h in obj.get("holes", [])],
        id=str(obj.get("id", "")),
    )


def write_tile_dir(
    out_dir: Path,
    tiles: list[TileGeometry],
    resolution: int = RESOLUTION_PX,
    subsamples: int = SUBSAMPLES,
    fmt: str = "pgm",
    write_images: bool = True,
) -> None:
    """Write the tile hand-off directory: images, sidecar CSV, geometry JSONL."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "tiles.csv", "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# schema: {TILES_CSV_SCHEMA}\n")
        f.write("id,category,split\n")
        for t in tiles:
            cat = "" if t.category is None else str(t.category)
            split = t.split or ""
            f.write(f"{t.tile_id},{cat},{split}\n")
    with open(out_dir / "geometry.jsonl", "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps({"schema": GEOMETRY_SCHEMA}) + "\n")
        for t in tiles:
            rec = {
                "id": t.tile_id,
                "category": t.category,
                "split": t.split,
                "size_m": t.size_m,
                "center_lonlat": list(t.center_lonlat) if t.center_lonlat else None,
                "polygons": [_rings_to_json(p) for p in t.polygons],
            }
            f.write(json.dumps(rec) + "\n")
    if write_images:
        for t in tiles:
            image = raster_to_image(rasterize(t, resolution=resolution, subsamples=subsamples))
            write_image(out_dir / f"{t.tile_id}.{fmt}", image, fmt)


def read_tile_dir(tile_dir: Path) -> list[TileGeometry]:
    """Load tiles back from geometry.jsonl (members/clipped recomputed)."""
    tile_dir = Path(tile_dir)
    path = tile_dir / "geometry.jsonl"
    if not path.exists():
        raise ParseError(f"no geometry.jsonl in {tile_dir}")
    tiles: list[TileGeometry] = []
    with open(path, "r", encoding="utf-8") as f:
        header = json.loads(f.readline())
        if header.get("schema") != GEOMETRY_SCHEMA:
            raise SchemaError(
                f"geometry.jsonl schema {header.get('schema')!r}, expected {GEOMETRY_SCHEMA!r}"
            )
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            center = rec.get("center_lonlat")
            tiles.append(
                make_tile(
                    tile_id=str(rec["id"]),
                    category=rec.get("category"),
                    polygons=[_rings_from_json(p) for p in rec.get("polygons", [])],
                    size_m=float(rec.get("size_m", TILE_SIZE_M)),
                    center_lonlat=tuple(center) if center else None,
                    split=rec.get("split"),
                )
            )
    return tiles
