"""Synthetic neighborhoods for desk-scale validation.

Each class recipe describes a residential fabric: footprint shape family
(rectangle / L / cross), building size range, grid spacing with positional
jitter, and an orientation regime (street-aligned within a tile vs scattered
per building). Recipes realize the qualitative contrast between dense
grid-like fabrics of small houses and sparse fabrics of large articulated
plans, which gives the classifier a learnable, fully synthetic ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError
from .geodata import FootprintPolygon, LocalProjection
from .raster import TILE_SIZE_M, TileGeometry, make_tile

SHAPE_FAMILIES = ("rectangle", "L", "cross")

ORIENTATIONS = ("street", "scattered")

ARM_RATIO = 5.0  # arm length / arm width for L and cross plans


@dataclass
class ClassRecipe:
    name: str
    shapes: tuple[str, ...] = ("rectangle",)
    size_range: tuple[float, float] = (40.0, 60.0)  # footprint area, m^2
    spacing_m: float = 16.0  # grid pitch between building centers
    jitter_m: float = 1.5  # uniform positional jitter, +- per axis
    orientation: str = "street"
    aspect_range: tuple[float, float] = (1.0, 2.0)  # rectangles only
    angle_jitter_deg: float = 2.0  # street regime only

    def validate(self) -> None:
        if not self.shapes or any(s not in SHAPE_FAMILIES for s in self.shapes):
            raise GenerationError(f"recipe {self.name!r}: shapes must be among {SHAPE_FAMILIES}")
        lo, hi = self.size_range
        if not (0 < lo <= hi):
            raise GenerationError(f"recipe {self.name!r}: bad size range {self.size_range}")
        if self.orientation not in ORIENTATIONS:
            raise GenerationError(f"recipe {self.name!r}: orientation must be in {ORIENTATIONS}")
        if self.spacing_m <= 0 or self.jitter_m < 0:
            raise GenerationError(f"recipe {self.name!r}: bad spacing/jitter")
        if self.aspect_range[0] < 1.0 or self.aspect_range[0] > self.aspect_range[1]:
            raise GenerationError(f"recipe {self.name!r}: bad aspect range")
        # conservative non-overlap bound: circumscribed circles must fit
        r_max = 0.0
        for shape in self.shapes:
            aspect = self.aspect_range[1] if shape == "rectangle" else 1.0
            ring = _shape_ring(shape, hi, aspect)
            r_max = max(r_max, float(np.hypot(ring[:, 0], ring[:, 1]).max()))
        if self.spacing_m < 2.0 * r_max + 2.0 * self.jitter_m:
            raise GenerationError(
                f"recipe {self.name!r}: buildings cannot fit, spacing {self.spacing_m} m "
                f"< {2.0 * r_max + 2.0 * self.jitter_m:.1f} m required"
            )


@dataclass
class SyntheticSpec:
    recipes: list[ClassRecipe] = field(default_factory=list)

    def validate(self) -> None:
        if len(self.recipes) < 2:
            raise GenerationError("need recipes for at least 2 classes")
        for r in self.recipes:
            r.validate()


def two_class_default() -> SyntheticSpec:
    """Dense street-aligned small rectangles vs sparse scattered L/cross plans."""
    return SyntheticSpec(
        recipes=[
            ClassRecipe(name="dense-grid", shapes=("rectangle",), size_range=(40.0, 60.0),
                        spacing_m=16.0, jitter_m=1.0, orientation="street"),
            ClassRecipe(name="sparse-estate", shapes=("L", "cross"), size_range=(200.0, 400.0),
                        spacing_m=62.0, jitter_m=4.0, orientation="scattered"),
        ]
    )


def _rect_ring(area: float, aspect: float) -> np.ndarray:
    w = math.sqrt(area * aspect)
    h = math.sqrt(area / aspect)
    x, y = w / 2.0, h / 2.0
    return np.array([(-x, -y), (x, -y), (x, y), (-x, y), (-x, -y)], dtype=np.float64)


def _l_ring(area: float) -> np.ndarray:
    # two arms of length a and width t meeting at a corner; area = 2at - t^2
    t = math.sqrt(area / (2.0 * ARM_RATIO - 1.0))
    a = ARM_RATIO * t
    pts = np.array([(0, 0), (a, 0), (a, t), (t, t), (t, a), (0, a), (0, 0)], dtype=np.float64)
    pts -= pts[:-1].mean(axis=0)  # roughly center
    return pts


def _cross_ring(area: float) -> np.ndarray:
    # two crossing bars of span a and width t; area = 2at - t^2
    t = math.sqrt(area / (2.0 * ARM_RATIO - 1.0))
    a = ARM_RATIO * t
    h, w = t / 2.0, a / 2.0
    pts = [
        (-w, -h), (-h, -h), (-h, -w), (h, -w), (h, -h), (w, -h),
        (w, h), (h, h), (h, w), (-h, w), (-h, h), (-w, h), (-w, -h),
    ]
    return np.array(pts, dtype=np.float64)


def _shape_ring(shape: str, area: float, aspect: float) -> np.ndarray:
    if shape == "rectangle":
        return _rect_ring(area, aspect)
    if shape == "L":
        return _l_ring(area)
    if shape == "cross":
        return _cross_ring(area)
    raise GenerationError(f"unknown shape family {shape!r}")


def _rotate(ring: np.ndarray, angle_deg: float) -> np.ndarray:
    rad = math.radians(angle_deg)
    c, s = math.cos(rad), math.sin(rad)
    rot = np.array([[c, -s], [s, c]])
    return ring @ rot.T


def place_buildings(
    recipe: ClassRecipe,
    rng: np.random.Generator,
    xmin: float,
    ymin: float,
    xmax: float,
    ymax: float,
    id_prefix: str,
) -> list[FootprintPolygon]:
    """Realize a recipe on a jittered grid covering the given box."""
    spacing = recipe.spacing_m
    base_angle = float(rng.uniform(0.0, 180.0)) if recipe.orientation == "street" else None
    x0 = xmin - spacing + float(rng.uniform(0.0, spacing))
    y0 = ymin - spacing + float(rng.uniform(0.0, spacing))
    gx = np.arange(x0, xmax + spacing + 1e-9, spacing)
    gy = np.arange(y0, ymax + spacing + 1e-9, spacing)
    n = gx.size * gy.size
    areas = rng.uniform(recipe.size_range[0], recipe.size_range[1], n)
    shape_idx = rng.integers(0, len(recipe.shapes), n)
    aspects = rng.uniform(recipe.aspect_range[0], recipe.aspect_range[1], n)
    if base_angle is not None:
        angles = base_angle + rng.uniform(-recipe.angle_jitter_deg, recipe.angle_jitter_deg, n)
    else:
        angles = rng.uniform(0.0, 180.0, n)
    jitter = rng.uniform(-recipe.jitter_m, recipe.jitter_m, (n, 2))

    out: list[FootprintPolygon] = []
    k = 0
    for y in gy:
        for x in gx:
            shape = recipe.shapes[shape_idx[k]]
            aspect = float(aspects[k]) if shape == "rectangle" else 1.0
            ring = _rotate(_shape_ring(shape, float(areas[k]), aspect), float(angles[k]))
            ring += (x + jitter[k, 0], y + jitter[k, 1])
            out.append(FootprintPolygon(exterior=ring, holes=[], id=f"{id_prefix}b{k}"))
            k += 1
    return out


def generate_tile(
    recipe: ClassRecipe,
    rng: np.random.Generator,
    tile_id: str,
    category: int,
    size_m: float = TILE_SIZE_M,
) -> TileGeometry:
    half = size_m / 2.0
    buildings = place_buildings(recipe, rng, -half, -half, half, half, id_prefix=f"{tile_id}-")
    return make_tile(tile_id, category, buildings, size_m=size_m)


def generate_synthetic(
    spec: SyntheticSpec, n_tiles_per_class: int, seed: int, size_m: float = TILE_SIZE_M
) -> list[TileGeometry]:
    """Tiles for every recipe; class labels are recipe indices.

    Deterministic: tile i of class c draws from a generator seeded with
    (seed, c, i), so partial regeneration reproduces the same tiles.
    """
    spec.validate()
    if n_tiles_per_class < 0:
        raise GenerationError("n_tiles_per_class must be >= 0")
    tiles: list[TileGeometry] = []
    for c, recipe in enumerate(spec.recipes):
        for i in range(n_tiles_per_class):
            rng = np.random.default_rng((seed, c, i))
            tiles.append(generate_tile(recipe, rng, tile_id=f"synth-c{c}-{i:05d}", category=c, size_m=size_m))
    return tiles


def generate_region(
    recipe: ClassRecipe,
    width_m: float,
    height_m: float,
    seed: int,
    origin_lonlat: tuple[float, float] | None = None,
) -> list[FootprintPolygon]:
    """A contiguous field of one recipe, for region-prediction fixtures.

    Returns metric footprints centered on the origin, or geographic ones when
    `origin_lonlat` is given.
    """
    recipe.validate()
    rng = np.random.default_rng((seed, 0))
    buildings = place_buildings(
        recipe, rng, -width_m / 2.0, -height_m / 2.0, width_m / 2.0, height_m / 2.0, id_prefix="r"
    )
    if origin_lonlat is None:
        return buildings
    proj = LocalProjection(*origin_lonlat)
    out = []
    for b in buildings:
        ring = b.exterior.copy()
        ring[:, 0] = proj.lon0 + ring[:, 0] / proj.k_x
        ring[:, 1] = proj.lat0 + ring[:, 1] / proj.k_y
        out.append(FootprintPolygon(exterior=ring, holes=[], id=b.id))
    return out
