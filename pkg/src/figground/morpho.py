"""The four morphological feature histograms and the 40-d vector.

Feature layout (concatenation order is fixed):
  direction0..9  — building-edge orientation, 18-degree bins over [0, 180)
  density0..9    — multi-scale sliding-window coverage, decile bins
  area0..9       — per-building footprint area buckets (m^2)
  complexity0..9 — per-building contour complexity (perimeter / sqrt(area))

Each block is a frequency vector: it sums to 1 unless its empty condition
holds (no edge pixels / no member buildings), in which case it is all zeros.
Density always sums to 1 (every window lands in exactly one bucket).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geodata import FootprintPolygon
from .raster import TileGeometry, TileRaster

N_BINS = 10

# Minimum contour complexity of any simple polygon (attained by the circle).
MIN_COMPLEXITY = 2.0 * math.sqrt(math.pi)

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{family}{i}"
    for family in ("direction", "density", "area", "complexity")
    for i in range(N_BINS)
)

# Feature families in vector order, with report labels.
FAMILY_SLICES: dict[str, slice] = {
    "Directionality": slice(0, 10),
    "Density": slice(10, 20),
    "Building size": slice(20, 30),
    "Contour complexity": slice(30, 40),
}


@dataclass(frozen=True)
class BucketTable:
    """Bin edges for the four histograms; buckets partition each domain.

    Each tuple holds 11 edges for 10 half-open buckets [edges[b], edges[b+1]);
    the density top bucket is closed at 1.0, area and complexity are unbounded
    above.
    """

    direction_edges: tuple[float, ...] = tuple(18.0 * i for i in range(N_BINS + 1))
    density_edges: tuple[float, ...] = tuple(i / 10.0 for i in range(N_BINS + 1))
    area_edges: tuple[float, ...] = (
        0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 1000.0, math.inf,
    )
    complexity_edges: tuple[float, ...] = tuple(3.0 * (i + 1) for i in range(N_BINS)) + (math.inf,)

    def __post_init__(self):
        for edges in (self.direction_edges, self.density_edges, self.area_edges, self.complexity_edges):
            assert len(edges) == N_BINS + 1 and all(
                a < b for a, b in zip(edges, edges[1:])
            ), "bucket edges must be 11 increasing values"


DEFAULT_BUCKETS = BucketTable()


def density_histogram(binary: np.ndarray, resolution: int = 224) -> np.ndarray:
    """Multi-scale window density histogram over the binary raster.

    Windows: the full image once, plus half-size windows (stride = half mask,
    reflective padding = stride/2) and quarter-size windows under the same
    rule — 1 + 16 + 64 = 81 windows at 224. Window density is black pixels
    over window pixels; buckets are deciles, the last closed at 1.0.
    """
    if binary.shape != (resolution, resolution):
        raise ValueError(f"expected {resolution}x{resolution} raster, got {binary.shape}")
    counts = np.zeros(N_BINS, dtype=np.int64)
    total_windows = 0

    full_black = int(binary.sum())
    counts[_density_bucket(full_black, resolution * resolution)] += 1
    total_windows += 1

    for mask in (resolution // 2, resolution // 4):
        stride = mask // 2
        pad = stride // 2
        padded = np.pad(binary.astype(np.int64), pad, mode="reflect")
        # summed-area table with a leading zero row/column
        sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int64)
        sat[1:, 1:] = padded.cumsum(axis=0).cumsum(axis=1)
        size = padded.shape[0]
        offsets = range(0, size - mask + 1, stride)
        win_px = mask * mask
        for r in offsets:
            for c in offsets:
                black = int(sat[r + mask, c + mask] - sat[r, c + mask] - sat[r + mask, c] + sat[r, c])
                counts[_density_bucket(black, win_px)] += 1
                total_windows += 1
    return counts / float(total_windows)


def _density_bucket(black: int, total: int) -> int:
    # integer form of: v in [b/10, (b+1)/10), last bucket closed at 1
    return min((10 * black) // total, N_BINS - 1)


def area_histogram(members: list[FootprintPolygon], buckets: BucketTable = DEFAULT_BUCKETS) -> np.ndarray:
    """Frequency of member buildings per footprint-area bucket."""
    hist = np.zeros(N_BINS, dtype=np.float64)
    if not members:
        return hist
    edges = buckets.area_edges
    for poly in members:
        hist[_edge_bucket(poly.area(), edges)] += 1.0
    return hist / len(members)


def _edge_bucket(value: float, edges: tuple[float, ...]) -> int:
    # half-open [lo, hi) buckets
    for b in range(N_BINS - 1, -1, -1):
        if value >= edges[b]:
            return b
    return 0


def contour_complexity(poly: FootprintPolygon) -> float:
    """Exterior perimeter over the square root of the (net) footprint area.

    4.0 for a square, 2*sqrt(pi) in the circle limit; always above that bound
    for simple polygons.
    """
    area = poly.area()
    if area <= 0:
        raise ValueError(f"polygon {poly.id!r} has non-positive area")
    return poly.perimeter() / math.sqrt(area)


def complexity_histogram(members: list[FootprintPolygon], buckets: BucketTable = DEFAULT_BUCKETS) -> np.ndarray:
    """Frequency of member buildings per contour-complexity bucket."""
    hist = np.zeros(N_BINS, dtype=np.float64)
    if not members:
        return hist
    for poly in members:
        c = contour_complexity(poly)
        assert c >= 3.0, f"contour complexity {c} below the simple-polygon floor"
        hist[_edge_bucket(c, buckets.complexity_edges)] += 1.0
    return hist / len(members)


def direction_histogram(coverage: np.ndarray) -> np.ndarray:
    """Edge-orientation histogram over the anti-aliased coverage raster.

    Gradients come from centered differences [-1, 0, +1] on interior pixels
    (the 1-px border is skipped). A pixel is an edge pixel when its gradient
    magnitude is nonzero; its unsigned orientation atan2(gy, gx) folded into
    [0, 180) lands in one of ten 18-degree bins. Counts are unweighted.
    """
    gx = coverage[1:-1, 2:] - coverage[1:-1, :-2]
    gy = coverage[2:, 1:-1] - coverage[:-2, 1:-1]
    mag2 = gx * gx + gy * gy
    edge = mag2 > 1e-24  # g > 1e-12
    n_edges = int(edge.sum())
    if n_edges == 0:
        return np.zeros(N_BINS, dtype=np.float64)
    theta = np.degrees(np.arctan2(gy[edge], gx[edge])) % 180.0
    bins = np.minimum((theta // 18.0).astype(np.int64), N_BINS - 1)
    return np.bincount(bins, minlength=N_BINS) / float(n_edges)


@dataclass
class FeatureVector:
    """The 40-d tile descriptor: [direction | density | area | complexity]."""

    direction: np.ndarray
    density: np.ndarray
    area: np.ndarray
    complexity: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.direction, self.density, self.area, self.complexity])


def featurize(tile: TileGeometry, raster: TileRaster, buckets: BucketTable = DEFAULT_BUCKETS) -> FeatureVector:
    """Compute the full 40-d vector for one tile.

    Density and direction read the raster (binary and coverage channels);
    area and complexity read the unclipped member polygons.
    """
    return FeatureVector(
        direction=direction_histogram(raster.coverage),
        density=density_histogram(raster.binary, resolution=raster.resolution),
        area=area_histogram(tile.members, buckets),
        complexity=complexity_histogram(tile.members, buckets),
    )
