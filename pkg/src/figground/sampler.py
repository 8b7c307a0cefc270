"""Sample points inside residential zones and label them with income categories.

Sampling is dart throwing with a minimum-separation constraint: zones are
chosen proportionally to area, a candidate is drawn uniformly in the zone's
bounding box, and it is accepted only if it lies inside the zone and no prior
point is closer than `min_dist`. A uniform grid hash (cell = min_dist/sqrt(2))
makes the neighbor rejection O(1).
"""

from __future__ import annotations

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .geodata import IncomeIndex, LocalProjection, ResidentialZone

logger = logging.getLogger(__name__)

# Upper edges of the income categories; incomes of $150,000 and above (the two
# top survey ranges merged) all map to category 7.
INCOME_EDGES = (15000.0, 25000.0, 35000.0, 50000.0, 75000.0, 100000.0, 150000.0)

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

N_CATEGORIES = 8

SPLIT_NAMES = ("train", "val", "test")


def income_to_category(income: float) -> int:
    """Map median household income in dollars to a category 0-7."""
    if income < 0:
        raise ValueError(f"income must be non-negative, got {income}")
    return bisect_right(INCOME_EDGES, income)


@dataclass
class SamplePoint:
    id: str
    x: float  # region metric frame
    y: float
    lon: float = math.nan
    lat: float = math.nan
    zip: str | None = None
    category: int | None = None


class _GridHash:
    """Uniform grid over accepted points for minimum-distance rejection."""

    def __init__(self, min_dist: float):
        self.min_dist = min_dist
        self.cell = min_dist / math.sqrt(2.0)
        self.cells: dict[tuple[int, int], list[tuple[float, float]]] = {}

    def _key(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.cell), math.floor(y / self.cell))

    def fits(self, x: float, y: float) -> bool:
        cx, cy = self._key(x, y)
        d2 = self.min_dist * self.min_dist
        for ix in range(cx - 2, cx + 3):
            for iy in range(cy - 2, cy + 3):
                for px, py in self.cells.get((ix, iy), ()):
                    if (px - x) ** 2 + (py - y) ** 2 < d2:
                        return False
        return True

    def add(self, x: float, y: float) -> None:
        self.cells.setdefault(self._key(x, y), []).append((x, y))


def sample_points(
    zones: list[ResidentialZone],
    n: int,
    min_dist: float,
    seed: int,
    rejection_budget_factor: int = 30,
    projection: LocalProjection | None = None,
) -> list[SamplePoint]:
    """Draw up to `n` points inside `zones` with pairwise distance >= min_dist.

    Zones must be in a metric frame. Returns fewer than n points when the
    zones saturate (rejection budget of `rejection_budget_factor * n`
    consecutive failures exhausted). Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if min_dist <= 0:
        raise ValueError("min_dist must be positive")
    if not zones:
        logger.warning("sample_points: no residential zones, returning empty sample")
        return []
    areas = np.array([z.area() for z in zones], dtype=np.float64)
    total = float(areas.sum())
    if total <= 0:
        logger.warning("sample_points: zones have zero total area")
        return []
    cum = np.cumsum(areas)
    bboxes = [z.bbox() for z in zones]

    rng = np.random.default_rng(seed)
    grid = _GridHash(min_dist)
    points: list[SamplePoint] = []
    budget = rejection_budget_factor * n
    consecutive_failures = 0
    while len(points) < n and consecutive_failures < budget:
        zi = int(np.searchsorted(cum, rng.random() * total, side="right"))
        zi = min(zi, len(zones) - 1)
        xmin, ymin, xmax, ymax = bboxes[zi]
        x = float(rng.uniform(xmin, xmax))
        y = float(rng.uniform(ymin, ymax))
        if not zones[zi].contains(x, y) or not grid.fits(x, y):
            consecutive_failures += 1
            continue
        consecutive_failures = 0
        grid.add(x, y)
        pt = SamplePoint(id=f"p{len(points)}", x=x, y=y)
        if projection is not None:
            pt.lon, pt.lat = projection.unproject(x, y)
        points.append(pt)
    if len(points) < n:
        logger.warning(
            "sample_points: zones saturated at %d of %d requested points", len(points), n
        )
    return points


def label_point(point: SamplePoint, index: IncomeIndex) -> SamplePoint:
    """Fill zip and category from the income index; unlabeled on a miss."""
    z, income = index.lookup(point.lon, point.lat)
    point.zip = z
    point.category = income_to_category(income) if income is not None else None
    return point


def _split_sizes(m: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    """Largest-remainder apportionment of m items over the three splits."""
    base = [int(math.floor(r * m)) for r in ratios]
    remainder = m - sum(base)
    fracs = sorted(range(3), key=lambda i: (-(ratios[i] * m - base[i]), i))
    for i in range(remainder):
        base[fracs[i]] += 1
    return base[0], base[1], base[2]


def balance_and_split(
    points: list[SamplePoint],
    per_class_cap: int,
    ratios: tuple[float, float, float],
    seed: int,
) -> tuple[list[SamplePoint], list[SamplePoint], list[SamplePoint]]:
    """Cap each category, then split it train/val/test by the given ratios.

    Unlabeled points are excluded before balancing. Splits are disjoint, their
    union is the capped set, and per-category sizes are within one point of
    the exact ratios. Deterministic for a fixed seed.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    if per_class_cap < 1:
        raise ValueError("per_class_cap must be >= 1")
    labeled = [p for p in points if p.category is not None]
    if len(labeled) < len(points):
        logger.warning("balance_and_split: excluded %d unlabeled points", len(points) - len(labeled))

    by_cat: dict[int, list[SamplePoint]] = {}
    for p in labeled:
        by_cat.setdefault(p.category, []).append(p)

    train: list[SamplePoint] = []
    val: list[SamplePoint] = []
    test: list[SamplePoint] = []
    for cat in range(N_CATEGORIES):
        members = by_cat.get(cat, [])
        if not members:
            logger.warning("balance_and_split: category %d is empty", cat)
            continue
        rng = np.random.default_rng((seed, cat))
        order = rng.permutation(len(members))
        capped = [members[i] for i in order[:per_class_cap]]
        n_tr, n_va, _ = _split_sizes(len(capped), ratios)
        train.extend(capped[:n_tr])
        val.extend(capped[n_tr : n_tr + n_va])
        test.extend(capped[n_tr + n_va :])
    return train, val, test
