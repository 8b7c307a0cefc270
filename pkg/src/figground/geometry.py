"""Planar polygon primitives used throughout the pipeline.

Rings are numpy arrays of shape (n, 2), closed (first vertex repeated at the
end). Exterior rings are counter-clockwise (positive signed area), holes are
clockwise. All functions work in whatever planar frame the caller uses
(degrees before projection, meters after); only the metric frame is meaningful
for areas and distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Polygon",
    "signed_ring_area",
    "ring_perimeter",
    "ring_is_closed",
    "ring_is_simple",
    "normalize_ring",
    "point_in_rings",
    "lattice_parity",
    "clip_ring_to_box",
    "ring_bbox",
]


def signed_ring_area(ring: np.ndarray) -> float:
    """Shoelace area of a closed ring; positive for counter-clockwise."""
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def ring_perimeter(ring: np.ndarray) -> float:
    d = np.diff(ring, axis=0)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def ring_is_closed(ring: np.ndarray) -> bool:
    return bool(np.all(ring[0] == ring[-1]))


def ring_bbox(ring: np.ndarray) -> tuple[float, float, float, float]:
    """(xmin, ymin, xmax, ymax) of a ring."""
    return (
        float(ring[:, 0].min()),
        float(ring[:, 1].min()),
        float(ring[:, 0].max()),
        float(ring[:, 1].max()),
    )


def _segments_properly_intersect(p1, p2, q1, q2) -> bool:
    """True if open segments (p1,p2) and (q1,q2) cross or overlap.

    Shared endpoints do not count; a vertex lying strictly inside the other
    segment does.
    """

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_segment(a, b, c):
        # c collinear with a-b assumed; is c strictly between?
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
            and not (c[0] == a[0] and c[1] == a[1])
            and not (c[0] == b[0] and c[1] == b[1])
        )

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)

    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    # collinear / touching cases
    if o1 == 0 and on_segment(p1, p2, q1):
        return True
    if o2 == 0 and on_segment(p1, p2, q2):
        return True
    if o3 == 0 and on_segment(q1, q2, p1):
        return True
    if o4 == 0 and on_segment(q1, q2, p2):
        return True
    return False


def ring_is_simple(ring: np.ndarray) -> bool:
    """Brute-force O(n^2) self-intersection check on a closed ring.

    Adjacent edges (sharing a vertex, including the closing wrap) are allowed
    to touch at that vertex only.
    """
    n = ring.shape[0] - 1  # edge count
    if n < 3:
        return False
    edges = [(ring[i], ring[i + 1]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            if adjacent:
                # neighbors may only share their common endpoint; a full
                # overlap (spike) still counts as non-simple
                p1, p2 = edges[i]
                q1, q2 = edges[j]
                if _segments_properly_intersect(p1, p2, q1, q2):
                    return False
                continue
            p1, p2 = edges[i]
            q1, q2 = edges[j]
            # a revisited vertex pinches the ring
            for a in (p1, p2):
                for b in (q1, q2):
                    if a[0] == b[0] and a[1] == b[1]:
                        return False
            if _segments_properly_intersect(p1, p2, q1, q2):
                return False
    return True


def normalize_ring(coords, ccw: bool = True) -> np.ndarray | None:
    """Close a coordinate ring, drop duplicate consecutive vertices, and fix
    orientation. Returns None for degenerate rings (< 3 distinct vertices or
    zero area)."""
    arr = np.asarray(coords, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
        return None
    if np.all(arr[0] == arr[-1]):
        arr = arr[:-1]
    keep = np.ones(arr.shape[0], dtype=bool)
    keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
    arr = arr[keep]
    if arr.shape[0] < 3:
        return None
    closed = np.vstack([arr, arr[:1]])
    area = signed_ring_area(closed)
    if area == 0.0:
        return None
    if (area > 0) != ccw:
        closed = closed[::-1].copy()
    return closed


def point_in_rings(x: float, y: float, rings) -> bool:
    """Even-odd containment test over a set of closed rings.

    With an exterior plus hole rings this yields the polygon interior.
    """
    inside = False
    for ring in rings:
        xs, ys = ring[:, 0], ring[:, 1]
        for i in range(ring.shape[0] - 1):
            y1, y2 = ys[i], ys[i + 1]
            if (y1 > y) != (y2 > y):
                xint = (xs[i + 1] - xs[i]) * (y - y1) / (y2 - y1) + xs[i]
                if x < xint:
                    inside = not inside
    return inside


def lattice_parity(rings, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized even-odd test of a point lattice against closed rings.

    xs are sample-column x coordinates, ys sample-row y coordinates; returns a
    bool array of shape (len(ys), len(xs)). All rings are treated together, so
    exterior plus holes yields the polygon interior directly.
    """
    if len(rings) == 1:
        p1, p2 = rings[0][:-1], rings[0][1:]
    else:
        p1 = np.concatenate([r[:-1] for r in rings], axis=0)
        p2 = np.concatenate([r[1:] for r in rings], axis=0)
    keep = p1[:, 1] != p2[:, 1]  # horizontal edges never cross a horizontal ray
    p1, p2 = p1[keep], p2[keep]
    if p1.shape[0] == 0:
        return np.zeros((ys.size, xs.size), dtype=bool)
    x1, y1 = p1[:, 0], p1[:, 1]
    x2, y2 = p2[:, 0], p2[:, 1]
    Y = ys[:, np.newaxis]  # (R, 1)
    straddle = (y1 > Y) != (y2 > Y)  # (R, E)
    xint = x1 + (Y - y1) * (x2 - x1) / (y2 - y1)  # (R, E)
    np.copyto(xint, -np.inf, where=~straddle)
    crossings = (xint[:, :, np.newaxis] > xs).sum(axis=1)  # (R, C)
    return (crossings & 1).astype(bool)


def clip_ring_to_box(
    ring: np.ndarray, xmin: float, ymin: float, xmax: float, ymax: float
) -> np.ndarray | None:
    """Sutherland-Hodgman clip of a closed ring against an axis-aligned box.

    Returns a closed ring (orientation preserved) or None when the clip is
    empty or degenerate.
    """
    pts = [tuple(p) for p in ring[:-1]]

    def clip_plane(points, inside, intersect):
        out = []
        m = len(points)
        for i in range(m):
            cur = points[i]
            prev = points[i - 1]
            cur_in = inside(cur)
            prev_in = inside(prev)
            if cur_in:
                if not prev_in:
                    out.append(intersect(prev, cur))
                out.append(cur)
            elif prev_in:
                out.append(intersect(prev, cur))
        return out

    def x_cross(bound):
        def f(p, q):
            t = (bound - p[0]) / (q[0] - p[0])
            return (bound, p[1] + t * (q[1] - p[1]))

        return f

    def y_cross(bound):
        def f(p, q):
            t = (bound - p[1]) / (q[1] - p[1])
            return (p[0] + t * (q[0] - p[0]), bound)

        return f

    pts = clip_plane(pts, lambda p: p[0] >= xmin, x_cross(xmin))
    if not pts:
        return None
    pts = clip_plane(pts, lambda p: p[0] <= xmax, x_cross(xmax))
    if not pts:
        return None
    pts = clip_plane(pts, lambda p: p[1] >= ymin, y_cross(ymin))
    if not pts:
        return None
    pts = clip_plane(pts, lambda p: p[1] <= ymax, y_cross(ymax))
    if not pts:
        return None
    arr = np.asarray(pts, dtype=np.float64)
    keep = np.ones(arr.shape[0], dtype=bool)
    keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
    arr = arr[keep]
    if np.all(arr[0] == arr[-1]):
        arr = arr[:-1]
    if arr.shape[0] < 3:
        return None
    closed = np.vstack([arr, arr[:1]])
    if signed_ring_area(closed) == 0.0:
        return None
    return closed


@dataclass
class Polygon:
    """A polygon with an exterior ring and optional holes.

    Invariants after construction through `geodata` parsing: exterior closed
    and counter-clockwise, holes closed and clockwise, exterior simple.
    """

    exterior: np.ndarray
    holes: list[np.ndarray] = field(default_factory=list)

    def area(self) -> float:
        """Net area: exterior minus holes."""
        a = abs(signed_ring_area(self.exterior))
        for h in self.holes:
            a -= abs(signed_ring_area(h))
        return a

    def perimeter(self) -> float:
        """Perimeter of the exterior ring only."""
        return ring_perimeter(self.exterior)

    def centroid(self) -> tuple[float, float]:
        """Area centroid, holes subtracted."""
        cx = cy = 0.0
        total = 0.0
        for ring in [self.exterior, *self.holes]:
            x, y = ring[:-1, 0], ring[:-1, 1]
            xn, yn = ring[1:, 0], ring[1:, 1]
            cross = x * yn - xn * y
            a = 0.5 * float(np.sum(cross))
            if a == 0.0:
                continue
            cx += float(np.sum((x + xn) * cross)) / 6.0
            cy += float(np.sum((y + yn) * cross)) / 6.0
            total += a
        if total == 0.0:
            return float(self.exterior[0, 0]), float(self.exterior[0, 1])
        return cx / total, cy / total

    def contains(self, x: float, y: float) -> bool:
        return point_in_rings(x, y, [self.exterior, *self.holes])

    def bbox(self) -> tuple[float, float, float, float]:
        return ring_bbox(self.exterior)

    def rings(self) -> list[np.ndarray]:
        return [self.exterior, *self.holes]
