"""Input parsing and local metric projection.

Inputs are WGS84 GeoJSON (footprints, land use, zip boundaries) and a UTF-8
CSV with a header row (zip-level median income). Parsed polygons keep their
geographic coordinates; projection into a metric frame happens per use site
(a region frame for sampling, a per-tile frame for rasterization).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError
from .geometry import Polygon, normalize_ring, ring_is_simple, signed_ring_area

logger = logging.getLogger(__name__)

METERS_PER_DEGREE_LAT = 111320.0


@dataclass
class FootprintPolygon(Polygon):
    """One building outline; MultiPolygon features are split into parts."""

    id: str = ""


@dataclass
class ResidentialZone(Polygon):
    zone_code: str = ""


@dataclass
class LocalProjection:
    """Equirectangular projection around an origin point.

    x = (lon - lon0) * k_x, y = (lat - lat0) * k_y with k_y = 111320 m/deg and
    k_x = k_y * cos(lat0). Adequate within a few hundred meters of the origin.
    """

    lon0: float
    lat0: float
    k_x: float = field(init=False)
    k_y: float = field(init=False)

    def __post_init__(self):
        if abs(self.lat0) >= 85.0:
            raise ValueError(f"projection origin latitude {self.lat0} out of range (|lat| < 85)")
        self.k_y = METERS_PER_DEGREE_LAT
        self.k_x = self.k_y * math.cos(math.radians(self.lat0))

    def project(self, lon: float, lat: float) -> tuple[float, float]:
        return (lon - self.lon0) * self.k_x, (lat - self.lat0) * self.k_y

    def unproject(self, x: float, y: float) -> tuple[float, float]:
        return self.lon0 + x / self.k_x, self.lat0 + y / self.k_y

    def project_ring(self, ring: np.ndarray) -> np.ndarray:
        out = np.empty_like(ring)
        out[:, 0] = (ring[:, 0] - self.lon0) * self.k_x
        out[:, 1] = (ring[:, 1] - self.lat0) * self.k_y
        return out

    def project_polygon(self, poly: Polygon) -> list[np.ndarray]:
        return [self.project_ring(r) for r in poly.rings()]


def _load_feature_collection(data: bytes) -> list[dict]:
    try:
        doc = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed GeoJSON at byte offset {e.pos}: {e.msg}") from e
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError("expected a GeoJSON FeatureCollection")
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise ParseError("FeatureCollection has no feature list")
    return feats


def _polygon_parts(geometry: dict) -> list[list] | None:
    """Coordinate arrays of each polygon part, or None for non-polygon types."""
    if not isinstance(geometry, dict):
        return None
    gtype = geometry.get("type")
    if gtype == "Polygon":
        return [geometry.get("coordinates", [])]
    if gtype == "MultiPolygon":
        return list(geometry.get("coordinates", []))
    return None


def _build_polygon(rings: list) -> tuple[np.ndarray, list[np.ndarray]] | None:
    """Normalize one polygon part (exterior + holes). None if invalid."""
    if not rings:
        return None
    exterior = normalize_ring(rings[0], ccw=True)
    if exterior is None or not ring_is_simple(exterior):
        return None
    holes = []
    for raw in rings[1:]:
        hole = normalize_ring(raw, ccw=False)
        if hole is None or not ring_is_simple(hole):
            return None  # reject, do not repair
        holes.append(hole)
    return exterior, holes


@dataclass
class ParsedFootprints:
    footprints: list[FootprintPolygon]
    rejected: int = 0  # invalid rings (self-intersection, degenerate)
    skipped: int = 0  # non-polygon geometries


def parse_footprints(data: bytes) -> ParsedFootprints:
    """Parse a footprint FeatureCollection into normalized building polygons.

    MultiPolygon features are split: each part counts as an independent
    building. Invalid rings are rejected, never repaired.
    """
    feats = _load_feature_collection(data)
    out: list[FootprintPolygon] = []
    rejected = skipped = 0
    for i, feat in enumerate(feats):
        parts = _polygon_parts(feat.get("geometry"))
        if parts is None:
            skipped += 1
            continue
        fid = feat.get("id")
        if fid is None:
            fid = (feat.get("properties") or {}).get("id", f"fp{i}")
        multi = len(parts) > 1
        for j, rings in enumerate(parts):
            built = _build_polygon(rings)
            if built is None:
                rejected += 1
                continue
            exterior, holes = built
            pid = f"{fid}.{j}" if multi else str(fid)
            out.append(FootprintPolygon(exterior=exterior, holes=holes, id=pid))
    if skipped:
        logger.warning("parse_footprints: skipped %d non-polygon geometries", skipped)
    if rejected:
        logger.warning("parse_footprints: rejected %d invalid polygons", rejected)
    return ParsedFootprints(out, rejected=rejected, skipped=skipped)


@dataclass
class ParsedZones:
    zones: list[ResidentialZone]
    missing_code: int = 0
    rejected: int = 0


def parse_landuse(data: bytes, residential_codes: set[str], code_property: str = "code") -> ParsedZones:
    """Keep land-use features whose code is in the residential set."""
    feats = _load_feature_collection(data)
    zones: list[ResidentialZone] = []
    missing = rejected = 0
    codes = set(residential_codes)
    for feat in feats:
        props = feat.get("properties") or {}
        code = props.get(code_property)
        if code is None:
            missing += 1
            continue
        code = str(code)
        if code not in codes:
            continue
        parts = _polygon_parts(feat.get("geometry"))
        if parts is None:
            rejected += 1
            continue
        for rings in parts:
            built = _build_polygon(rings)
            if built is None:
                rejected += 1
                continue
            exterior, holes = built
            zones.append(ResidentialZone(exterior=exterior, holes=holes, zone_code=code))
    if missing:
        logger.warning("parse_landuse: %d features missing %r property", missing, code_property)
    if rejected:
        logger.warning("parse_landuse: rejected %d invalid residential geometries", rejected)
    return ParsedZones(zones, missing_code=missing, rejected=rejected)


@dataclass
class _ZipShape:
    zip: str
    polygon: Polygon
    area_m2: float


@dataclass
class IncomeIndex:
    """Point -> (zip, median income) lookup over zip boundary polygons.

    Shapes are tested smallest-area first so overlapping boundaries resolve
    deterministically. Zips whose polygon carries no income row stay in the
    index flagged unlabeled (income None).
    """

    shapes: list[_ZipShape]
    income: dict[str, float]
    dropped_zips: int = 0  # income rows without any polygon
    unlabeled_zips: int = 0  # polygons without an income row
    rejected_rows: int = 0
    duplicate_zips: int = 0

    def lookup(self, lon: float, lat: float) -> tuple[str | None, float | None]:
        for shape in self.shapes:
            xmin, ymin, xmax, ymax = shape.polygon.bbox()
            if not (xmin <= lon <= xmax and ymin <= lat <= ymax):
                continue
            if shape.polygon.contains(lon, lat):
                return shape.zip, self.income.get(shape.zip)
        return None, None


def _approx_metric_area(poly: Polygon) -> float:
    """Shoelace area of a geographic polygon scaled to square meters."""
    lat0 = float(poly.exterior[:-1, 1].mean())
    kx = METERS_PER_DEGREE_LAT * math.cos(math.radians(lat0))
    a = abs(signed_ring_area(poly.exterior))
    for h in poly.holes:
        a -= abs(signed_ring_area(h))
    return a * kx * METERS_PER_DEGREE_LAT


def parse_income(csv_data: bytes, zip_geojson: bytes, zip_property: str = "zip") -> IncomeIndex:
    """Join the income CSV (columns zip, median_income) with zip polygons."""
    text = csv_data.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "zip" not in reader.fieldnames or "median_income" not in reader.fieldnames:
        raise ParseError("income CSV needs a header row with columns: zip, median_income")
    income: dict[str, float] = {}
    rejected = duplicates = 0
    for row in reader:
        z = (row.get("zip") or "").strip()
        raw = (row.get("median_income") or "").strip()
        if not z:
            rejected += 1
            continue
        try:
            value = float(raw)
        except ValueError:
            rejected += 1
            continue
        if z in income:
            duplicates += 1
            logger.warning("parse_income: duplicate zip %s, last value wins", z)
        income[z] = value

    feats = _load_feature_collection(zip_geojson)
    shapes: list[_ZipShape] = []
    zips_with_polygon: set[str] = set()
    for feat in feats:
        props = feat.get("properties") or {}
        z = props.get(zip_property)
        if z is None:
            continue
        z = str(z)
        parts = _polygon_parts(feat.get("geometry"))
        if parts is None:
            continue
        for rings in parts:
            built = _build_polygon(rings)
            if built is None:
                continue
            poly = Polygon(exterior=built[0], holes=built[1])
            shapes.append(_ZipShape(zip=z, polygon=poly, area_m2=_approx_metric_area(poly)))
            zips_with_polygon.add(z)

    dropped = [z for z in income if z not in zips_with_polygon]
    for z in dropped:
        logger.warning("parse_income: zip %s has income but no polygon, dropped", z)
        del income[z]
    unlabeled = sorted(z for z in zips_with_polygon if z not in income)
    if unlabeled:
        logger.warning("parse_income: %d zip polygons have no income row (unlabeled)", len(unlabeled))

    shapes.sort(key=lambda s: (s.area_m2, s.zip))  # smallest-area polygon wins ties
    return IncomeIndex(
        shapes=shapes,
        income=income,
        dropped_zips=len(dropped),
        unlabeled_zips=len(unlabeled),
        rejected_rows=rejected,
        duplicate_zips=duplicates,
    )
