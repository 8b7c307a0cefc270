import json
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from figground.geodata import FootprintPolygon, ResidentialZone

settings.register_profile(
    "ci", max_examples=50, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def feature(geometry, properties=None, fid=None):
    out = {"type": "Feature", "geometry": geometry, "properties": properties or {}}
    if fid is not None:
        out["id"] = fid
    return out


def collection(features) -> bytes:
    return json.dumps({"type": "FeatureCollection", "features": list(features)}).encode()


def square_coords(cx, cy, side):
    h = side / 2.0
    return [[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h], [cx - h, cy - h]]


def rect_fp(cx, cy, w, h, angle_deg=0.0, fid="b") -> FootprintPolygon:
    hw, hh = w / 2.0, h / 2.0
    ring = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh), (-hw, -hh)], dtype=np.float64)
    if angle_deg:
        rad = math.radians(angle_deg)
        c, s = math.cos(rad), math.sin(rad)
        ring = ring @ np.array([[c, s], [-s, c]])
    ring += (cx, cy)
    return FootprintPolygon(exterior=ring, holes=[], id=fid)


def metric_zone(cx, cy, w, h, code="R1") -> ResidentialZone:
    ring = np.array(square_coords(cx, cy, 1.0), dtype=np.float64)
    ring[:, 0] = cx + (ring[:, 0] - cx) * w
    ring[:, 1] = cy + (ring[:, 1] - cy) * h
    return ResidentialZone(exterior=ring, holes=[], zone_code=code)


@pytest.fixture
def fixture_zones():
    """~21 km^2 of residential zones in a metric frame: three rectangles
    and one square with a hole punched out."""
    zones = [
        metric_zone(0.0, 0.0, 3000.0, 2500.0),
        metric_zone(3600.0, 500.0, 2000.0, 3000.0),
        metric_zone(-1000.0, 3200.0, 2500.0, 2000.0),
    ]
    outer = np.array(square_coords(2500.0, -2400.0, 1800.0), dtype=np.float64)
    hole = np.array(square_coords(2500.0, -2400.0, 600.0), dtype=np.float64)[::-1].copy()
    zones.append(ResidentialZone(exterior=outer, holes=[hole], zone_code="R2"))
    return zones
