import numpy as np
import pytest

from conftest import rect_fp
from figground.errors import SchemaError
from figground.geodata import FootprintPolygon, LocalProjection
from figground.raster import (
    FootprintIndex,
    clip_tile,
    make_tile,
    raster_to_image,
    rasterize,
    read_tile_dir,
    write_tile_dir,
)

PX = 200.0 / 224.0


def test_membership_rules():
    inside = rect_fp(0, 0, 20, 10, fid="in")
    straddle = rect_fp(99, 0, 30, 10, fid="edge")  # centroid at x=99 < 100: member
    outside_centroid = rect_fp(108, 0, 30, 10, fid="out")  # centroid outside, overlaps box
    far = rect_fp(500, 500, 10, 10, fid="far")
    tile = make_tile("t", 0, [inside, straddle, outside_centroid, far])
    assert {p.id for p in tile.members} == {"in", "edge"}
    assert {p.id for p in tile.clipped} == {"in", "edge", "out"}
    assert {p.id for p in tile.polygons} == {"in", "edge", "out"}


def test_empty_tile():
    tile = make_tile("t", None, [])
    raster = rasterize(tile)
    assert raster.coverage.sum() == 0.0
    assert raster.binary.sum() == 0


def test_full_cover():
    tile = make_tile("t", 0, [rect_fp(0, 0, 400, 400)])
    raster = rasterize(tile)
    assert np.all(raster.coverage == 1.0)
    assert np.all(raster.binary == 1)


def test_square_pixel_count():
    side = 100 * PX  # exactly 100 pixels
    tile = make_tile("t", 0, [rect_fp(0, 0, side, side)])
    raster = rasterize(tile)
    black = int(raster.binary.sum())
    assert abs(black - 10_000) <= 100  # within 1%


def test_coverage_matches_shoelace_area():
    fixtures = [
        [rect_fp(0, 0, 50, 30)],
        [rect_fp(-40, 10, 35, 22, angle_deg=30.0)],
        [rect_fp(25, -35, 60, 12, angle_deg=75.0)],
    ]
    for polys in fixtures:
        tile = make_tile("t", 0, polys)
        raster = rasterize(tile)
        rendered = float(raster.coverage.sum()) * PX * PX
        want = sum(p.area() for p in polys)
        assert abs(rendered - want) / want < 0.01


def test_coverage_bounds_and_threshold():
    tile = make_tile("t", 0, [rect_fp(3.3, -7.7, 41.0, 17.0, angle_deg=13.0)])
    raster = rasterize(tile)
    assert raster.coverage.min() >= 0.0 and raster.coverage.max() <= 1.0
    assert np.array_equal(raster.binary, (raster.coverage >= 0.5).astype(np.uint8))


def test_overlapping_buildings_saturate():
    tile = make_tile("t", 0, [rect_fp(0, 0, 40, 40), rect_fp(5, 5, 40, 40)])
    raster = rasterize(tile)
    assert raster.coverage.max() == 1.0


def test_translation_consistency():
    base = rect_fp(-11.3, 4.9, 33.0, 21.0, angle_deg=28.0)
    shift = 7  # pixels
    moved = FootprintPolygon(
        exterior=base.exterior + np.array([shift * PX, 0.0]), holes=[], id="m"
    )
    r0 = rasterize(make_tile("a", 0, [base]))
    r1 = rasterize(make_tile("b", 0, [moved]))
    assert np.array_equal(r0.coverage[:, : 224 - shift], r1.coverage[:, shift:])


def test_scale_property():
    raster = rasterize(make_tile("t", 0, []))
    assert raster.scale_m_per_px == pytest.approx(PX)
    assert raster.scale_m_per_px == pytest.approx(0.893, abs=0.001)


def test_raster_to_image_polarity():
    tile = make_tile("t", 0, [rect_fp(0, 0, 60, 60)])
    image = raster_to_image(rasterize(tile))
    assert image.dtype == np.uint8
    assert image[112, 112] == 0  # building is black
    assert image[5, 5] == 255  # background is white


def test_footprint_index_matches_bruteforce():
    rng = np.random.default_rng(7)
    polys = [
        rect_fp(float(rng.uniform(-500, 500)), float(rng.uniform(-500, 500)), 10, 14, fid=str(i))
        for i in range(120)
    ]
    index = FootprintIndex(polys, cell_size=100.0)
    for _ in range(25):
        x0, y0 = rng.uniform(-500, 400, 2)
        box = (float(x0), float(y0), float(x0 + 150), float(y0 + 120))
        got = set(index.query(*box))
        for i, p in enumerate(polys):
            xmin, ymin, xmax, ymax = p.bbox()
            overlaps = not (xmax < box[0] or xmin > box[2] or ymax < box[1] or ymin > box[3])
            if overlaps:
                assert i in got


def test_clip_tile_from_lonlat():
    center = (-71.1, 42.36)
    proj = LocalProjection(*center)
    # a 20x10 m building 30 m east of the center
    local = rect_fp(30, 0, 20, 10, fid="b0")
    lonlat_ring = np.column_stack(
        [
            center[0] + local.exterior[:, 0] / proj.k_x,
            center[1] + local.exterior[:, 1] / proj.k_y,
        ]
    )
    fp = FootprintPolygon(exterior=lonlat_ring, holes=[], id="b0")
    index = FootprintIndex([fp], cell_size=0.002)
    tile = clip_tile(index, center, tile_id="t", category=3)
    assert len(tile.members) == 1
    cx, cy = tile.members[0].centroid()
    assert cx == pytest.approx(30.0, abs=0.01)
    assert cy == pytest.approx(0.0, abs=0.01)
    assert tile.members[0].area() == pytest.approx(200.0, rel=1e-4)


def test_tile_dir_round_trip(tmp_path):
    tiles = [
        make_tile("a", 1, [rect_fp(0, 0, 20, 10, fid="x")], split="train"),
        make_tile("b", 2, [], split="test"),
    ]
    write_tile_dir(tmp_path, tiles, fmt="pgm")
    assert (tmp_path / "a.pgm").exists() and (tmp_path / "tiles.csv").exists()
    header = (tmp_path / "a.pgm").read_bytes()[:15]
    assert header.startswith(b"P5\n224 224\n255")
    loaded = read_tile_dir(tmp_path)
    assert [t.tile_id for t in loaded] == ["a", "b"]
    assert loaded[0].category == 1 and loaded[0].split == "train"
    assert len(loaded[0].members) == 1
    assert np.array_equal(loaded[0].members[0].exterior, tiles[0].members[0].exterior)


def test_tile_dir_png(tmp_path):
    write_tile_dir(tmp_path, [make_tile("a", 0, [rect_fp(0, 0, 30, 30)])], fmt="png")
    from PIL import Image

    img = np.asarray(Image.open(tmp_path / "a.png"))
    assert img.shape == (224, 224)
    assert img[112, 112] == 0


def test_tile_dir_schema_refusal(tmp_path):
    write_tile_dir(tmp_path, [make_tile("a", 0, [])], write_images=False)
    path = tmp_path / "geometry.jsonl"
    lines = path.read_text().splitlines()
    lines[0] = '{"schema": "figground/tile-geometry/99"}'
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError):
        read_tile_dir(tmp_path)
