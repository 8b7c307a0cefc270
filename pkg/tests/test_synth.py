import numpy as np
import pytest

from figground.errors import GenerationError
from figground.geodata import FootprintPolygon
from figground.morpho import contour_complexity, featurize
from figground.raster import rasterize
from figground.synth import (
    ClassRecipe,
    SyntheticSpec,
    _cross_ring,
    _l_ring,
    generate_region,
    generate_synthetic,
    two_class_default,
)


def test_default_spec_validates():
    two_class_default().validate()


def test_infeasible_spacing_rejected():
    bad = ClassRecipe(name="crowded", size_range=(400.0, 400.0), spacing_m=10.0)
    with pytest.raises(GenerationError, match="cannot fit"):
        bad.validate()


def test_spec_needs_two_classes():
    with pytest.raises(GenerationError):
        SyntheticSpec(recipes=[ClassRecipe(name="only")]).validate()


def test_zero_tiles():
    assert generate_synthetic(two_class_default(), 0, seed=0) == []


def test_l_and_cross_template_complexity():
    # arms are 5x their width: perimeter 4a over sqrt(9 t^2) gives 20/3
    for area in (200.0, 300.0, 400.0):
        l_poly = FootprintPolygon(exterior=_l_ring(area), holes=[], id="l")
        x_poly = FootprintPolygon(exterior=_cross_ring(area), holes=[], id="x")
        assert contour_complexity(l_poly) == pytest.approx(20.0 / 3.0, abs=1e-9)
        assert contour_complexity(x_poly) == pytest.approx(20.0 / 3.0, abs=1e-9)
        assert l_poly.area() == pytest.approx(area, rel=1e-9)
        assert x_poly.area() == pytest.approx(area, rel=1e-9)


def test_dense_grid_class_signature():
    tiles = [t for t in generate_synthetic(two_class_default(), 8, seed=3) if t.category == 0]
    for tile in tiles:
        fv = featurize(tile, rasterize(tile))
        # small houses: all area mass in the two lowest buckets
        assert fv.area[:2].sum() == pytest.approx(1.0, abs=1e-9)
        # street-aligned fabric: two dominant bins a quarter turn apart
        mode = int(np.argmax(fv.direction))
        pair = fv.direction[mode] + fv.direction[(mode + 5) % 10]
        assert pair >= 0.4


def test_sparse_estate_class_signature():
    tiles = [t for t in generate_synthetic(two_class_default(), 8, seed=3) if t.category == 1]
    for tile in tiles:
        fv = featurize(tile, rasterize(tile))
        assert fv.complexity[0] == 0.0
        assert fv.complexity[1:].sum() == pytest.approx(1.0, abs=1e-9)
        assert len(tile.members) < 25  # sparse fabric


def test_generation_deterministic():
    a = generate_synthetic(two_class_default(), 3, seed=9)
    b = generate_synthetic(two_class_default(), 3, seed=9)
    assert [t.tile_id for t in a] == [t.tile_id for t in b]
    for ta, tb in zip(a, b):
        assert len(ta.polygons) == len(tb.polygons)
        for pa, pb in zip(ta.polygons, tb.polygons):
            assert np.array_equal(pa.exterior, pb.exterior)


def test_generate_region_metric_and_lonlat():
    recipe = two_class_default().recipes[0]
    metric = generate_region(recipe, 600.0, 400.0, seed=4)
    assert len(metric) > 200
    lo, hi = recipe.size_range
    for b in metric[:50]:
        assert lo - 1e-6 <= b.area() <= hi + 1e-6
    geo = generate_region(recipe, 600.0, 400.0, seed=4, origin_lonlat=(-71.0, 42.0))
    assert len(geo) == len(metric)
    lon, lat = geo[0].centroid()
    assert abs(lon + 71.0) < 0.01 and abs(lat - 42.0) < 0.01
