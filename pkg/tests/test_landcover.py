"""Land-cover semantics: category maps, park extraction, distance fields,
and windowed built-fraction smoothing."""

import numpy as np
import pytest

from heatlab.errors import DataError
from heatlab.grid import GeoGrid, GridSpec, PixelMask
from heatlab.landcover import (
    CategoryMap,
    built_fraction,
    category_mask,
    distance_m,
    euclidean_distance,
    extract_parks,
)

CATS = CategoryMap()


def _lulc(rows, pixel=30.0):
    arr = np.asarray(rows, dtype=np.float32)
    spec = GridSpec(arr.shape[1], arr.shape[0], 0.0, 0.0, pixel, 32635)
    return GeoGrid(spec, arr)


def test_category_map_lookup_and_validation():
    assert CATS.code("built") == 7
    assert CATS.name_of(2) == "trees"
    assert CATS.name_of(99) is None
    with pytest.raises(DataError):
        CATS.code("lava")
    with pytest.raises(DataError):
        CategoryMap({"water": 1, "volcano": 3})
    with pytest.raises(DataError):
        CategoryMap({"water": 1, "trees": 1})
    assert CategoryMap(CATS.to_json()).codes == CATS.codes


def test_category_mask_rounds_and_skips_nodata():
    g = _lulc([[7.0, 7.4, 6.6], [1.0, -9999.0, 2.0]])
    m = category_mask(g, [7])
    assert m.values.tolist() == [[True, True, True], [False, False, False]]
    m2 = category_mask(g, [1, 2])
    assert m2.values.tolist() == [[False, False, False], [True, False, True]]


def test_extract_parks_area_filter_and_numbering():
    # a 1-pixel speck (top-left) plus a 2x2 block with two diagonal
    # hangers-on that 8-connectivity merges into one 6-pixel component
    g = _lulc(
        [
            [2.0, 7.0, 7.0, 7.0, 2.0],
            [7.0, 7.0, 2.0, 2.0, 7.0],
            [7.0, 7.0, 2.0, 2.0, 7.0],
            [7.0, 2.0, 7.0, 7.0, 7.0],
        ]
    )
    parks = extract_parks(g, [CATS.code("trees")], min_area=2 * 900.0)
    assert parks.count == 1
    # the speck (900 m^2) is dropped; the merged blob keeps 6 pixels
    assert parks.park_areas == {1: 6 * 900.0}
    assert parks.labels.values[0, 0] == 0.0
    assert parks.labels.values[1, 2] == 1.0
    assert parks.labels.values[3, 1] == 1.0
    assert parks.source_mask.count() == 6
    assert parks.park_mask(1).count() == 6

    # with no area floor both components survive, numbered in scan order
    parks = extract_parks(g, [2], min_area=0.0)
    assert parks.count == 2
    assert parks.labels.values[0, 0] == 1.0
    assert parks.labels.values[1, 2] == 2.0
    assert parks.park_areas[1] == 900.0


def test_distance_m_exactness_and_empty():
    mask = np.zeros((4, 5), dtype=bool)
    mask[1, 2] = True
    d = distance_m(mask, 10.0)
    assert d[1, 2] == 0.0
    assert d[1, 3] == 10.0
    assert d[0, 1] == pytest.approx(10.0 * np.sqrt(2), abs=0)
    assert d[3, 0] == pytest.approx(10.0 * np.sqrt(8), abs=1e-12)
    assert np.isinf(distance_m(np.zeros((3, 3), dtype=bool), 30.0)).all()


def test_euclidean_distance_conventions():
    vals = np.zeros((5, 5), dtype=bool)
    vals[1:4, 1:4] = True
    spec = GridSpec(5, 5, 0.0, 0.0, 30.0, 32635)
    mask = PixelMask(spec, vals)

    inside = euclidean_distance(mask, "inside")
    # boundary pixels read a full pixel to the nearest outside center
    assert inside.values[1, 1] == np.float32(30.0)
    assert inside.values[1, 2] == np.float32(30.0)
    assert inside.values[2, 2] == np.float32(60.0)
    assert (inside.values[~vals] == np.float32(-9999.0)).all()

    outside = euclidean_distance(mask, "outside")
    assert outside.values[0, 2] == np.float32(30.0)
    assert outside.values[0, 0] == np.float32(30.0 * np.sqrt(2))
    assert (outside.values[vals] == np.float32(-9999.0)).all()

    with pytest.raises(DataError) as err:
        euclidean_distance(PixelMask(spec, np.ones((5, 5), dtype=bool)), "inside")
    assert err.value.code == "degenerate_mask"
    with pytest.raises(DataError):
        euclidean_distance(PixelMask(spec, np.zeros((5, 5), dtype=bool)), "outside")
    with pytest.raises(DataError):
        euclidean_distance(mask, "sideways")


def test_built_fraction_matches_brute_force():
    rng = np.random.default_rng(5)
    spec = GridSpec(9, 7, 0.0, 0.0, 30.0, 32635)
    built = rng.random((7, 9)) < 0.4
    valid = rng.random((7, 9)) < 0.85
    out = built_fraction(PixelMask(spec, built), PixelMask(spec, valid), radius_px=2)
    for r in range(7):
        for c in range(9):
            sl = (slice(max(r - 2, 0), r + 3), slice(max(c - 2, 0), c + 3))
            den = valid[sl].sum()
            if den == 0:
                assert out.values[r, c] == np.float32(-9999.0)
            else:
                assert out.values[r, c] == pytest.approx((built & valid)[sl].sum() / den, abs=1e-6)


def test_built_fraction_all_invalid_window_is_nodata():
    spec = GridSpec(5, 5, 0.0, 0.0, 30.0, 32635)
    built = np.ones((5, 5), dtype=bool)
    valid = np.zeros((5, 5), dtype=bool)
    valid[4, 4] = True
    out = built_fraction(PixelMask(spec, built), PixelMask(spec, valid), radius_px=1)
    assert out.values[0, 0] == np.float32(-9999.0)
    assert out.values[4, 4] == np.float32(1.0)
