"""Built-up baselines, anomaly fields, distance profiles, urban gradients,
and the source/sink cross-tabulation."""

import numpy as np
import pytest

from heatlab.cooling import (
    BaselineSpec,
    CoolingProfile,
    aggregate_profiles,
    anomaly,
    builtup_baseline,
    cooling_profile,
    source_sink,
    urban_gradient,
)
from heatlab.errors import DataError
from heatlab.grid import GeoGrid, GridSpec, PixelMask
from heatlab.landcover import CategoryMap
from heatlab.stats import nearest_rank

SPEC = GridSpec(6, 4, 0.0, 0.0, 30.0, 32635)


def _grid(arr, spec=SPEC):
    return GeoGrid(spec, np.asarray(arr, dtype=np.float32))


def test_baseline_spec_validation_and_json():
    with pytest.raises(DataError):
        BaselineSpec(ring_inner=500.0, ring_outer=100.0)
    with pytest.raises(DataError):
        BaselineSpec(ring_inner=0.0)
    with pytest.raises(DataError):
        BaselineSpec(fallback="panic")
    s = BaselineSpec(ring_inner=600.0, ring_outer=1200.0, min_pixels=7, fallback="error")
    assert BaselineSpec.from_json(s.to_json()) == s
    assert BaselineSpec.from_json({}) == BaselineSpec()


def test_builtup_baseline_ring_selection():
    lst = _grid(np.arange(24, dtype=np.float32).reshape(4, 6))
    built = np.ones((4, 6), dtype=bool)
    built[0, :] = False
    dist = np.full((4, 6), 1000.0, dtype=np.float32)
    dist[1, 0] = 100.0  # inclusive lower edge
    dist[1, 1] = 300.0
    dist[1, 2] = 500.0  # inclusive upper edge
    dist[1, 3] = 99.0  # just outside
    dist[0, 4] = 200.0  # in ring but not built
    dist[2, 0] = -9999.0
    spec = BaselineSpec(min_pixels=3)
    got = builtup_baseline(lst, PixelMask(SPEC, built), _grid(dist), spec)
    assert got == pytest.approx((6.0 + 7.0 + 8.0) / 3)


def test_builtup_baseline_fallbacks():
    lst = _grid(np.arange(24, dtype=np.float32).reshape(4, 6))
    built = np.zeros((4, 6), dtype=bool)
    built[3, :] = True
    far = _grid(np.full((4, 6), 2000.0))
    got = builtup_baseline(lst, PixelMask(SPEC, built), far, BaselineSpec())
    assert got == pytest.approx(lst.values[3, :].mean())
    with pytest.raises(DataError) as err:
        builtup_baseline(lst, PixelMask(SPEC, built), far, BaselineSpec(fallback="error"))
    assert err.value.code == "empty_ring"
    with pytest.raises(DataError):
        builtup_baseline(lst, PixelMask(SPEC, np.zeros((4, 6), dtype=bool)), far, BaselineSpec())


def test_anomaly_subtracts_and_keeps_nodata():
    lst = _grid([[20.0, -9999.0, 25.0, 30.0, 21.0, 22.0]] * 4)
    out = anomaly(lst, 21.5)
    assert out.values[0, 0] == np.float32(20.0 - 21.5)
    assert out.values[0, 1] == np.float32(-9999.0)
    assert out.values[0, 3] == np.float32(8.5)


def _profile_by_hand(d, v, bin_width, max_dist):
    nbins = int(np.ceil(max_dist / bin_width))
    keep = d < max_dist
    d, v = d[keep], v[keep]
    idx = np.minimum((d / bin_width).astype(int), nbins - 1)
    mean = np.full(nbins, np.nan)
    std = np.full(nbins, np.nan)
    mdist = np.full(nbins, np.nan)
    count = np.zeros(nbins, dtype=np.int64)
    for b in range(nbins):
        sel = idx == b
        count[b] = sel.sum()
        if count[b]:
            mean[b] = v[sel].mean()
            std[b] = v[sel].std()
            mdist[b] = d[sel].mean()
    return mean, std, count, mdist


def test_cooling_profile_binning():
    rng = np.random.default_rng(11)
    d64 = rng.uniform(0.0, 400.0, size=(4, 6))
    d64[0, 0] = 300.0  # exactly max_dist is excluded
    d64[0, 1] = 29.999
    v64 = rng.normal(-1.0, 0.5, size=(4, 6))
    dist = _grid(d64)
    dt = _grid(v64)
    prof = cooling_profile(dt, dist, PixelMask(SPEC, np.ones((4, 6), dtype=bool)), 30.0, 300.0, "internal")
    mean, std, count, mdist = _profile_by_hand(
        dist.values.astype(np.float64).ravel(), dt.values.astype(np.float64).ravel(), 30.0, 300.0
    )
    assert prof.side == "internal"
    assert prof.bin_edges.tolist() == [30.0 * i for i in range(11)]
    assert prof.count.tolist() == count.tolist()
    assert np.allclose(prof.mean_dt, mean, equal_nan=True)
    assert np.allclose(prof.std_dt, std, equal_nan=True, atol=1e-9)
    assert np.allclose(prof.mean_dist, mdist, equal_nan=True)
    # the pixel sitting exactly on max_dist is excluded
    assert prof.count.sum() == int((dist.values.astype(np.float64) < 300.0).sum())

    with pytest.raises(DataError):
        cooling_profile(dt, dist, PixelMask(SPEC, np.ones((4, 6), dtype=bool)), 0.0, 300.0, "internal")


def test_cooling_profile_respects_domain_and_nodata():
    dist = _grid(np.full((4, 6), 50.0))
    vals = np.full((4, 6), 2.0, dtype=np.float32)
    vals[0, 0] = -9999.0
    dt = _grid(vals)
    domain = np.zeros((4, 6), dtype=bool)
    domain[0, :3] = True
    prof = cooling_profile(dt, dist, PixelMask(SPEC, domain), 30.0, 300.0, "spillover")
    assert prof.count.sum() == 2  # nodata pixel dropped from the domain
    assert prof.count[1] == 2
    assert prof.mean_dt[1] == pytest.approx(2.0)
    assert np.isnan(prof.mean_dt[0])


def test_profile_json_round_trip_and_length_check():
    prof = CoolingProfile(
        side="internal",
        bin_edges=np.array([0.0, 30.0, 60.0]),
        mean_dt=np.array([-1.5, np.nan]),
        std_dt=np.array([0.25, np.nan]),
        count=np.array([12, 0]),
        mean_dist=np.array([14.0, np.nan]),
    )
    d = prof.to_json()
    assert d["mean_dt"] == [-1.5, None]
    back = CoolingProfile.from_json(d)
    assert np.allclose(back.mean_dt, prof.mean_dt, equal_nan=True)
    assert back.count.tolist() == [12, 0]
    with pytest.raises(DataError):
        CoolingProfile(
            side="internal",
            bin_edges=np.array([0.0, 30.0, 60.0]),
            mean_dt=np.array([-1.5]),
            std_dt=np.array([0.25, np.nan]),
            count=np.array([12, 0]),
            mean_dist=np.array([14.0, np.nan]),
        )


def test_aggregate_profiles_equals_pooled_computation():
    rng = np.random.default_rng(3)
    spec = GridSpec(8, 8, 0.0, 0.0, 30.0, 32635)
    full = PixelMask(spec, np.ones((8, 8), dtype=bool))

    def rand_pair():
        d = GeoGrid(spec, rng.uniform(0, 350, size=(8, 8)).astype(np.float32))
        v = GeoGrid(spec, rng.normal(-1, 1, size=(8, 8)).astype(np.float32))
        return d, v

    (d1, v1), (d2, v2) = rand_pair(), rand_pair()
    p1 = cooling_profile(v1, d1, full, 30.0, 300.0, "internal")
    p2 = cooling_profile(v2, d2, full, 30.0, 300.0, "internal")
    agg = aggregate_profiles([p1, p2])

    pooled_d = np.concatenate([d1.values.astype(np.float64).ravel(), d2.values.astype(np.float64).ravel()])
    pooled_v = np.concatenate([v1.values.astype(np.float64).ravel(), v2.values.astype(np.float64).ravel()])
    mean, std, count, mdist = _profile_by_hand(pooled_d, pooled_v, 30.0, 300.0)
    assert agg.count.tolist() == count.tolist()
    assert np.allclose(agg.mean_dt, mean, equal_nan=True, atol=1e-9)
    assert np.allclose(agg.std_dt, std, equal_nan=True, atol=1e-9)
    assert np.allclose(agg.mean_dist, mdist, equal_nan=True, atol=1e-9)

    with pytest.raises(DataError):
        aggregate_profiles([])
    p3 = cooling_profile(v2, d2, full, 30.0, 300.0, "spillover")
    with pytest.raises(DataError):
        aggregate_profiles([p1, p3])
    p4 = cooling_profile(v2, d2, full, 50.0, 300.0, "internal")
    with pytest.raises(DataError):
        aggregate_profiles([p1, p4])


def test_urban_gradient_deciles():
    rng = np.random.default_rng(9)
    spec = GridSpec(10, 10, 0.0, 0.0, 30.0, 32635)
    bf = rng.random((10, 10)).astype(np.float32)
    v = rng.normal(2.0, 1.0, size=(10, 10)).astype(np.float32)
    g = urban_gradient(GeoGrid(spec, v), GeoGrid(spec, bf))
    assert g.axis == "built_fraction_decile"
    assert g.bin_centers.tolist() == [(k + 0.5) / 10 for k in range(10)]
    edges = np.array([nearest_rank(bf.astype(np.float64).ravel(), k / 10) for k in range(1, 10)])
    idx = np.searchsorted(edges, bf.astype(np.float64).ravel(), side="right")
    for b in range(10):
        sel = idx == b
        assert g.count[b] == sel.sum()
        if sel.any():
            assert g.mean_anomaly[b] == pytest.approx(v.astype(np.float64).ravel()[sel].mean())
    d = g.to_json()
    assert len(d["bin_centers"]) == 10 and len(d["count"]) == 10


def test_urban_gradient_radial():
    spec = GridSpec(7, 7, 0.0, 0.0, 30.0, 32635)
    bf = np.zeros((7, 7), dtype=np.float32)
    bf[3, 3] = 1.0  # all mass at the center pixel
    v = np.arange(49, dtype=np.float32).reshape(7, 7)
    g = urban_gradient(GeoGrid(spec, v), GeoGrid(spec, bf), axis="radial_distance", radial_bin_width=40.0)
    assert g.axis == "radial_distance"
    assert g.count[0] >= 1  # the center pixel is 0 m from the centroid
    assert g.count.sum() == 49
    # farthest corner is 3*sqrt(2)*30 ~ 127 m -> 4 bins of 40 m
    assert len(g.bin_centers) == 4
    assert g.bin_centers[0] == pytest.approx(20.0)

    with pytest.raises(DataError) as err:
        urban_gradient(GeoGrid(spec, v), GeoGrid(spec, np.zeros((7, 7), dtype=np.float32)), axis="radial_distance")
    assert err.value.code == "degenerate_mask"
    with pytest.raises(DataError):
        urban_gradient(GeoGrid(spec, v), GeoGrid(spec, bf), axis="diagonal")


def test_source_sink_strict_quantiles():
    spec = GridSpec(10, 10, 0.0, 0.0, 30.0, 32635)
    v = np.arange(1, 101, dtype=np.float32).reshape(10, 10)
    codes = np.full((10, 10), 7.0, dtype=np.float32)
    codes[:5] = 2.0  # the cool half is trees
    table = source_sink(GeoGrid(spec, v), GeoGrid(spec, codes), CategoryMap())
    assert table.t_low == 25.0
    assert table.t_high == 75.0
    trees = table.rows["trees"]
    built = table.rows["built"]
    # values 1..50 are trees: 24 strictly below 25, none above 75
    assert trees["pixel_count"] == 50
    assert trees["sink_fraction"] == pytest.approx(24 / 50)
    assert trees["source_fraction"] == 0.0
    assert built["source_fraction"] == pytest.approx(25 / 50)
    assert built["sink_fraction"] == 0.0
    for row in table.rows.values():
        total = row["source_fraction"] + row["neutral_fraction"] + row["sink_fraction"]
        assert total == pytest.approx(1.0)
    assert trees["mean_anomaly"] == pytest.approx(np.mean(np.arange(1, 51)))

    # unmapped codes still get a row under a synthetic name
    codes = codes.copy()
    codes[0, 0] = 42.0
    table = source_sink(GeoGrid(spec, v), GeoGrid(spec, codes), CategoryMap())
    assert "code_42" in table.rows

    with pytest.raises(DataError):
        source_sink(GeoGrid(spec, v), GeoGrid(spec, codes), CategoryMap(), quantiles=(0.0, 0.75))
    nod = np.full((10, 10), -9999.0, dtype=np.float32)
    with pytest.raises(DataError) as err:
        source_sink(GeoGrid(spec, nod), GeoGrid(spec, codes), CategoryMap())
    assert err.value.code == "degenerate_mask"
