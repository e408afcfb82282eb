"""Split plans, the temperature-ordered holdout, extrapolation accounting,
and profile comparison."""

import numpy as np
import pytest

from heatlab.cooling import CoolingProfile
from heatlab.errors import DataError
from heatlab.evaluation import (
    ExtrapolationReport,
    SplitPlan,
    compare_profiles,
    extrapolation_margin,
    extrapolation_report,
    split_high_heat,
    split_random,
)


def test_split_plan_json_round_trip():
    plan = SplitPlan(strategy="high_heat", train=[2, 0], val=[1], test=[3], seed=4, ordering_key="scene_mean_lst")
    d = plan.to_json()
    assert d["warning"] is None
    assert SplitPlan.from_json(d) == plan


def test_split_random_properties():
    plan = split_random(100, seed=1)
    assert sorted(plan.train + plan.val + plan.test) == list(range(100))
    assert [len(plan.train), len(plan.val), len(plan.test)] == [72, 18, 10]
    assert split_random(100, seed=1) == plan
    assert split_random(100, seed=2) != plan

    with pytest.raises(DataError):
        split_random(9)
    with pytest.raises(DataError):
        split_random(100, fracs=(0.5, 0.5))
    with pytest.raises(DataError):
        split_random(100, fracs=(0.5, 0.4, 0.2))
    with pytest.raises(DataError) as err:
        split_random(10, fracs=(0.98, 0.01, 0.01))
    assert err.value.code == "bad_split"


def test_split_high_heat_ties_stay_cool():
    # threshold = nearest-rank 0.9 quantile; equal keys land on the cool side
    keys = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 9.0, 9.0, 10.0]
    plan = split_high_heat(keys, q=0.90)
    assert plan.test == [11]
    assert sorted(plan.train + plan.val) == list(range(11))
    assert [len(plan.train), len(plan.val)] == [9, 2]
    assert plan.ordering_key == "scene_mean_lst"
    assert plan.warning is None
    assert max(np.asarray(keys)[plan.train + plan.val]) < min(np.asarray(keys)[plan.test])


def test_split_high_heat_degenerate_and_errors():
    plan = split_high_heat([5.0] * 12)
    assert plan.test == []
    assert plan.warning is not None
    assert sorted(plan.train + plan.val) == list(range(12))

    with pytest.raises(DataError):
        split_high_heat([1.0] * 9)
    with pytest.raises(DataError):
        split_high_heat([1.0] * 11 + [float("nan")])


def test_split_high_heat_seed_determinism():
    keys = list(np.random.default_rng(0).normal(20, 3, size=40))
    assert split_high_heat(keys, seed=7) == split_high_heat(keys, seed=7)
    a = split_high_heat(keys, seed=7)
    b = split_high_heat(keys, seed=8)
    assert a.test == b.test  # the holdout is key-driven, not seed-driven
    assert a.train != b.train


def test_extrapolation_report_accounting():
    keys = np.arange(12, dtype=np.float64) + 20.0
    plan = SplitPlan(strategy="high_heat", train=list(range(8)), val=[8, 9], test=[10, 11], seed=0)
    truth = keys.copy()
    pred = keys.copy()
    pred[10] += 1.5  # within tolerance
    pred[11] += 5.0  # rejected
    rep = extrapolation_report(plan, keys, pred, truth, tolerance=2.0)
    assert rep.accepted == 1
    assert rep.train_max_key == 29.0
    assert rep.test_key_range == (30.0, 31.0)
    assert rep.predicted_max == pytest.approx(31.5)
    assert rep.margin == pytest.approx(31.5 - 29.0)
    assert rep.metrics.n == 2
    assert rep.metrics.mbe == pytest.approx((1.5 + 5.0) / 2)

    back = ExtrapolationReport.from_json(rep.to_json())
    assert back.margin == pytest.approx(rep.margin)
    assert back.metrics.n == 2


def test_extrapolation_none_accepted():
    keys = np.arange(12, dtype=np.float64)
    plan = SplitPlan(strategy="high_heat", train=list(range(10)), val=[], test=[10, 11], seed=0)
    pred = keys + 10.0
    rep = extrapolation_report(plan, keys, pred, keys, tolerance=2.0)
    assert rep.accepted == 0
    assert rep.predicted_max is None
    assert rep.margin is None
    d = rep.to_json()
    assert d["margin"] is None
    assert ExtrapolationReport.from_json(d).predicted_max is None


def test_extrapolation_requires_test_and_pool():
    keys = np.arange(12, dtype=np.float64)
    empty_test = SplitPlan(strategy="high_heat", train=list(range(12)), val=[], test=[], seed=0)
    with pytest.raises(DataError):
        extrapolation_report(empty_test, keys, keys, keys)
    empty_pool = SplitPlan(strategy="high_heat", train=[], val=[], test=[0, 1], seed=0)
    with pytest.raises(DataError):
        extrapolation_report(empty_pool, keys, keys, keys)


def test_extrapolation_margin_is_a_difference():
    assert extrapolation_margin(26.91, 23.29) == pytest.approx(3.62)
    assert extrapolation_margin(20.0, 23.0) == pytest.approx(-3.0)


def _profile(mean, count, side="internal", edges=(0.0, 30.0, 60.0, 90.0)):
    n = len(mean)
    return CoolingProfile(
        side=side,
        bin_edges=np.asarray(edges, dtype=np.float64),
        mean_dt=np.asarray(mean, dtype=np.float64),
        std_dt=np.zeros(n),
        count=np.asarray(count, dtype=np.int64),
        mean_dist=np.zeros(n),
    )


def test_compare_profiles_skips_unshared_bins():
    truth = _profile([-1.0, -0.5, np.nan], [10, 5, 0])
    pred = _profile([-0.8, np.nan, -0.1], [9, 0, 3])
    rep = compare_profiles(truth, pred)
    assert rep.n == 1  # only the first bin is populated on both sides
    assert rep.mae == pytest.approx(0.2)

    with pytest.raises(DataError):
        compare_profiles(truth, _profile([-0.8, np.nan, -0.1], [9, 0, 3], side="spillover"))
    with pytest.raises(DataError):
        compare_profiles(truth, _profile([-0.8, np.nan], [9, 0], edges=(0.0, 30.0, 60.0)))
    with pytest.raises(DataError):
        compare_profiles(_profile([np.nan, -0.5, np.nan], [0, 5, 0]), pred)
