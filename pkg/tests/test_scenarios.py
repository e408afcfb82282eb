"""Climate forcing, heat-island extent, and forward forecasts."""

import numpy as np
import pytest

from heatlab.errors import DataError
from heatlab.evaluation import ExtrapolationReport
from heatlab.grid import GeoGrid, GridSpec, PixelMask
from heatlab.predictors import oracle_predictor
from heatlab.scenarios import (
    PRESENT_DAY,
    ClimateScenario,
    apply_forcing,
    find_scenario,
    forecast,
    load_scenarios,
    uhi_extent,
)
from heatlab.stats import MetricReport
from heatlab.workspace import filter_scenes


def test_scenario_dataclass():
    sc = ClimateScenario("4.5", 2050, tuple(float(m) for m in range(12)), "demo")
    assert sc.delta_for_month(1) == 0.0
    assert sc.delta_for_month(12) == 11.0
    assert ClimateScenario.from_json(sc.to_json()) == sc
    with pytest.raises(DataError):
        ClimateScenario("4.5", 2050, (1.0,) * 11, "short")
    with pytest.raises(DataError):
        ClimateScenario("4.5", 2050, (float("nan"),) * 12, "bad")
    assert PRESENT_DAY.delta_for_month(7) == 0.0


def test_workspace_scenario_lookup(small_ws_ro):
    table = load_scenarios(small_ws_ro)
    assert len(table) == 9
    sc = find_scenario(small_ws_ro, "4.5", 2050)
    assert sc.delta_for_month(7) == 1.2
    with pytest.raises(DataError) as err:
        find_scenario(small_ws_ro, "9.9", 2050)
    assert err.value.code == "scenario_not_found"


def test_apply_forcing_touches_only_air(small_ws_ro):
    stack = small_ws_ro.build_stack(small_ws_ro.scene("sc02"))
    sc = ClimateScenario("4.5", 2050, (2.0,) * 12, "demo")
    forced = apply_forcing(stack, sc)
    for name in stack.channels:
        if name == "airtemp":
            continue
        assert forced.channel(name) is stack.channel(name)
    before = stack.channel("airtemp").values
    after = forced.channel("airtemp").values
    assert np.allclose(after - before, 2.0, atol=1e-6)
    assert forced.provenance[-1].startswith("airtemp += 2.0")
    assert stack.channel("airtemp").values is before  # original untouched


def test_apply_forcing_skips_nodata():
    spec = GridSpec(4, 4, 0.0, 0.0, 30.0, 32635)
    vals = np.full((4, 4), 20.0, dtype=np.float32)
    vals[0, 0] = -9999.0
    channels = {"airtemp": GeoGrid(spec, vals)}
    from heatlab.workspace import SceneStack

    stack = SceneStack(scene_id="x", timestamp="2024-07-01T00:00:00Z", channels=channels)
    forced = apply_forcing(stack, ClimateScenario("t", 1, (3.0,) * 12, ""))
    out = forced.channel("airtemp").values
    assert out[0, 0] == np.float32(-9999.0)
    assert out[1, 1] == np.float32(23.0)


def test_uhi_extent_strict_threshold():
    spec = GridSpec(4, 1, 0.0, 0.0, 100.0, 32635)
    dt = GeoGrid(spec, np.array([[1.0, 2.0, 2.5, -9999.0]], dtype=np.float32))
    urban = PixelMask(spec, np.array([[True, True, True, True]]))
    rep = uhi_extent(dt, urban, 2.0)
    assert rep.urban_pixels == 3  # nodata pixel is unusable
    assert rep.exceed_pixels == 1  # exactly 2.0 does not exceed
    assert rep.exceed_area_km2 == pytest.approx(0.01)
    assert rep.exceed_fraction == pytest.approx(1 / 3)
    assert rep.mean_urban_anomaly == pytest.approx((1.0 + 2.0 + 2.5) / 3)
    d = rep.to_json()
    assert d["threshold_c"] == 2.0

    with pytest.raises(DataError) as err:
        uhi_extent(dt, PixelMask(spec, np.zeros((1, 4), dtype=bool)), 2.0)
    assert err.value.code == "degenerate_mask"


def test_forecast_zero_delta_centers_built_anomaly(small_ws_ro):
    ws = small_ws_ro
    scenes = filter_scenes(ws)[:2]
    predictor = oracle_predictor(ws)
    result = forecast(ws, PRESENT_DAY, predictor, scenes=scenes)
    assert result.variant == "oracle"
    assert result.out_of_validated_range is None
    assert len(result.per_scene) == 2
    # anomaly is measured against the unforced built mean, so at zero
    # forcing the mean built anomaly vanishes
    assert result.report.mean_urban_anomaly == pytest.approx(0.0, abs=1e-4)
    for row in result.per_scene:
        assert row["delta_c"] == 0.0
        # built pixels run hotter than the citywide mean in this geometry
        assert row["builtup_baseline_c"] > row["mean_forced_prediction_c"]


def test_forecast_shift_and_range_flag(small_ws_ro):
    ws = small_ws_ro
    scenes = filter_scenes(ws)[:2]
    predictor = oracle_predictor(ws)
    sc = ClimateScenario("4.5", 2050, (1.5,) * 12, "demo")
    result = forecast(ws, sc, predictor, scenes=scenes)
    # the oracle responds linearly to air forcing, so the built anomaly is the delta
    assert result.report.mean_urban_anomaly == pytest.approx(1.5, abs=1e-3)
    assert result.to_json()["scenario"]["rcp"] == "4.5"

    def _extrap(train_max):
        return ExtrapolationReport(
            train_max_key=train_max,
            test_key_range=(train_max, train_max + 1.0),
            predicted_max=train_max + 0.5,
            margin=0.5,
            metrics=MetricReport(mae=0.1, mse=0.01, rmse=0.1, mbe=0.0, n=4),
            tolerance=2.0,
            accepted=4,
        )

    roomy = forecast(ws, sc, predictor, scenes=scenes, extrapolation=_extrap(1000.0))
    assert roomy.out_of_validated_range is False
    tight = forecast(ws, sc, predictor, scenes=scenes, extrapolation=_extrap(-1000.0))
    assert tight.out_of_validated_range is True


def test_forecast_needs_scenes_and_built(small_ws_ro):
    predictor = oracle_predictor(small_ws_ro)
    with pytest.raises(DataError) as err:
        forecast(small_ws_ro, PRESENT_DAY, predictor, scenes=[])
    assert err.value.code == "scene_not_found"
