"""Climate scenario forcing and forward heat-island reports.

A scenario shifts only the air-temperature channel of a scene stack by its
month's delta. The anomaly for a forced run is measured against the built-up
baseline of the unforced present-day run of the same predictor, so a
zero-delta scenario reproduces the present-day report exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .evaluation import ExtrapolationReport
from .grid import GeoGrid, PixelMask
from .landcover import built_mask
from .workspace import SceneStack, Workspace, filter_scenes


@dataclass(frozen=True)
class ClimateScenario:
    rcp: str
    horizon_year: int
    monthly_delta: tuple
    source_label: str

    def __post_init__(self):
        if len(self.monthly_delta) != 12:
            raise DataError("bad_request", "monthly_delta must have 12 entries")
        if not all(np.isfinite(v) for v in self.monthly_delta):
            raise DataError("bad_request", "monthly_delta entries must be finite")

    def delta_for_month(self, month: int) -> float:
        return float(self.monthly_delta[month - 1])

    def to_json(self) -> dict:
        return {
            "rcp": self.rcp,
            "horizon_year": self.horizon_year,
            "monthly_delta": list(self.monthly_delta),
            "source_label": self.source_label,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ClimateScenario":
        return cls(
            rcp=str(d["rcp"]),
            horizon_year=int(d["horizon_year"]),
            monthly_delta=tuple(float(v) for v in d["monthly_delta"]),
            source_label=str(d.get("source_label", "")),
        )


PRESENT_DAY = ClimateScenario("present", 0, (0.0,) * 12, "no forcing")


def load_scenarios(ws: Workspace) -> list[ClimateScenario]:
    return [ClimateScenario.from_json(row) for row in ws.config.raw.get("scenarios", [])]


def find_scenario(ws: Workspace, rcp: str, horizon_year: int) -> ClimateScenario:
    for sc in load_scenarios(ws):
        if sc.rcp == str(rcp) and sc.horizon_year == int(horizon_year):
            return sc
    raise DataError("scenario_not_found", f"no scenario rcp={rcp} year={horizon_year} in workspace config")


def apply_forcing(stack: SceneStack, scenario: ClimateScenario) -> SceneStack:
    """Shift the air channel by the scene month's delta; all other channels
    are the same objects, bit for bit."""
    delta = scenario.delta_for_month(stack.month)
    air = stack.channel("airtemp")
    values = air.values.copy()
    mask = air.data_mask()
    values[mask] = values[mask] + np.float32(delta)
    forced = air.with_values(values, validate=False)
    note = f"airtemp += {delta} (rcp {scenario.rcp}, {scenario.horizon_year})"
    return stack.with_channel("airtemp", forced, note)


@dataclass(frozen=True)
class UhiExtentReport:
    threshold_c: float
    urban_pixels: int
    exceed_pixels: int
    exceed_area_km2: float
    exceed_fraction: float
    mean_urban_anomaly: float

    def to_json(self) -> dict:
        return {
            "threshold_c": self.threshold_c,
            "urban_pixels": self.urban_pixels,
            "exceed_pixels": self.exceed_pixels,
            "exceed_area_km2": self.exceed_area_km2,
            "exceed_fraction": self.exceed_fraction,
            "mean_urban_anomaly": self.mean_urban_anomaly,
        }


def uhi_extent(anomaly: GeoGrid, urban: PixelMask, threshold_c: float) -> UhiExtentReport:
    """Area of urban pixels whose anomaly strictly exceeds the threshold."""
    usable = urban.values & anomaly.data_mask()
    n_urban = int(usable.sum())
    if n_urban == 0:
        raise DataError("degenerate_mask", "no usable urban pixels for extent")
    vals = anomaly.values[usable].astype(np.float64)
    exceed = int((vals > threshold_c).sum())
    px_area = anomaly.spec.pixel_size ** 2
    return UhiExtentReport(
        threshold_c=float(threshold_c),
        urban_pixels=n_urban,
        exceed_pixels=exceed,
        exceed_area_km2=exceed * px_area / 1e6,
        exceed_fraction=exceed / n_urban,
        mean_urban_anomaly=float(vals.mean()),
    )


@dataclass(frozen=True)
class ForecastResult:
    scenario: ClimateScenario
    variant: str
    report: UhiExtentReport
    per_scene: tuple
    anomaly: GeoGrid
    out_of_validated_range: bool | None

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario.to_json(),
            "variant": self.variant,
            "report": self.report.to_json(),
            "per_scene": [dict(row) for row in self.per_scene],
            "out_of_validated_range": self.out_of_validated_range,
        }


def _scene_mean(grid: GeoGrid) -> float:
    mask = grid.data_mask()
    if not mask.any():
        raise DataError("degenerate_mask", "prediction has no data pixels")
    return float(grid.values[mask].astype(np.float64).mean())


def forecast(ws: Workspace, scenario: ClimateScenario, predictor, scenes=None,
             extrapolation: ExtrapolationReport | None = None,
             threshold_c: float | None = None) -> ForecastResult:
    """Run the predictor on forced stacks and report the heat-island extent.

    The per-pixel anomaly of each scene is the forced prediction minus the
    mean unforced prediction over built pixels; scenes are averaged where
    they have data.
    """
    if scenes is None:
        scenes = filter_scenes(ws)
    if not scenes:
        raise DataError("scene_not_found", "no scenes pass the workspace filters")
    if threshold_c is None:
        threshold_c = float(ws.config.raw["uhi_threshold_c"])
    lulc = ws.load_lulc()
    built = built_mask(lulc, ws.config.built_codes)
    if not built.values.any():
        raise DataError("degenerate_mask", "workspace has no built pixels")

    shape = ws.grid_spec.shape
    total = np.zeros(shape, dtype=np.float64)
    count = np.zeros(shape, dtype=np.int64)
    rows = []
    max_forced_mean = None
    for scene in scenes:
        stack = ws.build_stack(scene)
        present = predictor.predict(stack)
        pmask = present.data_mask() & built.values
        if not pmask.any():
            raise DataError("degenerate_mask", f"scene {scene.scene_id}: no built prediction pixels")
        baseline = float(present.values[pmask].astype(np.float64).mean())
        forced_stack = apply_forcing(stack, scenario)
        forced = predictor.predict(forced_stack)
        fmask = forced.data_mask()
        total[fmask] += forced.values[fmask].astype(np.float64) - baseline
        count[fmask] += 1
        forced_mean = _scene_mean(forced)
        if max_forced_mean is None or forced_mean > max_forced_mean:
            max_forced_mean = forced_mean
        rows.append({
            "scene_id": scene.scene_id,
            "month": stack.month,
            "delta_c": scenario.delta_for_month(stack.month),
            "builtup_baseline_c": baseline,
            "mean_forced_prediction_c": forced_mean,
        })

    anomaly_values = np.full(shape, np.float32(-9999.0), dtype=np.float32)
    covered = count > 0
    anomaly_values[covered] = (total[covered] / count[covered]).astype(np.float32)
    anomaly = GeoGrid(ws.grid_spec, anomaly_values, nodata=-9999.0, validate=False)
    report = uhi_extent(anomaly, built, threshold_c)

    out_of_range = None
    if extrapolation is not None and extrapolation.train_max_key is not None:
        # validated ceiling = training max plus the accepted extrapolation margin
        ceiling = extrapolation.train_max_key + (extrapolation.margin or 0.0)
        out_of_range = bool(max_forced_mean > ceiling + 1e-9)
    return ForecastResult(
        scenario=scenario,
        variant=predictor.identity,
        report=report,
        per_scene=tuple(rows),
        anomaly=anomaly,
        out_of_validated_range=out_of_range,
    )
