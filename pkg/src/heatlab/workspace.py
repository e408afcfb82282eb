"""Workspace layout, scene cataloging, filtering, and stack assembly.

A workspace is one city: ``workspace.json`` (grid spec, UTC offset, analysis
config), ``lulc/lulc.grid``, ``scenes/<scene_id>/`` directories each holding
``scene.json`` plus one portable grid per band, ``predictions/<variant>/``
for externally produced model outputs, and ``analysis/`` for pipeline
results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .cooling import BaselineSpec
from .errors import DataError
from .grid import GeoGrid, GridSpec
from .gridio import load_grid, read_sidecar, save_grid
from .landcover import CategoryMap, DEFAULT_CATEGORY_CODES
from .spectral import DEFAULT_ALBEDO_WEIGHTS, EmissivityParams, SplitWindowCoefficients

SPECTRAL_BANDS = ("blue", "green", "red", "nir", "swir1", "swir2", "tirs1", "tirs2")
BAND_ORDER = SPECTRAL_BANDS + ("airtemp",)

DEFAULT_CONFIG: dict = {
    "categories": dict(DEFAULT_CATEGORY_CODES),
    "green_categories": ["trees"],
    "built_categories": ["built"],
    "rural_categories": ["rangeland", "bare_ground", "crops"],
    "min_park_area_m2": 10000.0,
    "baseline": {"ring_inner": 100.0, "ring_outer": 500.0, "min_pixels": 50, "fallback": "citywide_built"},
    "bin_width_m": 30.0,
    "max_dist_m": 300.0,
    "built_fraction_window_m": 330.0,
    "rural_max_built_fraction": 0.05,
    "source_sink_quantiles": [0.25, 0.75],
    "split_window": {
        # identity preset: LST = mean brightness temperature; deployments load
        # literature coefficients here with a source_label
        "b0": 0.0, "b1": 1.0, "b2": 0.0, "b3": 0.0, "b4": 0.0, "b5": 0.0, "b6": 0.0, "b7": 0.0,
        "source_label": "identity-mean",
    },
    "emissivity": {
        "ndvi_soil_threshold": 0.2,
        "ndvi_veg_threshold": 0.5,
        "eps_water": 0.991,
        "eps_soil": 0.966,
        "eps_veg": 0.985,
    },
    "albedo_weights": dict(DEFAULT_ALBEDO_WEIGHTS),
    "scene_filter": {"months": [6, 7, 8], "hour_range": [9.0, 16.0], "max_cloud": 0.3},
    "uhi_threshold_c": 2.0,
    "high_heat_q": 0.9,
    "train_val_ratio": 0.8,
    "random_fracs": [0.72, 0.18, 0.10],
    "extrapolation_tolerance_c": 2.0,
    "donor_min_pixels": 100,
    "donor_statistic": "median",
    "jitter_fraction": 0.5,
    "scenarios": [],
}


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 parse that accepts a trailing Z; result is timezone-aware UTC."""
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as e:
        raise DataError("bad_workspace", f"unparseable timestamp {text!r}: {e}") from e
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _merge_config(overrides: dict | None) -> dict:
    merged = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


@dataclass(frozen=True)
class WorkspaceConfig:
    raw: dict

    @property
    def categories(self) -> CategoryMap:
        return CategoryMap(self.raw["categories"])

    def _codes(self, key: str) -> set[int]:
        cat = self.categories
        return {cat.code(name) for name in self.raw[key]}

    @property
    def green_codes(self) -> set[int]:
        return self._codes("green_categories")

    @property
    def built_codes(self) -> set[int]:
        return self._codes("built_categories")

    @property
    def rural_codes(self) -> set[int]:
        return self._codes("rural_categories")

    @property
    def baseline_spec(self) -> BaselineSpec:
        return BaselineSpec.from_json(self.raw["baseline"])

    @property
    def split_window(self) -> SplitWindowCoefficients:
        return SplitWindowCoefficients.from_json(self.raw["split_window"])

    @property
    def emissivity_params(self) -> EmissivityParams:
        return EmissivityParams.from_json(self.raw["emissivity"])

    def built_fraction_radius_px(self, pixel_size: float) -> int:
        window = float(self.raw["built_fraction_window_m"])
        k = max(1, int(round(window / pixel_size)))
        return max(0, (k - 1) // 2)


@dataclass(frozen=True)
class SceneRecord:
    scene_id: str
    timestamp: str
    cloud_fraction: float
    band_paths: dict  # band name -> Path for gridded channels
    air_temp_c: float | None = None  # scalar air temperature alternative

    @property
    def when(self) -> datetime:
        return parse_timestamp(self.timestamp)


@dataclass(frozen=True)
class SceneStack:
    """Ordered band stack for one scene; air temperature is always last."""

    scene_id: str
    timestamp: str
    channels: dict  # band name -> GeoGrid, keys exactly BAND_ORDER
    provenance: tuple = ()

    def channel(self, name: str) -> GeoGrid:
        if name not in self.channels:
            raise DataError("missing_band", f"stack for {self.scene_id} has no {name!r} channel")
        return self.channels[name]

    @property
    def month(self) -> int:
        return parse_timestamp(self.timestamp).month

    def ordered(self) -> list[GeoGrid]:
        return [self.channel(b) for b in BAND_ORDER]

    def with_channel(self, name: str, grid: GeoGrid, note: str) -> "SceneStack":
        if name not in self.channels:
            raise DataError("missing_band", f"cannot replace unknown channel {name!r}")
        channels = dict(self.channels)
        channels[name] = grid
        return SceneStack(
            scene_id=self.scene_id,
            timestamp=self.timestamp,
            channels=channels,
            provenance=self.provenance + (note,),
        )


@dataclass
class Workspace:
    root: Path
    city_id: str
    grid_spec: GridSpec
    utc_offset_hours: float
    config: WorkspaceConfig
    scenes: list = field(default_factory=list)
    issues: list = field(default_factory=list)

    # -- paths ---------------------------------------------------------------

    @property
    def lulc_path(self) -> Path:
        return self.root / "lulc" / "lulc.grid"

    def scene_dir(self, scene_id: str) -> Path:
        return self.root / "scenes" / scene_id

    def predictions_dir(self, variant: str) -> Path:
        return self.root / "predictions" / variant

    @property
    def analysis_dir(self) -> Path:
        return self.root / "analysis"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def interventions_dir(self) -> Path:
        return self.root / "interventions"

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    # -- data access ---------------------------------------------------------

    def scene(self, scene_id: str) -> SceneRecord:
        for s in self.scenes:
            if s.scene_id == scene_id:
                return s
        raise DataError("scene_not_found", f"no scene {scene_id!r} in workspace {self.city_id}")

    def load_lulc(self) -> GeoGrid:
        if not self.lulc_path.exists():
            raise DataError("bad_workspace", f"workspace {self.city_id} has no LULC grid")
        grid = load_grid(self.lulc_path)
        if grid.spec != self.grid_spec:
            raise DataError("alignment_mismatch", "LULC grid does not match the workspace grid spec")
        return grid

    def build_stack(self, scene: SceneRecord) -> SceneStack:
        """Assemble the ordered stack; a scalar air temperature broadcasts to
        a constant channel."""
        channels: dict[str, GeoGrid] = {}
        for band in SPECTRAL_BANDS:
            path = scene.band_paths.get(band)
            if path is None:
                raise DataError("missing_band", f"scene {scene.scene_id} lacks band {band!r}")
            grid = load_grid(path)
            if grid.spec != self.grid_spec:
                raise DataError("alignment_mismatch", f"band {band} of scene {scene.scene_id} is misaligned")
            channels[band] = grid
        if "airtemp" in scene.band_paths:
            air = load_grid(scene.band_paths["airtemp"])
            if air.spec != self.grid_spec:
                raise DataError("alignment_mismatch", f"air channel of scene {scene.scene_id} is misaligned")
        elif scene.air_temp_c is not None:
            air = GeoGrid.full(self.grid_spec, float(scene.air_temp_c))
        else:
            raise DataError("missing_band", f"scene {scene.scene_id} has neither air grid nor scalar")
        channels["airtemp"] = air
        return SceneStack(scene_id=scene.scene_id, timestamp=scene.timestamp, channels=channels)


def write_workspace_json(root: Path, city_id: str, grid_spec: GridSpec, utc_offset_hours: float,
                         config_overrides: dict | None = None) -> dict:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    doc = {
        "city_id": city_id,
        "grid": grid_spec.to_json(),
        "utc_offset_hours": utc_offset_hours,
        "config": _merge_config(config_overrides),
    }
    (root / "workspace.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return doc


def catalog_scenes(root) -> Workspace:
    """Index a workspace directory; malformed scenes land in .issues."""
    root = Path(root)
    meta_path = root / "workspace.json"
    if not meta_path.exists():
        raise DataError("bad_workspace", f"{root} has no workspace.json")
    try:
        doc = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise DataError("bad_workspace", f"unparseable workspace.json: {e}") from e
    for key in ("city_id", "grid"):
        if key not in doc:
            raise DataError("bad_workspace", f"workspace.json missing {key!r}")
    grid_spec = GridSpec.from_json(doc["grid"])
    ws = Workspace(
        root=root,
        city_id=str(doc["city_id"]),
        grid_spec=grid_spec,
        utc_offset_hours=float(doc.get("utc_offset_hours", 0.0)),
        config=WorkspaceConfig(_merge_config(doc.get("config"))),
    )
    scenes_dir = root / "scenes"
    if not scenes_dir.exists():
        return ws
    for scene_dir in sorted(p for p in scenes_dir.iterdir() if p.is_dir()):
        sid = scene_dir.name
        meta_file = scene_dir / "scene.json"
        if not meta_file.exists():
            ws.issues.append(f"scene {sid}: missing scene.json")
            continue
        try:
            meta = json.loads(meta_file.read_text())
        except json.JSONDecodeError as e:
            ws.issues.append(f"scene {sid}: unparseable scene.json ({e})")
            continue
        problems = []
        timestamp = meta.get("timestamp")
        if not timestamp:
            problems.append("missing timestamp")
        else:
            try:
                parse_timestamp(timestamp)
            except DataError as e:
                problems.append(str(e.message))
        cloud = float(meta.get("cloud_fraction", 0.0))
        if not (0.0 <= cloud <= 1.0):
            problems.append(f"cloud_fraction {cloud} outside [0, 1]")
        band_paths: dict[str, Path] = {}
        for band in SPECTRAL_BANDS:
            path = scene_dir / f"{band}.grid"
            if not path.exists():
                problems.append(f"missing band {band}")
                continue
            try:
                side = read_sidecar(path)
                if GridSpec.from_json(side) != grid_spec:
                    problems.append(f"band {band} geometry mismatch")
                    continue
            except DataError as e:
                problems.append(f"band {band}: {e.message}")
                continue
            band_paths[band] = path
        air_scalar = meta.get("air_temp_c")
        air_path = scene_dir / "airtemp.grid"
        if air_path.exists():
            band_paths["airtemp"] = air_path
        elif air_scalar is None:
            problems.append("missing air temperature (grid or scalar)")
        if problems:
            ws.issues.append(f"scene {sid}: " + "; ".join(problems))
            continue
        ws.scenes.append(
            SceneRecord(
                scene_id=sid,
                timestamp=str(timestamp),
                cloud_fraction=cloud,
                band_paths=band_paths,
                air_temp_c=None if air_scalar is None else float(air_scalar),
            )
        )
    return ws


def filter_scenes(ws: Workspace, months=None, hour_range=None, max_cloud=None) -> list[SceneRecord]:
    """Pure predicate filter over the catalog; defaults come from config."""
    flt = ws.config.raw["scene_filter"]
    months = set(flt["months"]) if months is None else set(months)
    hour_range = tuple(flt["hour_range"]) if hour_range is None else tuple(hour_range)
    max_cloud = float(flt["max_cloud"]) if max_cloud is None else float(max_cloud)
    out = []
    for scene in ws.scenes:
        when = scene.when
        if when.month not in months:
            continue
        local_hour = (when.hour + when.minute / 60.0 + when.second / 3600.0 + ws.utc_offset_hours) % 24.0
        if not (hour_range[0] <= local_hour < hour_range[1]):
            continue
        if scene.cloud_fraction > max_cloud:
            continue
        out.append(scene)
    return out


def write_scene(ws_root: Path, scene_id: str, timestamp: str, bands: dict, air_temp_c: float | None = None,
                cloud_fraction: float = 0.0, air_grid: GeoGrid | None = None) -> None:
    """Write one scene directory (grids plus scene.json)."""
    scene_dir = Path(ws_root) / "scenes" / scene_id
    scene_dir.mkdir(parents=True, exist_ok=True)
    for band, grid in bands.items():
        save_grid(scene_dir / f"{band}.grid", grid, band=band, timestamp=timestamp)
    if air_grid is not None:
        save_grid(scene_dir / "airtemp.grid", air_grid, band="airtemp", timestamp=timestamp)
    meta = {"scene_id": scene_id, "timestamp": timestamp, "cloud_fraction": cloud_fraction}
    if air_temp_c is not None:
        meta["air_temp_c"] = float(air_temp_c)
    (scene_dir / "scene.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
