"""Synthetic city generator with planted, analytically known physics.

The world is a radially symmetric urban fabric: a dense core (density 1),
a linear taper ring, and an empty fringe. Four circular tree parks sit on
the core diagonals and a water body sits in the fringe. Per-scene surface
temperature is

    t = t_base + delta_scene
        + uhi_amplitude * density
        - internal_depth * min(d_in / internal_saturation_m, 1)   on park pixels
        - spillover_amplitude * exp(-d_out / spillover_decay_m)   elsewhere
        + N(0, noise_std)

where d_in / d_out are exact center-to-center distances to the park edge.
Thermal bands carry t (+-0.5), so the identity split-window preset recovers
it; reflectance bands follow per-category signatures with small noise. The
planted parameters are written to synth.json so tests and the oracle
predictor can read back ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import GeoGrid, GridSpec
from .gridio import save_grid
from .landcover import DEFAULT_CATEGORY_CODES, distance_m
from .workspace import SPECTRAL_BANDS, write_scene, write_workspace_json

# reflectance signatures (blue, green, red, nir, swir1, swir2) per category
BAND_SIGNATURES = {
    "trees": (0.04, 0.08, 0.05, 0.55, 0.20, 0.10),
    "built": (0.16, 0.18, 0.20, 0.27, 0.35, 0.30),
    "rangeland": (0.06, 0.10, 0.08, 0.28, 0.22, 0.15),
    "water": (0.07, 0.05, 0.03, 0.015, 0.01, 0.005),
}

REFLECTANCE_BANDS = ("blue", "green", "red", "nir", "swir1", "swir2")


def default_scenario_table() -> list[dict]:
    """Demo climate deltas: flat across months, ordered in rcp and year."""
    deltas = {
        "2.6": {2030: 0.4, 2050: 0.7, 2100: 0.9},
        "4.5": {2030: 0.6, 2050: 1.2, 2100: 2.2},
        "8.5": {2030: 0.8, 2050: 2.0, 2100: 3.7},
    }
    table = []
    for rcp in ("2.6", "4.5", "8.5"):
        for year in (2030, 2050, 2100):
            table.append({
                "rcp": rcp,
                "horizon_year": year,
                "monthly_delta": [deltas[rcp][year]] * 12,
                "source_label": "synthetic-demo",
            })
    return table


@dataclass(frozen=True)
class SyntheticSpec:
    city_id: str = "synthville"
    size: int = 512
    pixel_size: float = 30.0
    origin_x: float = 500000.0
    origin_y: float = 4850000.0
    crs_code: int = 32635
    utc_offset_hours: float = 2.0
    seed: int = 0
    n_scenes: int = 12
    scene_step_c: float = 0.5
    t_base: float = 18.0
    uhi_amplitude: float = 3.3
    internal_depth: float = 2.6
    internal_saturation_m: float = 200.0
    spillover_amplitude: float = 3.5
    spillover_decay_m: float = 150.0 / math.log(3.5)
    noise_std: float = 0.5
    air_gap_c: float = 2.0
    park_ndvi_threshold: float = 0.7
    band_noise_std: float = 0.004
    core_radius_frac: float = 183.0 / 512.0
    taper_radius_frac: float = 246.0 / 512.0
    park_offset_frac: float = 0.125
    park_radius_frac: float = 0.0625
    water_radius_frac: float = 0.04
    include_outliers: bool = True

    def __post_init__(self):
        if self.size < 64:
            raise DataError("bad_request", "synthetic grid must be at least 64 pixels on a side")
        if not 1 <= self.n_scenes <= 25:
            raise DataError("bad_request", "n_scenes must be between 1 and 25")
        for name in ("uhi_amplitude", "internal_depth", "spillover_amplitude", "noise_std", "band_noise_std"):
            if getattr(self, name) < 0:
                raise DataError("bad_request", f"{name} must be non-negative")
        for name in ("internal_saturation_m", "spillover_decay_m", "pixel_size"):
            if getattr(self, name) <= 0:
                raise DataError("bad_request", f"{name} must be positive")
        park_reach = self.park_offset_frac * math.sqrt(2.0) + self.park_radius_frac
        if park_reach >= self.core_radius_frac:
            raise DataError("bad_request", "park layout infeasible: parks must fit inside the dense core")
        if not self.core_radius_frac < self.taper_radius_frac <= 0.5:
            raise DataError("bad_request", "park layout infeasible: need core < taper <= half the grid")

    @property
    def grid_spec(self) -> GridSpec:
        return GridSpec(self.size, self.size, self.origin_x, self.origin_y, self.pixel_size, self.crs_code)


@dataclass(frozen=True)
class SynthScene:
    scene_id: str
    timestamp: str
    cloud_fraction: float
    delta_c: float
    air_temp_c: float
    bands: dict
    true_lst: GeoGrid


@dataclass(frozen=True)
class SynthWorld:
    spec: SyntheticSpec
    lulc: GeoGrid
    density: GeoGrid
    park_mask: np.ndarray
    scenes: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _disk(size: int, center_rc, radius_px: float) -> np.ndarray:
    rows = np.arange(size, dtype=np.float64)[:, None] + 0.5
    cols = np.arange(size, dtype=np.float64)[None, :] + 0.5
    return (rows - center_rc[0]) ** 2 + (cols - center_rc[1]) ** 2 <= radius_px ** 2


def _density_field(spec: SyntheticSpec) -> np.ndarray:
    n = spec.size
    rows = np.arange(n, dtype=np.float64)[:, None] + 0.5
    cols = np.arange(n, dtype=np.float64)[None, :] + 0.5
    r = np.sqrt((rows - n / 2.0) ** 2 + (cols - n / 2.0) ** 2)
    r_core = spec.core_radius_frac * n
    r_taper = spec.taper_radius_frac * n
    rho = np.clip((r_taper - r) / (r_taper - r_core), 0.0, 1.0)
    return rho


def _park_centers(spec: SyntheticSpec) -> list[tuple[float, float]]:
    n = spec.size
    off = spec.park_offset_frac * n
    c = n / 2.0
    return [(c - off, c - off), (c - off, c + off), (c + off, c - off), (c + off, c + off)]


def _scene_schedule(spec: SyntheticSpec) -> list[tuple[str, str, float, float]]:
    """(scene_id, timestamp, delta_c, cloud_fraction) rows."""
    rows = []
    for k in range(spec.n_scenes):
        day = 1 + k
        rows.append((f"sc{k:02d}", f"2024-07-{day:02d}T08:30:00Z", spec.scene_step_c * k, 0.05))
    if spec.include_outliers:
        rows.append(("sc_winter", "2024-01-15T08:30:00Z", -10.0, 0.0))
        rows.append(("sc_cloudy", "2024-07-30T08:30:00Z", 0.25, 0.45))
    return rows


def generate_world(spec: SyntheticSpec) -> SynthWorld:
    n = spec.size
    gspec = spec.grid_spec
    rho = _density_field(spec)

    park_r = spec.park_radius_frac * n
    centers = _park_centers(spec)
    park = np.zeros((n, n), dtype=bool)
    for c in centers:
        park |= _disk(n, c, park_r)
    water_center = (0.85 * n, 0.15 * n)
    water = _disk(n, water_center, spec.water_radius_frac * n)
    if (park & water).any():
        raise DataError("bad_request", "park layout infeasible: water body overlaps a park")

    rng_built = np.random.default_rng([spec.seed, 0])
    built = (rng_built.random((n, n)) < rho) & ~park & ~water

    codes = DEFAULT_CATEGORY_CODES
    lulc_values = np.full((n, n), codes["rangeland"], dtype=np.float32)
    lulc_values[built] = codes["built"]
    lulc_values[park] = codes["trees"]
    lulc_values[water] = codes["water"]
    lulc = GeoGrid(gspec, lulc_values, validate=False)
    density = GeoGrid(gspec, rho.astype(np.float32), validate=False)

    d_in = distance_m(~park, spec.pixel_size)
    d_out = distance_m(park, spec.pixel_size)
    internal = spec.internal_depth * np.minimum(d_in / spec.internal_saturation_m, 1.0)
    spill = spec.spillover_amplitude * np.exp(-d_out / spec.spillover_decay_m)
    shape_term = spec.uhi_amplitude * rho - np.where(park, internal, spill)

    scenes = []
    for k, (scene_id, timestamp, delta, cloud) in enumerate(_scene_schedule(spec)):
        rng_noise = np.random.default_rng([spec.seed, 1, k])
        noise = rng_noise.normal(0.0, spec.noise_std, size=(n, n)) if spec.noise_std > 0 else 0.0
        lst = (spec.t_base + delta + shape_term + noise).astype(np.float32)
        bands = {}
        for b_idx, band in enumerate(REFLECTANCE_BANDS):
            vals = np.empty((n, n), dtype=np.float64)
            for cat, sig in BAND_SIGNATURES.items():
                vals[np.rint(lulc_values).astype(np.int64) == codes[cat]] = sig[b_idx]
            rng_band = np.random.default_rng([spec.seed, 2, k, b_idx])
            vals = vals + rng_band.normal(0.0, spec.band_noise_std, size=(n, n))
            bands[band] = GeoGrid(gspec, np.clip(vals, 0.0, 1.0).astype(np.float32), validate=False)
        bands["tirs1"] = GeoGrid(gspec, (lst.astype(np.float64) + 0.5).astype(np.float32), validate=False)
        bands["tirs2"] = GeoGrid(gspec, (lst.astype(np.float64) - 0.5).astype(np.float32), validate=False)
        air = spec.t_base + delta - spec.air_gap_c
        scenes.append(SynthScene(scene_id, timestamp, cloud, delta, air, bands,
                                 GeoGrid(gspec, lst, validate=False)))

    meta = {
        "generator": "heatlab.synthetic",
        "seed": spec.seed,
        "t_base": spec.t_base,
        "uhi_amplitude": spec.uhi_amplitude,
        "internal_depth": spec.internal_depth,
        "internal_saturation_m": spec.internal_saturation_m,
        "spillover_amplitude": spec.spillover_amplitude,
        "spillover_decay_m": spec.spillover_decay_m,
        "noise_std": spec.noise_std,
        "air_gap_c": spec.air_gap_c,
        "park_ndvi_threshold": spec.park_ndvi_threshold,
        "band_noise_std": spec.band_noise_std,
        "band_signatures": {k: list(v) for k, v in BAND_SIGNATURES.items()},
        "layout": {
            "size": n,
            "pixel_size": spec.pixel_size,
            "core_radius_px": spec.core_radius_frac * n,
            "taper_radius_px": spec.taper_radius_frac * n,
            "park_centers_px": [list(c) for c in centers],
            "park_radius_px": park_r,
            "water_center_px": list(water_center),
            "water_radius_px": spec.water_radius_frac * n,
        },
        "scenes": [
            {
                "scene_id": s.scene_id,
                "timestamp": s.timestamp,
                "delta_c": s.delta_c,
                "cloud_fraction": s.cloud_fraction,
                "air_temp_c": s.air_temp_c,
            }
            for s in scenes
        ],
    }
    return SynthWorld(spec=spec, lulc=lulc, density=density, park_mask=park, scenes=scenes, meta=meta)


def write_synthetic_workspace(spec: SyntheticSpec, root) -> Path:
    """Generate the world and lay it out as a standard workspace."""
    root = Path(root)
    world = generate_world(spec)
    overrides = {
        # keep the far-field reference ring clear of the planted spillover
        "baseline": {"ring_inner": 600.0, "ring_outer": 1200.0, "min_pixels": 50, "fallback": "citywide_built"},
        "scenarios": default_scenario_table(),
    }
    write_workspace_json(root, spec.city_id, spec.grid_spec, spec.utc_offset_hours, overrides)
    save_grid(root / "lulc" / "lulc.grid", world.lulc, band="lulc")
    save_grid(root / "built_density.grid", world.density, band="built_density")
    for scene in world.scenes:
        ordered = {b: scene.bands[b] for b in SPECTRAL_BANDS}
        write_scene(root, scene.scene_id, scene.timestamp, ordered,
                    air_temp_c=scene.air_temp_c, cloud_fraction=scene.cloud_fraction)
    (root / "synth.json").write_text(json.dumps(world.meta, sort_keys=True, indent=2) + "\n")
    return root
