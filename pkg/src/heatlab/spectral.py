"""Spectral indices and split-window land-surface temperature.

All operations are per-pixel, nodata-absorbing (any nodata operand produces a
nodata pixel, never a fabricated value), and work in degrees Celsius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .grid import GeoGrid, require_aligned


@dataclass(frozen=True)
class SplitWindowCoefficients:
    b0: float
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float
    b7: float
    source_label: str = ""

    def __post_init__(self):
        for name in ("b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7"):
            if not np.isfinite(getattr(self, name)):
                raise DataError("bad_request", f"split-window coefficient {name} is not finite")

    @classmethod
    def from_json(cls, d: dict) -> "SplitWindowCoefficients":
        return cls(*(float(d[f"b{i}"]) for i in range(8)), source_label=str(d.get("source_label", "")))

    def to_json(self) -> dict:
        out = {f"b{i}": getattr(self, f"b{i}") for i in range(8)}
        out["source_label"] = self.source_label
        return out


@dataclass(frozen=True)
class EmissivityParams:
    ndvi_soil_threshold: float = 0.2
    ndvi_veg_threshold: float = 0.5
    eps_water: float = 0.991
    eps_soil: float = 0.966
    eps_veg: float = 0.985

    def __post_init__(self):
        if not self.ndvi_soil_threshold < self.ndvi_veg_threshold:
            raise DataError("bad_request", "ndvi_soil_threshold must be below ndvi_veg_threshold")
        for name in ("eps_water", "eps_soil", "eps_veg"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise DataError("bad_request", f"{name} must lie in (0, 1], got {v}")

    @classmethod
    def from_json(cls, d: dict) -> "EmissivityParams":
        return cls(**{k: float(v) for k, v in d.items()})

    def to_json(self) -> dict:
        return {
            "ndvi_soil_threshold": self.ndvi_soil_threshold,
            "ndvi_veg_threshold": self.ndvi_veg_threshold,
            "eps_water": self.eps_water,
            "eps_soil": self.eps_soil,
            "eps_veg": self.eps_veg,
        }


def _normalized_difference(a: GeoGrid, b: GeoGrid) -> GeoGrid:
    require_aligned(a, b)
    valid = a.data_mask() & b.data_mask()
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    denom = av + bv
    valid &= denom != 0.0
    out = np.full(a.spec.shape, a.nodata, dtype=np.float32)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (av - bv) / denom
    out[valid] = ratio[valid].astype(np.float32)
    return a.with_values(out, validate=False)


def ndvi(nir: GeoGrid, red: GeoGrid) -> GeoGrid:
    """(nir - red) / (nir + red); zero denominator yields nodata."""
    return _normalized_difference(nir, red)


def ndbi(swir1: GeoGrid, nir: GeoGrid) -> GeoGrid:
    """(swir1 - nir) / (swir1 + nir); zero denominator yields nodata."""
    return _normalized_difference(swir1, nir)


def emissivity(ndvi_grid: GeoGrid, p: EmissivityParams) -> GeoGrid:
    """NDVI-threshold emissivity with a squared fractional-vegetation blend.

    ndvi < 0 -> water; ndvi <= soil threshold -> bare soil; ndvi > veg
    threshold -> full vegetation; between the thresholds the value blends
    soil -> veg by ((ndvi - soil) / (veg - soil))^2.
    """
    v = ndvi_grid.values.astype(np.float64)
    valid = ndvi_grid.data_mask()
    span = p.ndvi_veg_threshold - p.ndvi_soil_threshold
    pv = np.clip((v - p.ndvi_soil_threshold) / span, 0.0, 1.0) ** 2
    eps = p.eps_soil + (p.eps_veg - p.eps_soil) * pv
    eps = np.where(v > p.ndvi_veg_threshold, p.eps_veg, eps)
    eps = np.where(v <= p.ndvi_soil_threshold, p.eps_soil, eps)
    eps = np.where(v < 0.0, p.eps_water, eps)
    out = np.full(ndvi_grid.spec.shape, ndvi_grid.nodata, dtype=np.float32)
    out[valid] = eps[valid].astype(np.float32)
    return ndvi_grid.with_values(out, validate=False)


def split_window_lst(
    t_i: GeoGrid,
    t_j: GeoGrid,
    eps_mean: GeoGrid,
    eps_diff: GeoGrid,
    c: SplitWindowCoefficients,
) -> GeoGrid:
    """Two-band split-window LST in degrees C.

    LST = b0 + (b1 + b2*(1-e)/e + b3*de/e^2) * (t_i+t_j)/2
             + (b4 + b5*(1-e)/e + b6*de/e^2) * (t_i-t_j)/2
             + b7*(t_i-t_j)^2

    Pixels with eps_mean <= 0 become nodata instead of aborting.
    """
    require_aligned(t_i, t_j, eps_mean, eps_diff)
    valid = t_i.data_mask() & t_j.data_mask() & eps_mean.data_mask() & eps_diff.data_mask()
    ti = t_i.values.astype(np.float64)
    tj = t_j.values.astype(np.float64)
    e = eps_mean.values.astype(np.float64)
    de = eps_diff.values.astype(np.float64)
    valid &= e > 0.0
    mean_t = (ti + tj) / 2.0
    diff_t = (ti - tj) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = (1.0 - e) / e
        rel2 = de / (e * e)
        lst = (
            c.b0
            + (c.b1 + c.b2 * rel + c.b3 * rel2) * mean_t
            + (c.b4 + c.b5 * rel + c.b6 * rel2) * diff_t
            + c.b7 * (ti - tj) ** 2
        )
    out = np.full(t_i.spec.shape, t_i.nodata, dtype=np.float32)
    out[valid] = lst[valid].astype(np.float32)
    return t_i.with_values(out, validate=False)


DEFAULT_ALBEDO_WEIGHTS = {
    "blue": 0.356,
    "red": 0.130,
    "nir": 0.373,
    "swir1": 0.085,
    "swir2": 0.072,
    "bias": -0.0018,
    "scale": 1.016,
}


def albedo(bands: dict[str, GeoGrid], weights: dict | None = None) -> GeoGrid:
    """Broadband shortwave albedo as a fixed weighted sum of reflectances.

    weights maps band name -> coefficient, plus "bias" and "scale" entries:
    albedo = (sum(w_b * band_b) + bias) / scale.
    """
    w = dict(DEFAULT_ALBEDO_WEIGHTS if weights is None else weights)
    bias = float(w.pop("bias", 0.0))
    scale = float(w.pop("scale", 1.0))
    names = [name for name in w if w[name] != 0.0]
    if not names:
        raise DataError("missing_band", "albedo weights name no bands")
    for name in names:
        if name not in bands:
            raise DataError("missing_band", f"albedo needs band {name!r}")
    first = bands[names[0]]
    require_aligned(*(bands[n] for n in names))
    valid = np.ones(first.spec.shape, dtype=bool)
    acc = np.zeros(first.spec.shape, dtype=np.float64)
    for name in names:
        g = bands[name]
        valid &= g.data_mask()
        acc += float(w[name]) * g.values.astype(np.float64)
    result = (acc + bias) / scale
    out = np.full(first.spec.shape, first.nodata, dtype=np.float32)
    out[valid] = result[valid].astype(np.float32)
    return first.with_values(out, validate=False)
