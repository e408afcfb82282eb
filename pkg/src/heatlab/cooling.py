"""Empirical cooling analysis: built-up baselines, anomaly fields, distance
profiles, urban gradients, and the heat source/sink cross-tabulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .grid import GeoGrid, PixelMask, require_aligned
from .landcover import CategoryMap
from .stats import nearest_rank, pooled_mean_std


def _nan_to_none(x: float) -> float | None:
    return None if not np.isfinite(x) else float(x)


@dataclass(frozen=True)
class CoolingProfile:
    """Per-distance-bin anomaly statistics on one side of a park boundary."""

    side: str  # "internal" | "spillover"
    bin_edges: np.ndarray  # meters, ascending, len = nbins + 1
    mean_dt: np.ndarray  # degrees C, NaN where count == 0
    std_dt: np.ndarray  # population std, NaN where count == 0
    count: np.ndarray  # pixels per bin
    mean_dist: np.ndarray  # mean pixel distance per bin, NaN where empty

    def __post_init__(self):
        nbins = len(self.bin_edges) - 1
        for name in ("mean_dt", "std_dt", "count", "mean_dist"):
            if len(getattr(self, name)) != nbins:
                raise DataError("bad_request", f"profile field {name} length != bin count")

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "bin_edges": [float(e) for e in self.bin_edges],
            "mean_dt": [_nan_to_none(v) for v in self.mean_dt],
            "std_dt": [_nan_to_none(v) for v in self.std_dt],
            "count": [int(v) for v in self.count],
            "mean_dist": [_nan_to_none(v) for v in self.mean_dist],
        }

    @classmethod
    def from_json(cls, d: dict) -> "CoolingProfile":
        def arr(key):
            return np.array([np.nan if v is None else float(v) for v in d[key]], dtype=np.float64)

        return cls(
            side=d["side"],
            bin_edges=np.asarray(d["bin_edges"], dtype=np.float64),
            mean_dt=arr("mean_dt"),
            std_dt=arr("std_dt"),
            count=np.asarray(d["count"], dtype=np.int64),
            mean_dist=arr("mean_dist"),
        )


@dataclass(frozen=True)
class BaselineSpec:
    ring_inner: float = 100.0
    ring_outer: float = 500.0
    min_pixels: int = 50
    fallback: str = "citywide_built"  # or "error"

    def __post_init__(self):
        if not (0 < self.ring_inner < self.ring_outer):
            raise DataError("bad_request", "baseline ring needs 0 < inner < outer")
        if self.fallback not in ("citywide_built", "error"):
            raise DataError("bad_request", f"unknown baseline fallback {self.fallback!r}")

    @classmethod
    def from_json(cls, d: dict) -> "BaselineSpec":
        return cls(
            ring_inner=float(d.get("ring_inner", 100.0)),
            ring_outer=float(d.get("ring_outer", 500.0)),
            min_pixels=int(d.get("min_pixels", 50)),
            fallback=str(d.get("fallback", "citywide_built")),
        )

    def to_json(self) -> dict:
        return {
            "ring_inner": self.ring_inner,
            "ring_outer": self.ring_outer,
            "min_pixels": self.min_pixels,
            "fallback": self.fallback,
        }


def builtup_baseline(lst: GeoGrid, built: PixelMask, park_outside_dist: GeoGrid, spec: BaselineSpec) -> float:
    """Mean LST over built pixels in the distance ring around a park.

    Falls back to the citywide built mean (or fails) when the ring holds
    fewer than min_pixels usable pixels.
    """
    require_aligned(lst, built, park_outside_dist)
    usable = built.values & lst.data_mask()
    dist_ok = park_outside_dist.data_mask()
    d = park_outside_dist.values
    ring = usable & dist_ok & (d >= spec.ring_inner) & (d <= spec.ring_outer)
    n_ring = int(ring.sum())
    if n_ring >= spec.min_pixels:
        return float(lst.values[ring].astype(np.float64).mean())
    if spec.fallback == "error":
        raise DataError("empty_ring", f"baseline ring holds {n_ring} pixels, needs {spec.min_pixels}")
    if not usable.any():
        raise DataError("empty_ring", "no built pixels available for the citywide fallback")
    return float(lst.values[usable].astype(np.float64).mean())


def anomaly(lst: GeoGrid, baseline: float) -> GeoGrid:
    """Per-pixel lst - baseline; nodata propagates."""
    out = np.where(lst.data_mask(), lst.values - np.float32(baseline), np.float32(lst.nodata))
    return lst.with_values(out.astype(np.float32), validate=False)


def cooling_profile(
    dt: GeoGrid,
    dist: GeoGrid,
    domain: PixelMask,
    bin_width: float,
    max_dist: float,
    side: str,
) -> CoolingProfile:
    """Bin domain pixels by distance and average the anomaly per bin."""
    require_aligned(dt, dist, domain)
    if bin_width <= 0:
        raise DataError("bad_request", "bin_width must be positive")
    nbins = int(np.ceil(max_dist / bin_width))
    edges = np.arange(nbins + 1, dtype=np.float64) * bin_width
    use = domain.values & dt.data_mask() & dist.data_mask()
    d = dist.values[use].astype(np.float64)
    v = dt.values[use].astype(np.float64)
    inside = d < max_dist
    d, v = d[inside], v[inside]
    idx = np.minimum((d / bin_width).astype(np.int64), nbins - 1)
    count = np.bincount(idx, minlength=nbins).astype(np.int64)
    sum_v = np.bincount(idx, weights=v, minlength=nbins)
    sum_v2 = np.bincount(idx, weights=v * v, minlength=nbins)
    sum_d = np.bincount(idx, weights=d, minlength=nbins)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(count > 0, sum_v / count, np.nan)
        var = np.where(count > 0, sum_v2 / count - mean * mean, np.nan)
        mean_dist = np.where(count > 0, sum_d / count, np.nan)
    std = np.sqrt(np.maximum(var, 0.0))
    return CoolingProfile(side=side, bin_edges=edges, mean_dt=mean, std_dt=std, count=count, mean_dist=mean_dist)


def aggregate_profiles(profiles: list[CoolingProfile]) -> CoolingProfile:
    """Count-weighted combination of profiles sharing bin geometry."""
    if not profiles:
        raise DataError("bad_request", "nothing to aggregate")
    first = profiles[0]
    for p in profiles[1:]:
        if p.side != first.side or not np.array_equal(p.bin_edges, first.bin_edges):
            raise DataError("bad_request", "profiles disagree on side or bin edges")
    nbins = len(first.bin_edges) - 1
    mean = np.full(nbins, np.nan)
    std = np.full(nbins, np.nan)
    mean_dist = np.full(nbins, np.nan)
    count = np.zeros(nbins, dtype=np.int64)
    for b in range(nbins):
        rows = [(p.mean_dt[b], p.std_dt[b], p.count[b]) for p in profiles if p.count[b] > 0]
        if not rows:
            continue
        means, stds, counts = zip(*rows)
        m, s, n = pooled_mean_std(means, stds, counts)
        dists = [p.mean_dist[b] for p in profiles if p.count[b] > 0]
        mean[b], std[b], count[b] = m, s, n
        mean_dist[b] = float(np.dot(dists, counts) / n)
    return CoolingProfile(
        side=first.side, bin_edges=first.bin_edges.copy(), mean_dt=mean, std_dt=std, count=count, mean_dist=mean_dist
    )


@dataclass(frozen=True)
class UrbanGradient:
    axis: str  # "built_fraction_decile" | "radial_distance"
    bin_centers: np.ndarray
    mean_anomaly: np.ndarray  # NaN where count == 0
    count: np.ndarray

    def to_json(self) -> dict:
        return {
            "axis": self.axis,
            "bin_centers": [float(c) for c in self.bin_centers],
            "mean_anomaly": [_nan_to_none(v) for v in self.mean_anomaly],
            "count": [int(c) for c in self.count],
        }


def urban_gradient(
    dt: GeoGrid,
    built_frac: GeoGrid,
    axis: str = "built_fraction_decile",
    radial_bin_width: float = 250.0,
) -> UrbanGradient:
    """Mean anomaly along an urban-density axis.

    Deciles are nearest-rank on the built-fraction distribution; the radial
    mode bins distance from the built-mass centroid (built_fraction-weighted).
    """
    require_aligned(dt, built_frac)
    use = dt.data_mask() & built_frac.data_mask()
    v = dt.values[use].astype(np.float64)
    bf = built_frac.values[use].astype(np.float64)
    if axis == "built_fraction_decile":
        nbins = 10
        if v.size == 0:
            idx = np.zeros(0, dtype=np.int64)
        else:
            edges = np.array([nearest_rank(bf, k / 10) for k in range(1, 10)])
            idx = np.searchsorted(edges, bf, side="right")
        centers = (np.arange(nbins) + 0.5) / nbins
    elif axis == "radial_distance":
        rows, cols = np.nonzero(use)
        x = dt.spec.x_center(cols)
        y = dt.spec.y_center(rows)
        total = bf.sum()
        if total <= 0 or v.size == 0:
            raise DataError("degenerate_mask", "no built mass to take a centroid of")
        cx = float((bf * x).sum() / total)
        cy = float((bf * y).sum() / total)
        r = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
        nbins = max(1, int(np.ceil(r.max() / radial_bin_width))) if r.size else 1
        idx = np.minimum((r / radial_bin_width).astype(np.int64), nbins - 1)
        centers = (np.arange(nbins) + 0.5) * radial_bin_width
    else:
        raise DataError("bad_request", f"unknown gradient axis {axis!r}")
    count = np.bincount(idx, minlength=nbins).astype(np.int64)
    sums = np.bincount(idx, weights=v, minlength=nbins)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(count > 0, sums / count, np.nan)
    return UrbanGradient(axis=axis, bin_centers=centers, mean_anomaly=mean, count=count)


@dataclass(frozen=True)
class SourceSinkTable:
    t_low: float
    t_high: float
    rows: dict = field(default_factory=dict)  # category name -> stats dict

    def to_json(self) -> dict:
        return {"t_low": self.t_low, "t_high": self.t_high, "categories": self.rows}


def source_sink(dt: GeoGrid, lulc: GeoGrid, categories: CategoryMap, quantiles=(0.25, 0.75)) -> SourceSinkTable:
    """Cross-tabulate anomaly extremes against land cover.

    Pixels strictly below the low quantile are sinks, strictly above the high
    quantile are sources; the quantiles are nearest-rank over all usable
    pixels, so ties land in the neutral class.
    """
    require_aligned(dt, lulc)
    q_low, q_high = quantiles
    if not (0 < q_low <= q_high <= 1):
        raise DataError("bad_request", f"bad quantile pair {quantiles}")
    use = dt.data_mask() & lulc.data_mask()
    v = dt.values[use].astype(np.float64)
    codes = np.rint(lulc.values[use]).astype(np.int64)
    if v.size == 0:
        raise DataError("degenerate_mask", "no usable pixels for source/sink analysis")
    t_low = nearest_rank(v, q_low)
    t_high = nearest_rank(v, q_high)
    rows: dict[str, dict] = {}
    for code in np.unique(codes):
        sel = codes == code
        n = int(sel.sum())
        vals = v[sel]
        sink = int((vals < t_low).sum())
        source = int((vals > t_high).sum())
        name = categories.name_of(int(code)) or f"code_{int(code)}"
        rows[name] = {
            "source_fraction": source / n,
            "neutral_fraction": (n - source - sink) / n,
            "sink_fraction": sink / n,
            "mean_anomaly": float(vals.mean()),
            "pixel_count": n,
        }
    return SourceSinkTable(t_low=t_low, t_high=t_high, rows=rows)
