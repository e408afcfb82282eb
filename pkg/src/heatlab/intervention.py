"""Greening interventions: replace built pixels inside a polygon with a
donor spectral signature, then measure the predicted cooling.

The donor signature is a per-band statistic over target-category pixels
outside the polygon, with optional jitter proportional to the donor spread.
Thermal and air channels are never touched; only reflectance bands change,
so a predictor sees the intervention purely through its spectral features.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cooling import BaselineSpec, CoolingProfile, anomaly, builtup_baseline, cooling_profile
from .errors import DataError
from .grid import GeoGrid, GridSpec, PixelMask
from .landcover import built_mask, category_mask, euclidean_distance, extract_parks
from .workspace import SceneStack, Workspace

REFLECTANCE_BANDS = ("blue", "green", "red", "nir", "swir1", "swir2")


@dataclass(frozen=True)
class InterventionSpec:
    polygon: tuple
    target_category: str = "trees"
    statistic: str | None = None
    jitter_fraction: float | None = None
    seed: int = 0
    scene_id: str | None = None
    variant: str | None = None

    def to_json(self) -> dict:
        return {
            "polygon": [[float(x), float(y)] for x, y in self.polygon],
            "target_category": self.target_category,
            "statistic": self.statistic,
            "jitter_fraction": self.jitter_fraction,
            "seed": self.seed,
            "scene_id": self.scene_id,
            "variant": self.variant,
        }

    @classmethod
    def from_json(cls, d: dict) -> "InterventionSpec":
        if "polygon" not in d:
            raise DataError("invalid_polygon", "request lacks a polygon")
        try:
            polygon = tuple((float(x), float(y)) for x, y in d["polygon"])
        except (TypeError, ValueError):
            raise DataError("invalid_polygon", "polygon must be a list of [x, y] pairs")
        jitter = d.get("jitter_fraction")
        return cls(
            polygon=polygon,
            target_category=str(d.get("target_category", "trees")),
            statistic=d.get("statistic"),
            jitter_fraction=None if jitter is None else float(jitter),
            seed=int(d.get("seed", 0)),
            scene_id=d.get("scene_id"),
            variant=d.get("variant"),
        )

    def request_id(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _segments_cross(a, b, c, d) -> bool:
    """True when segment ab properly or improperly intersects cd."""

    def orient(p, q, r):
        v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_seg(p, q, r):
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(a, b, c):
        return True
    if o2 == 0 and on_seg(a, b, d):
        return True
    if o3 == 0 and on_seg(c, d, a):
        return True
    if o4 == 0 and on_seg(c, d, b):
        return True
    return False


def validate_polygon(polygon) -> None:
    if len(polygon) < 3:
        raise DataError("invalid_polygon", "a polygon needs at least 3 vertices")
    for x, y in polygon:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DataError("invalid_polygon", "polygon vertices must be finite")
    n = len(polygon)
    area2 = 0.0
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        area2 += x1 * y2 - x2 * y1
    if area2 == 0.0:
        raise DataError("invalid_polygon", "polygon has zero area")
    for i in range(n):
        for j in range(i + 1, n):
            # skip adjacent edges (they share a vertex by construction)
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]):
                raise DataError("invalid_polygon", "polygon edges self-intersect")


def rasterize_spec(polygon, spec: GridSpec) -> PixelMask:
    validate_polygon(polygon)
    xs = np.array([p[0] for p in polygon], dtype=np.float64)
    ys = np.array([p[1] for p in polygon], dtype=np.float64)
    values = kernels.rasterize_polygon(xs, ys, spec.height, spec.width,
                                       spec.origin_x, spec.origin_y, spec.pixel_size)
    return PixelMask(spec, values)


def donor_signature(stack: SceneStack, lulc: GeoGrid, target_code: int,
                    exclude: np.ndarray, min_pixels: int, statistic: str) -> dict:
    """Per-band (center, spread) over target-category pixels outside the
    polygon. Median centers use the even-count midpoint convention."""
    if statistic not in ("median", "mean"):
        raise DataError("bad_request", f"donor statistic must be median or mean, got {statistic!r}")
    pool = category_mask(lulc, [target_code]).values & ~exclude
    out = {}
    for band in REFLECTANCE_BANDS:
        g = stack.channel(band)
        sel = pool & g.data_mask()
        n = int(sel.sum())
        if n < min_pixels:
            raise DataError(
                "insufficient_donor",
                f"band {band}: {n} donor pixels of category code {target_code}, need {min_pixels}",
            )
        vals = g.values[sel].astype(np.float64)
        center = float(np.median(vals)) if statistic == "median" else float(vals.mean())
        out[band] = {"center": center, "std": float(vals.std()), "count": n}
    return out


@dataclass(frozen=True)
class InpaintOutcome:
    stack: SceneStack
    lulc: GeoGrid
    polygon_mask: PixelMask
    replaced: PixelMask
    donor: dict


def inpaint(stack: SceneStack, lulc: GeoGrid, spec: InterventionSpec, config) -> InpaintOutcome:
    """Apply the intervention; pixels outside the replacement set are
    untouched bit for bit."""
    raw = config.raw
    target_code = config.categories.code(spec.target_category)
    statistic = spec.statistic or raw["donor_statistic"]
    jitter = raw["jitter_fraction"] if spec.jitter_fraction is None else spec.jitter_fraction
    jitter = float(np.clip(jitter, 0.0, 1.0))
    min_pixels = int(raw["donor_min_pixels"])

    mask = rasterize_spec(spec.polygon, lulc.spec)
    built = built_mask(lulc, config.built_codes)
    target = category_mask(lulc, [target_code])
    replace = mask.values & (built.values | target.values)
    if not replace.any():
        raise DataError("mask_not_built", "intervention polygon covers no built pixels")

    donor = donor_signature(stack, lulc, target_code, mask.values, min_pixels, statistic)

    new_stack = stack
    for b_idx, band in enumerate(REFLECTANCE_BANDS):
        g = new_stack.channel(band)
        sel = replace & g.data_mask()
        values = g.values.copy()
        center = donor[band]["center"]
        spread = donor[band]["std"] * jitter
        n_sel = int(sel.sum())
        if spread > 0 and n_sel:
            rng = np.random.default_rng([spec.seed, b_idx])
            drawn = center + spread * rng.standard_normal(n_sel)
        else:
            drawn = np.full(n_sel, center)
        values[sel] = np.clip(drawn, 0.0, 1.0).astype(np.float32)
        new_stack = new_stack.with_channel(band, g.with_values(values, validate=False),
                                           f"inpainted {n_sel} px from donor code {target_code}")

    lulc_values = lulc.values.copy()
    lulc_values[replace] = np.float32(target_code)
    new_lulc = lulc.with_values(lulc_values, validate=False)
    return InpaintOutcome(new_stack, new_lulc, mask, PixelMask(lulc.spec, replace), donor)


def principal_axis(mask: PixelMask) -> tuple:
    """(centroid_xy, unit direction) of the mask's longest spread."""
    rows, cols = np.nonzero(mask.values)
    if rows.size == 0:
        raise DataError("degenerate_mask", "empty mask has no axis")
    spec = mask.spec
    xs = spec.origin_x + (cols.astype(np.float64) + 0.5) * spec.pixel_size
    ys = spec.origin_y - (rows.astype(np.float64) + 0.5) * spec.pixel_size
    cx, cy = float(xs.mean()), float(ys.mean())
    dx, dy = xs - cx, ys - cy
    cov = np.array([[np.dot(dx, dx), np.dot(dx, dy)], [np.dot(dx, dy), np.dot(dy, dy)]]) / rows.size
    if not cov.any():
        return (cx, cy), (1.0, 0.0)
    w, v = np.linalg.eigh(cov)
    axis = v[:, int(np.argmax(w))]
    if axis[0] < 0 or (axis[0] == 0 and axis[1] < 0):
        axis = -axis
    return (cx, cy), (float(axis[0]), float(axis[1]))


def transect(mask: PixelMask, before: GeoGrid, after: GeoGrid,
             reach_m: float = 300.0, step_m: float = 30.0) -> list:
    """Samples along the principal axis, extended reach_m past both ends."""
    (cx, cy), (vx, vy) = principal_axis(mask)
    rows, cols = np.nonzero(mask.values)
    spec = mask.spec
    xs = spec.origin_x + (cols.astype(np.float64) + 0.5) * spec.pixel_size
    ys = spec.origin_y - (rows.astype(np.float64) + 0.5) * spec.pixel_size
    t = (xs - cx) * vx + (ys - cy) * vy
    t0, t1 = float(t.min()) - reach_m, float(t.max()) + reach_m
    n_steps = int(math.floor((t1 - t0) / step_m)) + 1
    out = []
    for k in range(n_steps):
        tt = t0 + k * step_m
        px, py = cx + tt * vx, cy + tt * vy
        row, col = spec.world_to_pixel(px, py)
        if not (0 <= row < spec.height and 0 <= col < spec.width):
            continue
        b = float(before.values[row, col])
        a = float(after.values[row, col])
        b_ok = b != before.nodata
        a_ok = a != after.nodata
        out.append({
            "distance_m": k * step_m,
            "x": px,
            "y": py,
            "row": row,
            "col": col,
            "before_c": b if b_ok else None,
            "after_c": a if a_ok else None,
            "delta_c": (a - b) if (a_ok and b_ok) else None,
            "in_mask": bool(mask.values[row, col]),
        })
    return out


@dataclass(frozen=True)
class InterventionResult:
    request_id: str
    spec: InterventionSpec
    scene_id: str
    variant: str
    replaced_pixels: int
    mask_pixels: int
    area_m2: float
    mean_delta_in_mask: float
    donor: dict
    transect: list
    internal_profile: CoolingProfile
    spillover_profile: CoolingProfile
    before: GeoGrid
    after: GeoGrid
    delta: GeoGrid

    def to_json(self) -> dict:
        return {
            "request_id": self.request_id,
            "spec": self.spec.to_json(),
            "scene_id": self.scene_id,
            "variant": self.variant,
            "replaced_pixels": self.replaced_pixels,
            "mask_pixels": self.mask_pixels,
            "area_m2": self.area_m2,
            "mean_delta_in_mask": self.mean_delta_in_mask,
            "donor": self.donor,
            "transect": self.transect,
            "internal_profile": self.internal_profile.to_json(),
            "spillover_profile": self.spillover_profile.to_json(),
        }


def evaluate_intervention(ws: Workspace, scene, predictor, spec: InterventionSpec) -> InterventionResult:
    """Inpaint one scene, predict before and after, and profile the new park."""
    config = ws.config
    raw = config.raw
    stack = ws.build_stack(scene)
    lulc = ws.load_lulc()
    outcome = inpaint(stack, lulc, spec, config)

    before = predictor.predict(stack)
    after = predictor.predict(outcome.stack)
    ok = before.data_mask() & after.data_mask()
    delta_values = np.full(before.spec.shape, np.float32(-9999.0), dtype=np.float32)
    delta_values[ok] = (after.values[ok].astype(np.float64) - before.values[ok].astype(np.float64)).astype(np.float32)
    delta = GeoGrid(before.spec, delta_values, nodata=-9999.0, validate=False)

    sel = outcome.replaced.values & ok
    if not sel.any():
        raise DataError("degenerate_mask", "no usable pixels in the replacement set")
    mean_delta = float(delta.values[sel].astype(np.float64).mean())

    rows = transect(outcome.replaced, before, after)

    # the new park: green components of the modified map touching the mask
    green_codes = sorted(set(config.green_codes) | {config.categories.code(spec.target_category)})
    parks = extract_parks(outcome.lulc, green_codes, min_area=0.0)
    labels = parks.labels.values
    touched = np.unique(labels[outcome.replaced.values])
    touched = touched[touched > 0]
    if touched.size == 0:
        raise DataError("degenerate_mask", "replacement set produced no green component")
    new_park = np.isin(labels, touched)
    park_mask = PixelMask(lulc.spec, new_park)
    any_green = labels > 0

    built2 = built_mask(outcome.lulc, config.built_codes)
    dist_out = euclidean_distance(park_mask, "outside")
    base = builtup_baseline(after, built2, dist_out, config.baseline_spec)
    dt = anomaly(after, base)
    dist_in = euclidean_distance(park_mask, "inside")
    bin_w = float(raw["bin_width_m"])
    max_d = float(raw["max_dist_m"])
    internal = cooling_profile(dt, dist_in, PixelMask(lulc.spec, new_park), bin_w, max_d, "internal")
    spill_domain = PixelMask(lulc.spec, ~any_green)
    spillover = cooling_profile(dt, dist_out, spill_domain, bin_w, max_d, "spillover")

    px_area = lulc.spec.pixel_size ** 2
    return InterventionResult(
        request_id=spec.request_id(),
        spec=spec,
        scene_id=scene.scene_id,
        variant=predictor.identity,
        replaced_pixels=int(outcome.replaced.values.sum()),
        mask_pixels=int(outcome.polygon_mask.values.sum()),
        area_m2=float(outcome.replaced.values.sum()) * px_area,
        mean_delta_in_mask=mean_delta,
        donor=outcome.donor,
        transect=rows,
        internal_profile=internal,
        spillover_profile=spillover,
        before=before,
        after=after,
        delta=delta,
    )
