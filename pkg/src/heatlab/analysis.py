"""Workspace-level analysis runs: truth LST derivation, cooling profiles,
urban gradients, source/sink tables, splits, model fitting, prediction, and
evaluation. Results are persisted as deterministic JSON under analysis/.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import spectral
from .cooling import (
    aggregate_profiles,
    anomaly,
    builtup_baseline,
    cooling_profile,
    source_sink,
    urban_gradient,
)
from .errors import DataError
from .evaluation import (
    ExtrapolationReport,
    SplitPlan,
    extrapolation_report,
    split_high_heat,
    split_random,
)
from .grid import GeoGrid, PixelMask
from .gridio import load_grid, save_grid
from .landcover import built_fraction, built_mask, category_mask, euclidean_distance, extract_parks
from .predictors import fit_baseline, get_predictor
from .stats import MetricReport, metrics
from .workspace import SceneRecord, Workspace, filter_scenes


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def derive_truth_lst(ws: Workspace, stack, lulc: GeoGrid | None = None) -> GeoGrid:
    """Split-window LST from the thermal pair; cloud-category pixels are
    removed so they never enter statistics downstream."""
    cfg = ws.config
    nd = spectral.ndvi(stack.channel("nir"), stack.channel("red"))
    eps = spectral.emissivity(nd, cfg.emissivity_params)
    eps_diff = eps.with_values(np.zeros(eps.spec.shape, dtype=np.float32), validate=False)
    lst = spectral.split_window_lst(stack.channel("tirs1"), stack.channel("tirs2"),
                                    eps, eps_diff, cfg.split_window)
    if lulc is None:
        lulc = ws.load_lulc()
    clouds = category_mask(lulc, [cfg.categories.code("clouds")])
    if clouds.values.any():
        values = lst.values.copy()
        values[clouds.values] = np.float32(lst.nodata)
        lst = lst.with_values(values, validate=False)
    return lst


def scene_lst(ws: Workspace, scene: SceneRecord, variant: str | None, lulc: GeoGrid) -> GeoGrid:
    """Truth (variant None/"truth") or a predictor variant's LST for a scene."""
    if variant in (None, "truth"):
        return derive_truth_lst(ws, ws.build_stack(scene), lulc)
    predictor = get_predictor(ws, variant)
    return predictor.predict(ws.build_stack(scene))


def _map_scenes(fn, scenes, jobs: int) -> list:
    """Apply fn to scenes, optionally in a thread pool; order is preserved
    so the reduction is independent of worker count."""
    if jobs <= 1 or len(scenes) <= 1:
        return [fn(s) for s in scenes]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, scenes))


def _filtered(ws: Workspace, scenes=None) -> list:
    scenes = filter_scenes(ws) if scenes is None else list(scenes)
    if not scenes:
        raise DataError("scene_not_found", "no scenes pass the workspace filters")
    return scenes


def run_cooling(ws: Workspace, variant: str | None = None, jobs: int = 1,
                scenes=None, persist: bool = True) -> dict:
    """Park-by-park anomaly profiles, aggregated count-weighted across parks
    and scenes."""
    scenes = _filtered(ws, scenes)
    cfg = ws.config
    raw = cfg.raw
    lulc = ws.load_lulc()
    parks = extract_parks(lulc, sorted(cfg.green_codes), float(raw["min_park_area_m2"]))
    if parks.count == 0:
        raise DataError("degenerate_mask", "no parks at or above the minimum area")
    built = built_mask(lulc, cfg.built_codes)
    bin_w = float(raw["bin_width_m"])
    max_d = float(raw["max_dist_m"])
    labels = parks.labels.values.astype(np.int64)
    any_park = labels > 0

    # distance fields depend only on geometry, compute once
    per_park_masks = {pid: labels == pid for pid in sorted(parks.park_areas)}
    dist_out = {pid: euclidean_distance(PixelMask(lulc.spec, m), "outside")
                for pid, m in per_park_masks.items()}
    dist_in = {pid: euclidean_distance(PixelMask(lulc.spec, m), "inside")
               for pid, m in per_park_masks.items()}
    spill_domain = PixelMask(lulc.spec, ~any_park)

    def one_scene(scene):
        lst = scene_lst(ws, scene, variant, lulc)
        internals, spills, park_rows = [], [], []
        for pid, mask in per_park_masks.items():
            base = builtup_baseline(lst, built, dist_out[pid], cfg.baseline_spec)
            dt = anomaly(lst, base)
            inner = cooling_profile(dt, dist_in[pid], PixelMask(lulc.spec, mask), bin_w, max_d, "internal")
            spill = cooling_profile(dt, dist_out[pid], spill_domain, bin_w, max_d, "spillover")
            internals.append(inner)
            spills.append(spill)
            park_rows.append({
                "park_id": int(pid),
                "area_m2": float(parks.park_areas[pid]),
                "baseline_c": base,
                "internal": inner.to_json(),
                "spillover": spill.to_json(),
            })
        return {
            "scene_id": scene.scene_id,
            "timestamp": scene.timestamp,
            "internal": aggregate_profiles(internals),
            "spillover": aggregate_profiles(spills),
            "parks": park_rows,
        }

    rows = _map_scenes(one_scene, scenes, jobs)
    agg_internal = aggregate_profiles([r["internal"] for r in rows])
    agg_spillover = aggregate_profiles([r["spillover"] for r in rows])
    result = {
        "city_id": ws.city_id,
        "variant": variant or "truth",
        "kind": "cooling",
        "params": {
            "bin_width_m": bin_w,
            "max_dist_m": max_d,
            "baseline": cfg.baseline_spec.to_json(),
            "min_park_area_m2": float(raw["min_park_area_m2"]),
        },
        "n_parks": parks.count,
        "n_scenes": len(scenes),
        "internal": agg_internal.to_json(),
        "spillover": agg_spillover.to_json(),
        "per_scene": [
            {
                "scene_id": r["scene_id"],
                "timestamp": r["timestamp"],
                "internal": r["internal"].to_json(),
                "spillover": r["spillover"].to_json(),
                "parks": r["parks"],
            }
            for r in rows
        ],
    }
    if persist:
        write_json(ws.analysis_dir / "cooling" / f"{variant or 'truth'}.json", result)
    return result


def run_gradient(ws: Workspace, variant: str | None = None, axis: str = "built_fraction_decile",
                 jobs: int = 1, scenes=None, persist: bool = True) -> dict:
    """Anomaly against a rural reference, organized along an urban axis.

    The reference is the mean LST over rural-category pixels with a low
    built fraction, so park interiors never contaminate it. The mean anomaly
    grid across scenes is persisted for map layers.
    """
    scenes = _filtered(ws, scenes)
    cfg = ws.config
    raw = cfg.raw
    lulc = ws.load_lulc()
    built = built_mask(lulc, cfg.built_codes)
    radius = cfg.built_fraction_radius_px(ws.grid_spec.pixel_size)
    rural_cat = category_mask(lulc, sorted(cfg.rural_codes))
    max_rural_bf = float(raw["rural_max_built_fraction"])

    def one_scene(scene):
        lst = scene_lst(ws, scene, variant, lulc)
        valid = PixelMask(lulc.spec, lst.data_mask() & lulc.data_mask())
        bf = built_fraction(built, valid, radius)
        rural = rural_cat.values & (bf.data_mask()) & (bf.values <= max_rural_bf) & lst.data_mask()
        if not rural.any():
            raise DataError("degenerate_mask", "no rural reference pixels for the gradient")
        reference = float(lst.values[rural].astype(np.float64).mean())
        dt = anomaly(lst, reference)
        grad = urban_gradient(dt, bf, axis=axis)
        return scene, dt, grad, reference, int(rural.sum())

    results = _map_scenes(one_scene, scenes, jobs)

    # count-weighted bin means across scenes
    first = results[0][2]
    centers = np.asarray(first.bin_centers, dtype=np.float64)
    sums = np.zeros(centers.size)
    counts = np.zeros(centers.size, dtype=np.int64)
    shape = ws.grid_spec.shape
    total = np.zeros(shape, dtype=np.float64)
    cover = np.zeros(shape, dtype=np.int64)
    per_scene = []
    for scene, dt, grad, reference, n_rural in results:
        if not np.array_equal(np.asarray(grad.bin_centers), centers):
            raise DataError("bad_request", "gradient bins differ between scenes")
        c = np.asarray(grad.count, dtype=np.int64)
        m = np.asarray(grad.mean_anomaly, dtype=np.float64)
        ok = c > 0
        sums[ok] += m[ok] * c[ok]
        counts += c
        mask = dt.data_mask()
        total[mask] += dt.values[mask].astype(np.float64)
        cover[mask] += 1
        per_scene.append({
            "scene_id": scene.scene_id,
            "timestamp": scene.timestamp,
            "rural_reference_c": reference,
            "rural_pixels": n_rural,
            "gradient": grad.to_json(),
        })

    mean_anomaly = [float(sums[i] / counts[i]) if counts[i] else None for i in range(centers.size)]
    anomaly_values = np.full(shape, np.float32(-9999.0), dtype=np.float32)
    covered = cover > 0
    anomaly_values[covered] = (total[covered] / cover[covered]).astype(np.float32)
    anomaly_grid = GeoGrid(ws.grid_spec, anomaly_values, nodata=-9999.0, validate=False)

    result = {
        "city_id": ws.city_id,
        "variant": variant or "truth",
        "kind": "gradient",
        "axis": axis,
        "params": {
            "built_fraction_window_m": float(raw["built_fraction_window_m"]),
            "rural_max_built_fraction": max_rural_bf,
        },
        "n_scenes": len(scenes),
        "bin_centers": [float(v) for v in centers],
        "mean_anomaly": mean_anomaly,
        "count": [int(v) for v in counts],
        "per_scene": per_scene,
    }
    if persist:
        write_json(ws.analysis_dir / "gradient" / f"{variant or 'truth'}.json", result)
        grid_path = ws.analysis_dir / "anomaly" / f"{variant or 'truth'}.grid"
        grid_path.parent.mkdir(parents=True, exist_ok=True)
        save_grid(grid_path, anomaly_grid, band="anomaly")
    return result


def run_source_sink(ws: Workspace, variant: str | None = None, jobs: int = 1,
                    scenes=None, persist: bool = True) -> dict:
    """Source/sink cross-tab per scene, pooled by summing class counts."""
    scenes = _filtered(ws, scenes)
    cfg = ws.config
    raw = cfg.raw
    lulc = ws.load_lulc()
    built = built_mask(lulc, cfg.built_codes)
    radius = cfg.built_fraction_radius_px(ws.grid_spec.pixel_size)
    rural_cat = category_mask(lulc, sorted(cfg.rural_codes))
    max_rural_bf = float(raw["rural_max_built_fraction"])
    quantiles = tuple(raw["source_sink_quantiles"])

    def one_scene(scene):
        lst = scene_lst(ws, scene, variant, lulc)
        valid = PixelMask(lulc.spec, lst.data_mask() & lulc.data_mask())
        bf = built_fraction(built, valid, radius)
        rural = rural_cat.values & bf.data_mask() & (bf.values <= max_rural_bf) & lst.data_mask()
        if not rural.any():
            raise DataError("degenerate_mask", "no rural reference pixels")
        reference = float(lst.values[rural].astype(np.float64).mean())
        dt = anomaly(lst, reference)
        return scene, source_sink(dt, lulc, cfg.categories, quantiles)

    results = _map_scenes(one_scene, scenes, jobs)
    pooled: dict[str, dict] = {}
    for _, table in results:
        for name, row in table.rows.items():
            agg = pooled.setdefault(name, {"source": 0, "neutral": 0, "sink": 0, "sum_dt": 0.0, "n": 0})
            n = row["pixel_count"]
            agg["source"] += int(round(row["source_fraction"] * n))
            agg["sink"] += int(round(row["sink_fraction"] * n))
            agg["neutral"] += int(round(row["neutral_fraction"] * n))
            agg["sum_dt"] += row["mean_anomaly"] * n
            agg["n"] += n
    rows = {}
    for name in sorted(pooled):
        agg = pooled[name]
        n = agg["n"]
        rows[name] = {
            "pixel_count": n,
            "source_fraction": agg["source"] / n if n else 0.0,
            "sink_fraction": agg["sink"] / n if n else 0.0,
            "neutral_fraction": agg["neutral"] / n if n else 0.0,
            "mean_anomaly": agg["sum_dt"] / n if n else None,
        }
    result = {
        "city_id": ws.city_id,
        "variant": variant or "truth",
        "kind": "source_sink",
        "quantiles": list(quantiles),
        "n_scenes": len(scenes),
        "rows": rows,
        "per_scene": [
            {"scene_id": s.scene_id, "timestamp": s.timestamp, "table": t.to_json()}
            for s, t in results
        ],
    }
    if persist:
        write_json(ws.analysis_dir / "source_sink" / f"{variant or 'truth'}.json", result)
    return result


def scene_mean_keys(ws: Workspace, scenes, jobs: int = 1) -> list[float]:
    """Ordering keys: citywide mean truth LST per scene."""
    lulc = ws.load_lulc()

    def one(scene):
        lst = derive_truth_lst(ws, ws.build_stack(scene), lulc)
        mask = lst.data_mask()
        if not mask.any():
            raise DataError("degenerate_mask", f"scene {scene.scene_id} has no usable LST pixels")
        return float(lst.values[mask].astype(np.float64).mean())

    return _map_scenes(one, scenes, jobs)


def make_split(ws: Workspace, strategy: str, seed: int = 0, q: float | None = None,
               jobs: int = 1, persist: bool = True) -> dict:
    """Build and persist a split plan over the filtered scenes."""
    scenes = _filtered(ws)
    raw = ws.config.raw
    if strategy == "random":
        plan = split_random(len(scenes), tuple(raw["random_fracs"]), seed=seed)
        keys = None
    elif strategy in ("high_heat", "high-heat"):
        strategy = "high_heat"
        keys = scene_mean_keys(ws, scenes, jobs)
        plan = split_high_heat(keys, q=float(q if q is not None else raw["high_heat_q"]),
                               train_val_ratio=float(raw["train_val_ratio"]), seed=seed)
    else:
        raise DataError("bad_split", f"unknown split strategy {strategy!r}")
    payload = {
        "city_id": ws.city_id,
        "strategy": strategy,
        "plan": plan.to_json(),
        "scene_ids": [s.scene_id for s in scenes],
        "keys": keys,
    }
    if persist:
        write_json(ws.analysis_dir / "splits" / f"{strategy}.json", payload)
    return payload


def load_split(ws: Workspace, strategy: str) -> dict:
    path = ws.analysis_dir / "splits" / f"{strategy}.json"
    if not path.exists():
        raise DataError("bad_split", f"no stored {strategy!r} split; run the split command first")
    return json.loads(path.read_text())


def _scenes_by_id(ws: Workspace, scene_ids) -> list:
    return [ws.scene(sid) for sid in scene_ids]


def fit_baseline_model(ws: Workspace, split_doc: dict | None = None, jobs: int = 1,
                       persist: bool = True):
    """Fit the linear model on the train+val pool of a split (all filtered
    scenes when no split is given)."""
    lulc = ws.load_lulc()
    if split_doc is None:
        train_scenes = _filtered(ws)
        split_json = None
    else:
        plan = SplitPlan.from_json(split_doc["plan"])
        scenes = _scenes_by_id(ws, split_doc["scene_ids"])
        train_scenes = [scenes[i] for i in list(plan.train) + list(plan.val)]
        split_json = split_doc["plan"]
    if not train_scenes:
        raise DataError("bad_split", "split leaves no scenes to fit on")

    def one(scene):
        stack = ws.build_stack(scene)
        return stack, derive_truth_lst(ws, stack, lulc)

    pairs = _map_scenes(one, train_scenes, jobs)
    model = fit_baseline(pairs, ws.config.raw["albedo_weights"])
    if persist:
        model.save(ws.models_dir / "baseline.json")
        write_json(ws.models_dir / "baseline_meta.json", {
            "trained_on": [s.scene_id for s in train_scenes],
            "split": split_json,
            "model": model.to_json(),
        })
    return model


def run_predict(ws: Workspace, variant: str, out_variant: str | None = None,
                jobs: int = 1, scenes=None) -> list:
    """Write one prediction grid per scene under predictions/<variant>/."""
    predictor = get_predictor(ws, variant)
    out_variant = out_variant or variant
    scenes = list(ws.scenes) if scenes is None else list(scenes)
    out_dir = ws.predictions_dir(out_variant)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(scene):
        grid = predictor.predict(ws.build_stack(scene))
        path = out_dir / f"{scene.scene_id}.grid"
        save_grid(path, grid, band="lst", timestamp=scene.timestamp)
        return str(path)

    return _map_scenes(one, scenes, jobs)


def run_eval(ws: Workspace, variant: str, strategy: str | None = None,
             jobs: int = 1, persist: bool = True) -> dict:
    """Pixel metrics for a variant against truth; with a high-heat split,
    also the scene-mean extrapolation report."""
    scenes = _filtered(ws)
    lulc = ws.load_lulc()
    predictor = get_predictor(ws, variant)

    def one(scene):
        stack = ws.build_stack(scene)
        truth = derive_truth_lst(ws, stack, lulc)
        pred = predictor.predict(stack)
        both = truth.data_mask() & pred.data_mask()
        if not both.any():
            raise DataError("degenerate_mask", f"scene {scene.scene_id}: no overlapping pixels")
        t = truth.values[both].astype(np.float64)
        p = pred.values[both].astype(np.float64)
        return scene, metrics(p, t), float(t.mean()), float(p.mean())

    results = _map_scenes(one, scenes, jobs)
    n_total = sum(r[1].n for r in results)
    mae = sum(r[1].mae * r[1].n for r in results) / n_total
    mse = sum(r[1].mse * r[1].n for r in results) / n_total
    mbe = sum(r[1].mbe * r[1].n for r in results) / n_total
    pooled = MetricReport(mae=mae, mse=mse, rmse=float(np.sqrt(mse)), mbe=mbe, n=n_total)

    extrap = None
    if strategy == "high_heat":
        split_doc = load_split(ws, "high_heat")
        plan = SplitPlan.from_json(split_doc["plan"])
        if split_doc["scene_ids"] != [s.scene_id for s in scenes]:
            raise DataError("bad_split", "stored split refers to a different scene set")
        keys = np.asarray(split_doc["keys"], dtype=np.float64)
        truth_means = np.array([r[2] for r in results])
        pred_means = np.array([r[3] for r in results])
        extrap = extrapolation_report(plan, keys, pred_means, truth_means,
                                      tolerance=float(ws.config.raw["extrapolation_tolerance_c"]))
    result = {
        "city_id": ws.city_id,
        "variant": variant,
        "pooled": pooled.to_json(),
        "per_scene": [
            {"scene_id": s.scene_id, "metrics": m.to_json(), "truth_mean_c": tm, "pred_mean_c": pm}
            for s, m, tm, pm in results
        ],
        "extrapolation": extrap.to_json() if extrap else None,
    }
    if persist:
        write_json(ws.analysis_dir / "eval" / f"{variant}.json", result)
        if extrap is not None:
            write_json(ws.analysis_dir / "extrapolation" / f"{variant}.json", extrap.to_json())
    return result


def load_extrapolation(ws: Workspace, variant: str) -> ExtrapolationReport | None:
    path = ws.analysis_dir / "extrapolation" / f"{variant}.json"
    if not path.exists():
        return None
    return ExtrapolationReport.from_json(json.loads(path.read_text()))


def scenario_cache_paths(ws: Workspace, rcp: str, year: int, variant: str) -> tuple:
    slug = f"{str(rcp).replace('.', '_')}_{year}_{variant}"
    base = ws.analysis_dir / "scenarios"
    return base / f"{slug}.json", base / f"{slug}.grid"


def run_forecast(ws: Workspace, rcp: str, year: int, variant: str, use_cache: bool = True) -> dict:
    """Forced-run report plus mean anomaly grid, cached under analysis/."""
    from .predictors import get_predictor
    from .scenarios import find_scenario, forecast

    json_path, grid_path = scenario_cache_paths(ws, rcp, year, variant)
    if use_cache and json_path.exists() and grid_path.exists():
        return json.loads(json_path.read_text())
    scenario = find_scenario(ws, rcp, year)
    predictor = get_predictor(ws, variant)
    result = forecast(ws, scenario, predictor, extrapolation=load_extrapolation(ws, variant))
    payload = result.to_json()
    grid_path.parent.mkdir(parents=True, exist_ok=True)
    save_grid(grid_path, result.anomaly, band="anomaly")
    write_json(json_path, payload)
    return payload


def run_intervention(ws: Workspace, body: dict, use_cache: bool = True) -> dict:
    """Evaluate (or reload) an intervention; results persist under
    interventions/<request_id>/ with before/after/delta grids."""
    from .intervention import InterventionSpec, evaluate_intervention
    from .predictors import available_variants, get_predictor

    spec = InterventionSpec.from_json(body)
    if spec.variant is None:
        options = available_variants(ws)
        if not options:
            raise DataError("predictor_unavailable", "no predictor variant available in this workspace")
        variant = options[0]
    else:
        variant = spec.variant
    if spec.scene_id is None:
        scenes = _filtered(ws)
        scene = scenes[0]
    else:
        scene = ws.scene(spec.scene_id)
    spec = InterventionSpec(
        polygon=spec.polygon,
        target_category=spec.target_category,
        statistic=spec.statistic,
        jitter_fraction=spec.jitter_fraction,
        seed=spec.seed,
        scene_id=scene.scene_id,
        variant=variant,
    )
    rid = spec.request_id()
    out_dir = ws.interventions_dir / rid
    doc_path = out_dir / "result.json"
    if use_cache and doc_path.exists():
        return json.loads(doc_path.read_text())
    predictor = get_predictor(ws, variant)
    result = evaluate_intervention(ws, scene, predictor, spec)
    payload = result.to_json()
    payload["layers"] = {
        which: f"/api/cities/{ws.city_id}/interventions/{rid}/layers/{which}.png"
        for which in ("before", "after", "delta")
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    save_grid(out_dir / "before.grid", result.before, band="lst")
    save_grid(out_dir / "after.grid", result.after, band="lst")
    save_grid(out_dir / "delta.grid", result.delta, band="delta")
    write_json(doc_path, payload)
    return payload


def eval_directories(truth_dir, pred_dir) -> dict:
    """Directory-vs-directory grid comparison for externally produced runs."""
    truth_dir, pred_dir = Path(truth_dir), Path(pred_dir)
    truth_files = sorted(truth_dir.glob("*.grid"))
    if not truth_files:
        raise DataError("bad_grid_file", f"no .grid files under {truth_dir}")
    per_scene = []
    se_sum = ae_sum = e_sum = 0.0
    n_total = 0
    for tf in truth_files:
        pf = pred_dir / tf.name
        if not pf.exists():
            raise DataError("scene_not_found", f"prediction dir lacks {tf.name}")
        t, p = load_grid(tf), load_grid(pf)
        if t.spec != p.spec:
            raise DataError("alignment_mismatch", f"{tf.name}: grids are misaligned")
        both = t.data_mask() & p.data_mask()
        if not both.any():
            continue
        m = metrics(p.values[both].astype(np.float64), t.values[both].astype(np.float64))
        per_scene.append({"scene_id": tf.stem, "metrics": m.to_json()})
        se_sum += m.mse * m.n
        ae_sum += m.mae * m.n
        e_sum += m.mbe * m.n
        n_total += m.n
    if n_total == 0:
        raise DataError("degenerate_mask", "no overlapping data pixels in any pair")
    pooled = MetricReport(mae=ae_sum / n_total, mse=se_sum / n_total,
                          rmse=float(np.sqrt(se_sum / n_total)), mbe=e_sum / n_total, n=n_total)
    return {"pooled": pooled.to_json(), "per_scene": per_scene}
