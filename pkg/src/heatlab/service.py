"""HTTP service exposing workspaces: map layers as PNG, profile and
scenario reports, and synchronous greening interventions.

Every error crossing this boundary is a catalog code wrapped as
``{"error": {"code", "message", "detail"}}`` with a stable status mapping.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import __version__, kernels
from .analysis import run_forecast, run_intervention, scenario_cache_paths
from .cooling import CoolingProfile
from .errors import ERROR_CATALOG, HeatlabError
from .evaluation import compare_profiles
from .grid import GeoGrid
from .gridio import load_grid
from .landcover import built_fraction, built_mask
from .predictors import available_variants, get_predictor
from .render import (
    grid_stats,
    legend_for,
    render_categorical,
    render_continuous,
    render_rgb,
    style_for,
)
from .scenarios import load_scenarios
from .schemas import ALL_SCHEMAS
from .spectral import ndvi
from .workspace import Workspace, catalog_scenes, filter_scenes

API_VERSION = 1
MAX_SYNC_PIXELS = 1024 * 1024

STATUS_BY_CODE = {
    "city_not_found": 404,
    "scene_not_found": 404,
    "layer_not_found": 404,
    "variant_not_found": 404,
    "scenario_not_found": 404,
    "analysis_pending": 409,
    "grid_too_large": 413,
    "internal_error": 500,
}


def _error_response(exc: HeatlabError) -> JSONResponse:
    status = STATUS_BY_CODE.get(exc.code, 400)
    return JSONResponse(status_code=status, content={"error": exc.to_json()})


class CityRegistry:
    def __init__(self, root: Path):
        self.root = Path(root)
        self._cities: dict[str, Workspace] = {}
        self.rescan()

    def rescan(self) -> None:
        cities = {}
        if self.root.is_dir():
            for child in sorted(self.root.iterdir()):
                if (child / "workspace.json").exists():
                    ws = catalog_scenes(child)
                    cities[ws.city_id] = ws
        self._cities = cities

    def ids(self) -> list[str]:
        return sorted(self._cities)

    def get(self, city_id: str) -> Workspace:
        ws = self._cities.get(city_id)
        if ws is None:
            raise HeatlabError("city_not_found", f"no workspace for city {city_id!r}")
        return ws


AVAILABLE_LAYERS = ("lst", "prediction", "anomaly", "ndvi", "rgb", "lulc", "built_fraction", "built_density")


def _city_summary(ws: Workspace) -> dict:
    filtered = {s.scene_id for s in filter_scenes(ws)}
    layers = [l for l in AVAILABLE_LAYERS if l != "built_density" or (ws.root / "built_density.grid").exists()]
    return {
        "city_id": ws.city_id,
        "grid": ws.grid_spec.to_json(),
        "utc_offset_hours": ws.utc_offset_hours,
        "n_scenes": len(ws.scenes),
        "scene_ids": [s.scene_id for s in ws.scenes],
        "filtered_scene_ids": sorted(filtered),
        "layers": layers,
        "variants": available_variants(ws),
        "scenarios": [sc.to_json() for sc in load_scenarios(ws)],
        "issues": list(ws.issues),
    }


def _pick_scene(ws: Workspace, scene_id: str | None):
    if scene_id is not None:
        return ws.scene(scene_id)
    filtered = filter_scenes(ws)
    if not filtered:
        raise HeatlabError("scene_not_found", "no scenes pass the workspace filters")
    return filtered[0]


def _pick_variant(ws: Workspace, variant: str | None) -> str:
    if variant is not None:
        return variant
    options = available_variants(ws)
    if not options:
        raise HeatlabError("predictor_unavailable", "no predictor variant available in this workspace")
    return options[0]


def _truth_lst(ws: Workspace, scene) -> GeoGrid:
    from .analysis import derive_truth_lst

    return derive_truth_lst(ws, ws.build_stack(scene))


def _resolve_layer(ws: Workspace, layer: str, scene_id: str | None, variant: str | None,
                   palette: str | None):
    """(rendered, meta) for a named layer."""
    if layer in ("lst", "ndvi", "rgb"):
        scene = _pick_scene(ws, scene_id)
        stack = ws.build_stack(scene)
        if layer == "rgb":
            rendered = render_rgb(stack.channel("red"), stack.channel("green"), stack.channel("blue"))
            return rendered, {"scene_id": scene.scene_id, "variant": None}
        if layer == "lst":
            grid = _truth_lst(ws, scene)
        else:
            grid = ndvi(stack.channel("nir"), stack.channel("red"))
        default_palette, (vmin, vmax) = style_for(layer)
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return rendered, {"scene_id": scene.scene_id, "variant": None}
    if layer == "prediction":
        scene = _pick_scene(ws, scene_id)
        name = _pick_variant(ws, variant)
        grid = get_predictor(ws, name).predict(ws.build_stack(scene))
        default_palette, (vmin, vmax) = style_for(layer)
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return rendered, {"scene_id": scene.scene_id, "variant": name}
    if layer == "anomaly":
        name = variant or "truth"
        path = ws.analysis_dir / "anomaly" / f"{name}.grid"
        if not path.exists():
            raise HeatlabError("analysis_pending", f"no anomaly grid for {name!r}; run the gradient analysis")
        grid = load_grid(path)
        default_palette, (vmin, vmax) = style_for(layer)
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return rendered, {"scene_id": None, "variant": name}
    if layer == "lulc":
        rendered = render_categorical(ws.load_lulc(), ws.config.categories)
        return rendered, {"scene_id": None, "variant": None}
    if layer == "built_fraction":
        from .grid import PixelMask

        lulc = ws.load_lulc()
        built = built_mask(lulc, ws.config.built_codes)
        grid = built_fraction(built, PixelMask(lulc.spec, lulc.data_mask()),
                              ws.config.built_fraction_radius_px(ws.grid_spec.pixel_size))
        default_palette, (vmin, vmax) = style_for(layer)
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return rendered, {"scene_id": None, "variant": None}
    if layer == "built_density":
        path = ws.root / "built_density.grid"
        if not path.exists():
            raise HeatlabError("layer_not_found", "this workspace has no built_density layer")
        grid = load_grid(path)
        default_palette, (vmin, vmax) = style_for(layer)
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return rendered, {"scene_id": None, "variant": None}
    raise HeatlabError("layer_not_found", f"unknown layer {layer!r}; choose from {list(AVAILABLE_LAYERS)}")


def _load_profiles(ws: Workspace, kind: str, variants: list[str]) -> dict:
    if kind not in ("internal", "spillover"):
        raise HeatlabError("bad_request", f"kind must be internal or spillover, got {kind!r}")
    truth_path = ws.analysis_dir / "cooling" / "truth.json"
    if not truth_path.exists():
        raise HeatlabError("analysis_pending", "no cooling analysis for truth; run it first")
    truth_doc = json.loads(truth_path.read_text())
    truth = CoolingProfile.from_json(truth_doc[kind])
    out = {"city_id": ws.city_id, "kind": kind, "truth": truth.to_json(), "variants": {}}
    for name in variants:
        vpath = ws.analysis_dir / "cooling" / f"{name}.json"
        if not vpath.exists():
            if name not in available_variants(ws):
                raise HeatlabError("variant_not_found", f"unknown variant {name!r}")
            raise HeatlabError("analysis_pending", f"no cooling analysis for variant {name!r}")
        vdoc = json.loads(vpath.read_text())
        vprof = CoolingProfile.from_json(vdoc[kind])
        metric = compare_profiles(truth, vprof)
        out["variants"][name] = {"profile": vprof.to_json(), "metrics": metric.to_json()}
    return out


def create_app(workspaces_root) -> FastAPI:
    app = FastAPI(title="heatlab", version=__version__, docs_url=None, redoc_url=None)
    registry = CityRegistry(Path(workspaces_root))
    app.state.registry = registry

    @app.exception_handler(HeatlabError)
    async def _heatlab_error(_req: Request, exc: HeatlabError):
        return _error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        err = HeatlabError("bad_request", "request failed validation", detail=exc.errors())
        return _error_response(err)

    @app.exception_handler(Exception)
    async def _unhandled(_req: Request, exc: Exception):
        err = HeatlabError("internal_error", f"{type(exc).__name__}: {exc}")
        return JSONResponse(status_code=500, content={"error": err.to_json()})

    @app.get("/api/version")
    def version():
        return {
            "name": "heatlab",
            "version": __version__,
            "api_version": API_VERSION,
            "kernel_backend": kernels.BACKEND,
        }

    @app.get("/api/errors")
    def errors():
        return ERROR_CATALOG

    @app.get("/api/schemas")
    def schemas():
        return ALL_SCHEMAS

    @app.get("/api/cities")
    def cities():
        return [_city_summary(registry.get(cid)) for cid in registry.ids()]

    @app.get("/api/cities/{city_id}")
    def city(city_id: str):
        return _city_summary(registry.get(city_id))

    @app.get("/api/cities/{city_id}/scenes")
    def scenes(city_id: str):
        ws = registry.get(city_id)
        passing = {s.scene_id for s in filter_scenes(ws)}
        return [
            {
                "scene_id": s.scene_id,
                "timestamp": s.timestamp,
                "cloud_fraction": s.cloud_fraction,
                "air_temp_c": s.air_temp_c,
                "passes_filter": s.scene_id in passing,
            }
            for s in ws.scenes
        ]

    @app.get("/api/cities/{city_id}/layers/{layer}.png")
    def layer_png(city_id: str, layer: str, scene: str | None = None,
                  variant: str | None = None, palette: str | None = None):
        ws = registry.get(city_id)
        rendered, _meta = _resolve_layer(ws, layer, scene, variant, palette)
        return Response(content=rendered.png, media_type="image/png")

    @app.get("/api/cities/{city_id}/layers/{layer}")
    def layer_stats(city_id: str, layer: str, scene: str | None = None,
                    variant: str | None = None, palette: str | None = None):
        ws = registry.get(city_id)
        rendered, meta = _resolve_layer(ws, layer, scene, variant, palette)
        query = []
        if meta["scene_id"]:
            query.append(f"scene={meta['scene_id']}")
        if meta["variant"]:
            query.append(f"variant={meta['variant']}")
        if palette:
            query.append(f"palette={palette}")
        suffix = ("?" + "&".join(query)) if query else ""
        body = {
            "layer": layer,
            "scene_id": meta["scene_id"],
            "variant": meta["variant"],
            "stats": rendered.stats,
            "palette": rendered.palette,
            "vmin": rendered.vmin,
            "vmax": rendered.vmax,
            "png_url": f"/api/cities/{city_id}/layers/{layer}.png{suffix}",
        }
        if layer in ("lst", "prediction", "anomaly", "ndvi", "built_fraction", "built_density"):
            body["legend"] = legend_for(layer, rendered.palette)
        return body

    @app.get("/api/cities/{city_id}/layers/{layer}/value")
    def layer_value(city_id: str, layer: str, row: int, col: int, scene: str | None = None,
                    variant: str | None = None):
        ws = registry.get(city_id)
        spec = ws.grid_spec
        if not (0 <= row < spec.height and 0 <= col < spec.width):
            raise HeatlabError("bad_request", f"pixel ({row}, {col}) is outside the grid")
        grid = _layer_grid(ws, layer, scene, variant)
        value = float(grid.values[row, col])
        is_data = value != grid.nodata
        return {
            "layer": layer,
            "row": row,
            "col": col,
            "x": spec.x_center(col),
            "y": spec.y_center(row),
            "value": value if is_data else None,
        }

    def _layer_grid(ws: Workspace, layer: str, scene_id: str | None, variant: str | None) -> GeoGrid:
        if layer == "lst":
            return _truth_lst(ws, _pick_scene(ws, scene_id))
        if layer == "ndvi":
            stack = ws.build_stack(_pick_scene(ws, scene_id))
            return ndvi(stack.channel("nir"), stack.channel("red"))
        if layer == "prediction":
            name = _pick_variant(ws, variant)
            return get_predictor(ws, name).predict(ws.build_stack(_pick_scene(ws, scene_id)))
        if layer == "anomaly":
            path = ws.analysis_dir / "anomaly" / f"{variant or 'truth'}.grid"
            if not path.exists():
                raise HeatlabError("analysis_pending", "anomaly grid not computed yet")
            return load_grid(path)
        if layer == "lulc":
            return ws.load_lulc()
        if layer == "built_fraction":
            from .grid import PixelMask

            lulc = ws.load_lulc()
            built = built_mask(lulc, ws.config.built_codes)
            return built_fraction(built, PixelMask(lulc.spec, lulc.data_mask()),
                                  ws.config.built_fraction_radius_px(ws.grid_spec.pixel_size))
        if layer == "built_density":
            path = ws.root / "built_density.grid"
            if not path.exists():
                raise HeatlabError("layer_not_found", "this workspace has no built_density layer")
            return load_grid(path)
        raise HeatlabError("layer_not_found", f"unknown layer {layer!r}")

    @app.get("/api/cities/{city_id}/profiles")
    def profiles(city_id: str, kind: str = "internal", variant: str | None = None):
        ws = registry.get(city_id)
        variants = [v for v in (variant.split(",") if variant else []) if v]
        return _load_profiles(ws, kind, variants)

    @app.get("/api/cities/{city_id}/gradient")
    def gradient(city_id: str, variant: str = "truth"):
        ws = registry.get(city_id)
        path = ws.analysis_dir / "gradient" / f"{variant}.json"
        if not path.exists():
            raise HeatlabError("analysis_pending", f"no gradient analysis for {variant!r}")
        return json.loads(path.read_text())

    @app.get("/api/cities/{city_id}/source-sink")
    def source_sink_table(city_id: str, variant: str = "truth"):
        ws = registry.get(city_id)
        path = ws.analysis_dir / "source_sink" / f"{variant}.json"
        if not path.exists():
            raise HeatlabError("analysis_pending", f"no source/sink analysis for {variant!r}")
        return json.loads(path.read_text())

    @app.get("/api/cities/{city_id}/scenarios")
    def scenarios_endpoint(city_id: str, rcp: str | None = None, year: int | None = None,
                           variant: str | None = None):
        ws = registry.get(city_id)
        if rcp is None and year is None:
            return {"city_id": ws.city_id, "scenarios": [sc.to_json() for sc in load_scenarios(ws)]}
        if rcp is None or year is None:
            raise HeatlabError("bad_request", "give both rcp and year, or neither")
        name = _pick_variant(ws, variant)
        payload = dict(run_forecast(ws, rcp, year, name))
        payload["anomaly_png_url"] = (
            f"/api/cities/{city_id}/scenarios/anomaly.png?rcp={rcp}&year={year}&variant={name}"
        )
        return payload

    @app.get("/api/cities/{city_id}/scenarios/anomaly.png")
    def scenario_anomaly_png(city_id: str, rcp: str, year: int, variant: str | None = None,
                             palette: str | None = None):
        ws = registry.get(city_id)
        name = _pick_variant(ws, variant)
        run_forecast(ws, rcp, year, name)  # ensures the grid is cached
        _json_path, grid_path = scenario_cache_paths(ws, rcp, year, name)
        grid = load_grid(grid_path)
        default_palette, (vmin, vmax) = style_for("anomaly")
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return Response(content=rendered.png, media_type="image/png")

    @app.get("/api/cities/{city_id}/interventions")
    def list_interventions(city_id: str):
        ws = registry.get(city_id)
        out = []
        root = ws.interventions_dir
        if root.is_dir():
            for child in sorted(root.iterdir()):
                doc_path = child / "result.json"
                if doc_path.exists():
                    doc = json.loads(doc_path.read_text())
                    out.append({
                        "request_id": doc["request_id"],
                        "scene_id": doc["scene_id"],
                        "variant": doc["variant"],
                        "replaced_pixels": doc["replaced_pixels"],
                        "area_m2": doc["area_m2"],
                        "mean_delta_in_mask": doc["mean_delta_in_mask"],
                    })
        return out

    @app.post("/api/cities/{city_id}/interventions")
    async def post_intervention(city_id: str, request: Request):
        ws = registry.get(city_id)
        if ws.grid_spec.width * ws.grid_spec.height > MAX_SYNC_PIXELS:
            raise HeatlabError("grid_too_large",
                               f"synchronous interventions are limited to {MAX_SYNC_PIXELS} pixels")
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HeatlabError("bad_request", "request body is not valid JSON")
        if not isinstance(body, dict):
            raise HeatlabError("bad_request", "request body must be a JSON object")
        return run_intervention(ws, body)

    @app.get("/api/cities/{city_id}/interventions/{rid}")
    def get_intervention(city_id: str, rid: str):
        ws = registry.get(city_id)
        doc_path = ws.interventions_dir / rid / "result.json"
        if not doc_path.exists():
            raise HeatlabError("analysis_pending", f"no stored intervention {rid!r}")
        return json.loads(doc_path.read_text())

    @app.get("/api/cities/{city_id}/interventions/{rid}/layers/{which}.png")
    def intervention_layer(city_id: str, rid: str, which: str, palette: str | None = None):
        ws = registry.get(city_id)
        if which not in ("before", "after", "delta"):
            raise HeatlabError("layer_not_found", "intervention layers are before, after, delta")
        path = ws.interventions_dir / rid / f"{which}.grid"
        if not path.exists():
            raise HeatlabError("analysis_pending", f"no stored intervention {rid!r}")
        grid = load_grid(path)
        style = "delta" if which == "delta" else "lst"
        default_palette, (vmin, vmax) = style_for(style)
        rendered = render_continuous(grid, palette or default_palette, vmin, vmax)
        return Response(content=rendered.png, media_type="image/png")

    ui_dir = os.environ.get("HEATLAB_UI_DIR")
    candidates = [ui_dir] if ui_dir else []
    candidates.append(Path.cwd() / "frontend" / "dist")
    for candidate in candidates:
        if candidate and Path(candidate).is_dir():
            app.mount("/ui", StaticFiles(directory=str(candidate), html=True), name="ui")
            break

    return app
