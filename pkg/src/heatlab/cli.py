"""Command line interface.

Exit codes: 0 success, 2 usage errors (argparse), 3 data/contract errors,
4 internal errors. Every workspace-mutating command drops a run manifest
under runs/; manifests carry timing and are excluded from byte-identity
guarantees.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import EXIT_INTERNAL, DataError, HeatlabError
from .manifest import RunManifest


def resolve_workspace_path(name: str) -> Path:
    """A workspace argument is a directory path, or a city name under
    $HEATLAB_WORKSPACES."""
    p = Path(name)
    if (p / "workspace.json").exists() or p.is_dir():
        return p
    root = os.environ.get("HEATLAB_WORKSPACES")
    if root:
        candidate = Path(root) / name
        if (candidate / "workspace.json").exists():
            return candidate
    return p


def open_workspace(name: str):
    from .workspace import catalog_scenes

    return catalog_scenes(resolve_workspace_path(name))


def emit(payload: dict, out: str | None = None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _manifest(args, ws, slug: str, outputs=None, seed=None) -> None:
    m = RunManifest.start(["heatlab", *sys.argv[1:]] if args.argv is None else ["heatlab", *args.argv],
                          config=ws.config.raw, seed=seed)
    m.add_input(str(ws.root / "workspace.json"))
    for o in outputs or []:
        m.add_output(str(o))
    m.finish(ws.runs_dir, slug)


def cmd_synth(args) -> int:
    from .synthetic import SyntheticSpec, write_synthetic_workspace

    spec = SyntheticSpec(
        city_id=args.city_id,
        size=args.size,
        seed=args.seed,
        n_scenes=args.scenes,
        noise_std=args.noise_std,
        t_base=args.t_base,
        pixel_size=args.pixel_size,
        include_outliers=not args.no_outliers,
    )
    root = Path(args.out)
    write_synthetic_workspace(spec, root)
    ws = open_workspace(str(root))
    _manifest(args, ws, "synth", outputs=[root], seed=args.seed)
    emit({"workspace": str(root), "city_id": spec.city_id,
          "scenes": len(ws.scenes), "grid": ws.grid_spec.to_json()})
    return 0


def cmd_ingest(args) -> int:
    from .geotiff import read_geotiff
    from .grid import GeoGrid
    from .gridio import load_grid, save_grid
    from .workspace import SPECTRAL_BANDS, write_scene, write_workspace_json

    def load_any(path: Path) -> GeoGrid:
        if path.suffix.lower() in (".tif", ".tiff"):
            return read_geotiff(path)
        return load_grid(path)

    bands = {}
    for pair in args.band:
        if "=" not in pair:
            raise DataError("bad_request", f"--band needs name=path, got {pair!r}")
        name, _, path = pair.partition("=")
        if name not in SPECTRAL_BANDS:
            raise DataError("missing_band", f"unknown band {name!r}; expected one of {list(SPECTRAL_BANDS)}")
        bands[name] = load_any(Path(path))
    missing = [b for b in SPECTRAL_BANDS if b not in bands]
    if missing:
        raise DataError("missing_band", f"scene lacks bands: {missing}")

    root = resolve_workspace_path(args.workspace)
    first = bands[SPECTRAL_BANDS[0]]
    for name, g in bands.items():
        if g.spec != first.spec:
            raise DataError("alignment_mismatch", f"band {name} does not align with {SPECTRAL_BANDS[0]}")
    if not (root / "workspace.json").exists():
        if not args.city_id:
            raise DataError("bad_workspace", "new workspace: give --city-id")
        write_workspace_json(root, args.city_id, first.spec, args.utc_offset)
    air_grid = None
    if args.air_grid:
        air_grid = load_any(Path(args.air_grid))
    elif args.air_temp is None:
        raise DataError("bad_request", "give --air-temp or --air-grid")
    write_scene(root, args.scene_id, args.timestamp, bands,
                air_temp_c=args.air_temp, cloud_fraction=args.cloud_fraction, air_grid=air_grid)
    if args.lulc:
        lulc = load_any(Path(args.lulc))
        if lulc.spec != first.spec:
            raise DataError("alignment_mismatch", "LULC grid does not align with the scene bands")
        save_grid(root / "lulc" / "lulc.grid", lulc, band="lulc")
    ws = open_workspace(str(root))
    _manifest(args, ws, f"ingest-{args.scene_id}", outputs=[root / "scenes" / args.scene_id])
    emit({"workspace": str(root), "scene_id": args.scene_id, "issues": ws.issues})
    return 0


def cmd_analyze(args) -> int:
    from .analysis import run_cooling, run_gradient, run_source_sink

    ws = open_workspace(args.workspace)
    variant = args.variant
    if args.kind == "cooling":
        result = run_cooling(ws, variant=variant, jobs=args.jobs)
        slug = "analyze-cooling"
    elif args.kind == "gradient":
        result = run_gradient(ws, variant=variant, axis=args.axis, jobs=args.jobs)
        slug = "analyze-gradient"
    else:
        result = run_source_sink(ws, variant=variant, jobs=args.jobs)
        slug = "analyze-source-sink"
    _manifest(args, ws, slug, outputs=[ws.analysis_dir])
    emit(result, args.out)
    return 0


def cmd_split(args) -> int:
    from .analysis import make_split

    ws = open_workspace(args.workspace)
    payload = make_split(ws, args.strategy.replace("-", "_"), seed=args.seed, q=args.q, jobs=args.jobs)
    _manifest(args, ws, f"split-{payload['strategy']}", outputs=[ws.analysis_dir / "splits"], seed=args.seed)
    emit(payload, args.out)
    return 0


def cmd_fit_baseline(args) -> int:
    from .analysis import fit_baseline_model, load_split

    ws = open_workspace(args.workspace)
    split_doc = load_split(ws, args.split.replace("-", "_")) if args.split else None
    model = fit_baseline_model(ws, split_doc, jobs=args.jobs)
    _manifest(args, ws, "fit-baseline", outputs=[ws.models_dir / "baseline.json"])
    emit({"model": model.to_json(), "path": str(ws.models_dir / "baseline.json")})
    return 0


def cmd_predict(args) -> int:
    from .analysis import run_predict

    ws = open_workspace(args.workspace)
    written = run_predict(ws, args.variant, out_variant=args.out_variant, jobs=args.jobs)
    _manifest(args, ws, f"predict-{args.out_variant or args.variant}", outputs=written)
    emit({"variant": args.out_variant or args.variant, "written": written})
    return 0


def cmd_eval(args) -> int:
    ws = None
    if args.truth or args.pred:
        if not (args.truth and args.pred):
            raise DataError("bad_request", "directory mode needs both --truth and --pred")
        from .analysis import eval_directories

        result = eval_directories(args.truth, args.pred)
    else:
        from .analysis import run_eval

        if not args.variant:
            raise DataError("bad_request", "give --variant, or --truth and --pred directories")
        if not args.workspace:
            raise DataError("bad_request", "variant mode needs --workspace")
        ws = open_workspace(args.workspace)
        result = run_eval(ws, args.variant, strategy=args.split.replace("-", "_") if args.split else None,
                          jobs=args.jobs)
    if ws is not None:
        _manifest(args, ws, f"eval-{args.variant}", outputs=[ws.analysis_dir / "eval"])
    emit(result, args.out)
    return 0


def cmd_forecast(args) -> int:
    from .analysis import run_forecast

    ws = open_workspace(args.workspace)
    payload = run_forecast(ws, args.rcp, args.year, args.variant, use_cache=not args.no_cache)
    _manifest(args, ws, f"forecast-{args.rcp}-{args.year}-{args.variant}",
              outputs=[ws.analysis_dir / "scenarios"])
    emit(payload, args.out)
    return 0


def cmd_inpaint(args) -> int:
    from .analysis import run_intervention

    ws = open_workspace(args.workspace)
    body = json.loads(Path(args.spec).read_text())
    if args.variant:
        body["variant"] = args.variant
    if args.scene:
        body["scene_id"] = args.scene
    payload = run_intervention(ws, body, use_cache=not args.no_cache)
    _manifest(args, ws, f"inpaint-{payload['request_id']}",
              outputs=[ws.interventions_dir / payload["request_id"]])
    emit(payload, args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    root = args.workspaces or os.environ.get("HEATLAB_WORKSPACES")
    if not root:
        raise DataError("bad_workspace", "give --workspaces or set HEATLAB_WORKSPACES")
    app = create_app(Path(root))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatlab", description="Urban heat island analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, workspace=True):
        if workspace:
            p.add_argument("--workspace", "-w", required=True, help="workspace directory or city name")
        p.add_argument("--jobs", "-j", type=int, default=1, help="worker threads (results are identical for any N)")
        p.add_argument("--out", "-o", default=None, help="write the JSON result here instead of stdout")

    p = sub.add_parser("synth", help="generate a synthetic city workspace")
    p.add_argument("--out", required=True, help="workspace directory to create")
    p.add_argument("--city-id", default="synthville")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--scenes", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", type=float, default=0.5)
    p.add_argument("--t-base", type=float, default=18.0)
    p.add_argument("--pixel-size", type=float, default=30.0)
    p.add_argument("--no-outliers", action="store_true", help="skip the winter and cloudy scenes")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="add a scene (GeoTIFF or portable grids) to a workspace")
    p.add_argument("--workspace", "-w", required=True)
    p.add_argument("--scene-id", required=True)
    p.add_argument("--timestamp", required=True, help="ISO-8601 acquisition time, e.g. 2024-07-01T08:30:00Z")
    p.add_argument("--band", action="append", default=[], metavar="NAME=PATH",
                   help="band file; repeat for all 8 bands")
    p.add_argument("--cloud-fraction", type=float, default=0.0)
    p.add_argument("--air-temp", type=float, default=None, help="scalar air temperature, degrees C")
    p.add_argument("--air-grid", default=None, help="gridded air temperature file")
    p.add_argument("--lulc", default=None, help="land cover grid (written once per workspace)")
    p.add_argument("--city-id", default=None, help="required when creating a new workspace")
    p.add_argument("--utc-offset", type=float, default=0.0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="run an analysis over the filtered scenes")
    p.add_argument("kind", choices=["cooling", "gradient", "source-sink"])
    add_common(p)
    p.add_argument("--variant", default=None, help="predictor variant (default: truth)")
    p.add_argument("--axis", default="built_fraction_decile",
                   choices=["built_fraction_decile", "radial_distance"])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("split", help="build a train/val/test split over scenes")
    add_common(p)
    p.add_argument("--strategy", required=True, choices=["random", "high-heat", "high_heat"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=float, default=None, help="hot-tail quantile for high-heat splits")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("fit-baseline", help="fit the linear LST model")
    add_common(p)
    p.add_argument("--split", default=None, choices=["random", "high-heat", "high_heat"],
                   help="fit on the train+val pool of this stored split")
    p.set_defaults(func=cmd_fit_baseline)

    p = sub.add_parser("predict", help="write per-scene prediction grids for a variant")
    add_common(p)
    p.add_argument("--variant", required=True)
    p.add_argument("--out-variant", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against derived truth")
    p.add_argument("--workspace", "-w", default=None,
                   help="workspace directory or city name (not needed with --truth/--pred)")
    add_common(p, workspace=False)
    p.add_argument("--variant", default=None)
    p.add_argument("--split", default=None, choices=["high-heat", "high_heat"],
                   help="also produce the extrapolation report for this stored split")
    p.add_argument("--truth", default=None, help="directory mode: truth grids")
    p.add_argument("--pred", default=None, help="directory mode: prediction grids")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("forecast", help="apply a climate scenario and report heat-island extent")
    add_common(p)
    p.add_argument("--rcp", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--variant", required=True)
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("inpaint", help="evaluate a greening intervention from a JSON spec")
    add_common(p)
    p.add_argument("--spec", required=True, help="path to an intervention request JSON")
    p.add_argument("--variant", default=None)
    p.add_argument("--scene", default=None)
    p.add_argument("--no-cache", action="store_true")
    p.set_defaults(func=cmd_inpaint)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--workspaces", default=None, help="directory of workspaces (or $HEATLAB_WORKSPACES)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except DataError as e:
        sys.stderr.write(json.dumps({"error": e.to_json()}, sort_keys=True) + "\n")
        return e.exit_code
    except HeatlabError as e:
        sys.stderr.write(json.dumps({"error": e.to_json()}, sort_keys=True) + "\n")
        return e.exit_code
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, not raises
        sys.stderr.write(json.dumps({
            "error": {"code": "internal_error", "message": f"{type(e).__name__}: {e}", "detail": None}
        }, sort_keys=True) + "\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
