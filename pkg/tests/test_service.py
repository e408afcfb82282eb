"""HTTP surface: endpoint matrix, payload schemas, error envelope, PNGs."""

import json

import jsonschema
import pytest
from fastapi.testclient import TestClient

from heatlab import kernels
from heatlab.analysis import (
    derive_truth_lst,
    fit_baseline_model,
    make_split,
    run_cooling,
    run_eval,
    run_gradient,
    run_source_sink,
)
from heatlab.errors import ERROR_CATALOG
from heatlab.schemas import ALL_SCHEMAS
from heatlab.service import AVAILABLE_LAYERS, create_app
from heatlab.workspace import catalog_scenes, filter_scenes

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# same 16x16 built block used by the intervention tests: rows/cols 56..71
BLOCK_POLYGON = [
    [501680.0, 4848320.0],
    [502160.0, 4848320.0],
    [502160.0, 4847840.0],
    [501680.0, 4847840.0],
]


def _check(name: str, instance) -> None:
    jsonschema.validate(instance=instance, schema=ALL_SCHEMAS[name])


def expect_error(resp, status: int, code: str) -> dict:
    assert resp.status_code == status
    body = resp.json()
    _check("error", body)
    assert body["error"]["code"] == code
    return body


@pytest.fixture(scope="module")
def svc_world(small_world_dir, tmp_path_factory):
    """Mutable module copy with analysis artifacts precomputed."""
    import shutil

    root = tmp_path_factory.mktemp("svc")
    shutil.copytree(small_world_dir, root / "synthville")
    ws = catalog_scenes(root / "synthville")
    run_cooling(ws, variant=None)
    run_cooling(ws, variant="oracle")
    run_gradient(ws, variant=None)
    run_source_sink(ws, variant=None)
    split = make_split(ws, "high_heat")
    fit_baseline_model(ws, split)
    run_eval(ws, "oracle", strategy="high_heat")
    return root


@pytest.fixture(scope="module")
def client(svc_world):
    return TestClient(create_app(svc_world))


@pytest.fixture(scope="module")
def bare_world(small_world_dir, tmp_path_factory):
    """Pristine module copy: no analyses have run yet."""
    import shutil

    root = tmp_path_factory.mktemp("svc_bare")
    shutil.copytree(small_world_dir, root / "synthville")
    return root


@pytest.fixture(scope="module")
def bare_client(bare_world):
    return TestClient(create_app(bare_world))


def test_version_endpoint(client):
    body = client.get("/api/version").json()
    _check("version", body)
    assert body["name"] == "heatlab"
    assert body["api_version"] == 1
    assert body["kernel_backend"] == kernels.BACKEND


def test_errors_and_schemas_endpoints(client):
    assert client.get("/api/errors").json() == ERROR_CATALOG
    assert client.get("/api/schemas").json() == ALL_SCHEMAS


def test_cities_listing(client):
    body = client.get("/api/cities").json()
    _check("cities", body)
    assert [c["city_id"] for c in body] == ["synthville"]
    city = body[0]
    assert city["n_scenes"] == 14
    assert len(city["filtered_scene_ids"]) == 12
    # synthetic worlds ship built_density.grid, so every layer is live
    assert set(city["layers"]) == set(AVAILABLE_LAYERS)
    assert "oracle" in city["variants"] and "baseline" in city["variants"]
    assert len(city["scenarios"]) == 9
    assert city["issues"] == []

    single = client.get("/api/cities/synthville").json()
    _check("city", single)
    assert single == city


def test_unknown_city_404(client):
    expect_error(client.get("/api/cities/atlantis"), 404, "city_not_found")


def test_scene_listing_flags(client):
    rows = client.get("/api/cities/synthville/scenes").json()
    assert len(rows) == 14
    by_id = {r["scene_id"]: r for r in rows}
    assert not by_id["sc_winter"]["passes_filter"]
    assert not by_id["sc_cloudy"]["passes_filter"]
    assert sum(r["passes_filter"] for r in rows) == 12
    for r in rows:
        assert set(r) == {"scene_id", "timestamp", "cloud_fraction", "air_temp_c", "passes_filter"}


@pytest.mark.parametrize("layer", ["lst", "ndvi", "rgb", "lulc", "built_fraction",
                                   "built_density", "prediction"])
def test_layer_png_endpoints(client, layer):
    resp = client.get(f"/api/cities/synthville/layers/{layer}.png")
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "image/png"
    assert resp.content.startswith(PNG_MAGIC)
    again = client.get(f"/api/cities/synthville/layers/{layer}.png")
    assert again.content == resp.content  # rendering is deterministic


def test_layer_png_errors(client):
    expect_error(client.get("/api/cities/synthville/layers/nope.png"), 404, "layer_not_found")
    expect_error(client.get("/api/cities/synthville/layers/lst.png?scene=zz99"), 404, "scene_not_found")
    expect_error(client.get("/api/cities/synthville/layers/prediction.png?variant=nope"),
                 404, "variant_not_found")
    expect_error(client.get("/api/cities/synthville/layers/lst.png?palette=nope"), 400, "bad_request")


def test_layer_png_accepts_unfiltered_scene(client):
    resp = client.get("/api/cities/synthville/layers/lst.png?scene=sc_winter")
    assert resp.status_code == 200
    assert resp.content.startswith(PNG_MAGIC)


def test_layer_stats_document(client):
    body = client.get("/api/cities/synthville/layers/lst").json()
    _check("layer_stats", body)
    assert body["layer"] == "lst"
    assert body["scene_id"] == "sc00"  # first scene that passes the filters
    assert body["stats"]["n"] > 0
    assert body["stats"]["min"] <= body["stats"]["mean"] <= body["stats"]["max"]
    assert body["png_url"] == "/api/cities/synthville/layers/lst.png?scene=sc00"
    assert body["legend"]["layer"] == "lst"

    png = client.get(body["png_url"])
    assert png.status_code == 200 and png.content.startswith(PNG_MAGIC)

    lulc = client.get("/api/cities/synthville/layers/lulc").json()
    _check("layer_stats", lulc)
    assert "legend" not in lulc


def test_layer_value_endpoint(client, svc_world):
    ws = catalog_scenes(svc_world / "synthville")
    scene = filter_scenes(ws)[0]
    truth = derive_truth_lst(ws, ws.build_stack(scene))

    body = client.get("/api/cities/synthville/layers/lst/value?row=64&col=64").json()
    assert body["row"] == 64 and body["col"] == 64
    assert body["x"] == ws.grid_spec.x_center(64)
    assert body["y"] == ws.grid_spec.y_center(64)
    assert body["value"] == pytest.approx(float(truth.values[64, 64]))

    expect_error(client.get("/api/cities/synthville/layers/lst/value?row=999&col=0"),
                 400, "bad_request")
    # type coercion failures come back through the same envelope
    expect_error(client.get("/api/cities/synthville/layers/lst/value?row=abc&col=0"),
                 400, "bad_request")


def test_profiles_endpoint(client):
    body = client.get("/api/cities/synthville/profiles").json()
    _check("profiles_response", body)
    assert body["kind"] == "internal"
    assert body["truth"]["side"] == "internal"
    assert body["variants"] == {}

    body = client.get("/api/cities/synthville/profiles?kind=spillover&variant=oracle").json()
    _check("profiles_response", body)
    assert body["kind"] == "spillover"
    entry = body["variants"]["oracle"]
    assert set(entry["metrics"]) >= {"mae", "mse", "rmse", "mbe", "n"}
    assert len(entry["profile"]["mean_dt"]) == len(body["truth"]["mean_dt"])

    expect_error(client.get("/api/cities/synthville/profiles?kind=sideways"), 400, "bad_request")
    expect_error(client.get("/api/cities/synthville/profiles?variant=nope"), 404, "variant_not_found")
    # baseline is a known variant but its cooling analysis has not run
    expect_error(client.get("/api/cities/synthville/profiles?variant=baseline"),
                 409, "analysis_pending")


def test_gradient_and_source_sink_endpoints(client, svc_world):
    analysis = svc_world / "synthville" / "analysis"
    body = client.get("/api/cities/synthville/gradient").json()
    assert body == json.loads((analysis / "gradient" / "truth.json").read_text())

    body = client.get("/api/cities/synthville/source-sink").json()
    assert body == json.loads((analysis / "source_sink" / "truth.json").read_text())

    expect_error(client.get("/api/cities/synthville/gradient?variant=oracle"),
                 409, "analysis_pending")
    expect_error(client.get("/api/cities/synthville/source-sink?variant=oracle"),
                 409, "analysis_pending")


def test_anomaly_layer_after_gradient(client):
    resp = client.get("/api/cities/synthville/layers/anomaly.png")
    assert resp.status_code == 200 and resp.content.startswith(PNG_MAGIC)
    body = client.get("/api/cities/synthville/layers/anomaly").json()
    _check("layer_stats", body)
    assert body["variant"] == "truth"


def test_scenario_listing_and_report(client):
    body = client.get("/api/cities/synthville/scenarios").json()
    assert body["city_id"] == "synthville"
    assert len(body["scenarios"]) == 9

    expect_error(client.get("/api/cities/synthville/scenarios?rcp=4.5"), 400, "bad_request")
    expect_error(client.get("/api/cities/synthville/scenarios?rcp=9.9&year=2050&variant=oracle"),
                 404, "scenario_not_found")

    report = client.get("/api/cities/synthville/scenarios?rcp=4.5&year=2050&variant=oracle").json()
    _check("scenario_report", report)
    assert report["variant"] == "oracle"
    assert report["scenario"]["rcp"] == "4.5"
    assert report["report"]["mean_urban_anomaly"] == pytest.approx(1.2, abs=1e-3)
    assert report["anomaly_png_url"].endswith("/scenarios/anomaly.png?rcp=4.5&year=2050&variant=oracle")

    png = client.get(report["anomaly_png_url"])
    assert png.status_code == 200 and png.content.startswith(PNG_MAGIC)


def test_intervention_round_trip(client):
    posted = client.post("/api/cities/synthville/interventions",
                         json={"polygon": BLOCK_POLYGON, "variant": "oracle"})
    assert posted.status_code == 200
    body = posted.json()
    _check("intervention_result", body)
    rid = body["request_id"]
    assert len(rid) == 16
    assert body["replaced_pixels"] == 256
    assert body["mean_delta_in_mask"] < 0.0

    fetched = client.get(f"/api/cities/synthville/interventions/{rid}").json()
    assert fetched == body

    repeat = client.post("/api/cities/synthville/interventions",
                         json={"polygon": BLOCK_POLYGON, "variant": "oracle"})
    assert repeat.json() == body  # cached by request_id

    listing = client.get("/api/cities/synthville/interventions").json()
    match = [row for row in listing if row["request_id"] == rid]
    assert len(match) == 1
    assert match[0]["replaced_pixels"] == 256

    for which, url in body["layers"].items():
        assert url.endswith(f"/interventions/{rid}/layers/{which}.png")
        resp = client.get(url)
        assert resp.status_code == 200 and resp.content.startswith(PNG_MAGIC)

    expect_error(client.get(f"/api/cities/synthville/interventions/{rid}/layers/nope.png"),
                 404, "layer_not_found")


def test_intervention_request_errors(client, monkeypatch):
    bad = client.post("/api/cities/synthville/interventions",
                      json={"polygon": [[0.0, 0.0], [1.0, 1.0]]})
    expect_error(bad, 400, "invalid_polygon")

    not_obj = client.post("/api/cities/synthville/interventions", json=[1, 2, 3])
    expect_error(not_obj, 400, "bad_request")

    garbled = client.post("/api/cities/synthville/interventions",
                          content=b"{nope", headers={"content-type": "application/json"})
    expect_error(garbled, 400, "bad_request")

    monkeypatch.setattr("heatlab.service.MAX_SYNC_PIXELS", 100)
    too_big = client.post("/api/cities/synthville/interventions",
                          json={"polygon": BLOCK_POLYGON})
    expect_error(too_big, 413, "grid_too_large")


def test_unanalyzed_workspace_reports_pending(bare_client):
    expect_error(bare_client.get("/api/cities/synthville/profiles"), 409, "analysis_pending")
    expect_error(bare_client.get("/api/cities/synthville/gradient"), 409, "analysis_pending")
    expect_error(bare_client.get("/api/cities/synthville/source-sink"), 409, "analysis_pending")
    expect_error(bare_client.get("/api/cities/synthville/layers/anomaly.png"), 409, "analysis_pending")
    expect_error(bare_client.get("/api/cities/synthville/interventions/deadbeefdeadbeef"),
                 409, "analysis_pending")
    assert bare_client.get("/api/cities/synthville/interventions").json() == []

    city = bare_client.get("/api/cities/synthville").json()
    assert city["variants"] == ["oracle"]


def test_internal_errors_use_envelope(bare_world, monkeypatch):
    def boom(ws):
        raise RuntimeError("wires crossed")

    monkeypatch.setattr("heatlab.service.load_scenarios", boom)
    client = TestClient(create_app(bare_world), raise_server_exceptions=False)
    resp = client.get("/api/cities/synthville")
    body = expect_error(resp, 500, "internal_error")
    assert "wires crossed" in body["error"]["message"]


def test_ui_mount_from_env_dir(bare_world, tmp_path, monkeypatch):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>heatlab ui</body></html>")
    monkeypatch.setenv("HEATLAB_UI_DIR", str(ui))
    client = TestClient(create_app(bare_world))
    resp = client.get("/ui/")
    assert resp.status_code == 200
    assert "heatlab ui" in resp.text
