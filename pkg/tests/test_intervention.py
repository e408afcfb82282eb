"""Greening interventions: request parsing, polygon validation, donor
statistics, inpainting invariants, transects, and the full evaluation."""

import numpy as np
import pytest

from heatlab.errors import DataError
from heatlab.grid import GeoGrid, GridSpec, PixelMask
from heatlab.intervention import (
    REFLECTANCE_BANDS,
    InterventionSpec,
    donor_signature,
    evaluate_intervention,
    inpaint,
    principal_axis,
    rasterize_spec,
    transect,
    validate_polygon,
)
from heatlab.predictors import oracle_predictor
from heatlab.workspace import SPECTRAL_BANDS, SceneStack

# 16x16 block of pixels (rows and cols 56..71) inside the 128 px world core
BLOCK_POLYGON = (
    (501680.0, 4848320.0),
    (502160.0, 4848320.0),
    (502160.0, 4847840.0),
    (501680.0, 4847840.0),
)


def test_spec_from_json_defaults_and_errors():
    spec = InterventionSpec.from_json({"polygon": [[0, 0], [10, 0], [10, 10]]})
    assert spec.target_category == "trees"
    assert spec.seed == 0
    assert spec.statistic is None and spec.variant is None and spec.scene_id is None
    assert InterventionSpec.from_json(spec.to_json()) == spec

    with pytest.raises(DataError) as err:
        InterventionSpec.from_json({})
    assert err.value.code == "invalid_polygon"
    with pytest.raises(DataError):
        InterventionSpec.from_json({"polygon": [[0], [1], [2]]})
    with pytest.raises(DataError):
        InterventionSpec.from_json({"polygon": "ring"})


def test_request_id_tracks_every_field():
    base = InterventionSpec.from_json({"polygon": [[0, 0], [10, 0], [10, 10]]})
    rid = base.request_id()
    assert len(rid) == 16 and int(rid, 16) >= 0
    assert base.request_id() == rid  # stable
    variants = [
        {"polygon": [[0, 0], [10, 0], [10, 11]]},
        {"polygon": [[0, 0], [10, 0], [10, 10]], "seed": 1},
        {"polygon": [[0, 0], [10, 0], [10, 10]], "scene_id": "sc00"},
        {"polygon": [[0, 0], [10, 0], [10, 10]], "variant": "oracle"},
        {"polygon": [[0, 0], [10, 0], [10, 10]], "statistic": "mean"},
        {"polygon": [[0, 0], [10, 0], [10, 10]], "jitter_fraction": 0.0},
        {"polygon": [[0, 0], [10, 0], [10, 10]], "target_category": "crops"},
    ]
    ids = {InterventionSpec.from_json(d).request_id() for d in variants}
    assert rid not in ids
    assert len(ids) == len(variants)


def test_validate_polygon_cases():
    validate_polygon([(0, 0), (10, 0), (10, 10)])
    validate_polygon([(0, 0), (10, 0), (10, 10), (0, 10)])
    # concave is fine
    validate_polygon([(0, 0), (10, 0), (10, 10), (5, 5), (0, 10)])

    with pytest.raises(DataError):
        validate_polygon([(0, 0), (10, 0)])
    with pytest.raises(DataError):
        validate_polygon([(0, 0), (10, 0), (float("nan"), 10)])
    with pytest.raises(DataError):
        validate_polygon([(0, 0), (5, 0), (10, 0)])  # collinear, zero area
    with pytest.raises(DataError) as err:
        validate_polygon([(0, 0), (10, 10), (10, 0), (0, 10)])  # bowtie
    assert err.value.code == "invalid_polygon"


def test_rasterize_spec_counts_block():
    spec = GridSpec(128, 128, 500000.0, 4850000.0, 30.0, 32635)
    mask = rasterize_spec(BLOCK_POLYGON, spec)
    assert mask.count() == 256
    rows, cols = np.nonzero(mask.values)
    assert rows.min() == 56 and rows.max() == 71
    assert cols.min() == 56 and cols.max() == 71


def _donor_world():
    spec = GridSpec(10, 10, 0.0, 0.0, 30.0, 32635)
    lulc = np.full((10, 10), 7.0, dtype=np.float32)
    lulc[:, :3] = 2.0  # 30 tree pixels on the left
    channels = {}
    rng = np.random.default_rng(0)
    for band in SPECTRAL_BANDS:
        vals = rng.uniform(0.2, 0.4, size=(10, 10)).astype(np.float32)
        channels[band] = GeoGrid(spec, vals)
    channels["airtemp"] = GeoGrid.full(spec, 20.0)
    stack = SceneStack(scene_id="d0", timestamp="2024-07-01T08:30:00Z", channels=channels)
    return spec, GeoGrid(spec, lulc), stack


def test_donor_signature_statistics():
    spec, lulc, stack = _donor_world()
    exclude = np.zeros((10, 10), dtype=bool)
    donor = donor_signature(stack, lulc, 2, exclude, min_pixels=10, statistic="median")
    assert set(donor) == set(REFLECTANCE_BANDS)
    pool = stack.channel("red").values[:, :3].astype(np.float64).ravel()
    assert donor["red"]["center"] == pytest.approx(np.median(pool))
    assert donor["red"]["std"] == pytest.approx(pool.std())
    assert donor["red"]["count"] == 30

    donor = donor_signature(stack, lulc, 2, exclude, min_pixels=10, statistic="mean")
    assert donor["red"]["center"] == pytest.approx(pool.mean())

    # excluding a column shrinks the pool
    exclude[:, 0] = True
    donor = donor_signature(stack, lulc, 2, exclude, min_pixels=10, statistic="median")
    assert donor["red"]["count"] == 20

    with pytest.raises(DataError) as err:
        donor_signature(stack, lulc, 2, exclude, min_pixels=100, statistic="median")
    assert err.value.code == "insufficient_donor"
    with pytest.raises(DataError):
        donor_signature(stack, lulc, 2, exclude, min_pixels=1, statistic="mode")


def _mini_config():
    from heatlab.workspace import WorkspaceConfig, _merge_config

    return WorkspaceConfig(_merge_config({"donor_min_pixels": 10}))


def test_inpaint_replaces_only_polygon_buildings():
    spec, lulc, stack = _donor_world()
    # polygon covering pixels rows 2..5, cols 4..7 (built territory)
    poly = ((120.0, -60.0), (240.0, -60.0), (240.0, -180.0), (120.0, -180.0))
    ispec = InterventionSpec(polygon=poly, jitter_fraction=0.0)
    outcome = inpaint(stack, lulc, ispec, _mini_config())
    replaced = outcome.replaced.values
    assert replaced.sum() == 16
    assert outcome.polygon_mask.count() == 16
    for band in REFLECTANCE_BANDS:
        before = stack.channel(band).values
        after = outcome.stack.channel(band).values
        changed = before != after
        assert not (changed & ~replaced).any()
        # jitter 0 pins every replaced pixel at the donor center
        center = np.float32(np.clip(outcome.donor[band]["center"], 0.0, 1.0))
        assert (after[replaced] == center).all()
    # thermal and air channels are the very same objects
    assert outcome.stack.channel("tirs1") is stack.channel("tirs1")
    assert outcome.stack.channel("airtemp") is stack.channel("airtemp")
    # land cover recodes the replaced pixels to the target category
    assert (outcome.lulc.values[replaced] == 2.0).all()
    assert (outcome.lulc.values[~replaced] == lulc.values[~replaced]).all()


def test_inpaint_is_idempotent_at_zero_jitter():
    spec, lulc, stack = _donor_world()
    poly = ((120.0, -60.0), (240.0, -60.0), (240.0, -180.0), (120.0, -180.0))
    ispec = InterventionSpec(polygon=poly, jitter_fraction=0.0)
    first = inpaint(stack, lulc, ispec, _mini_config())
    second = inpaint(first.stack, first.lulc, ispec, _mini_config())
    for band in REFLECTANCE_BANDS:
        assert (
            second.stack.channel(band).values.tobytes() == first.stack.channel(band).values.tobytes()
        )
    assert second.lulc.values.tobytes() == first.lulc.values.tobytes()
    assert second.replaced.values.tolist() == first.replaced.values.tolist()


def test_inpaint_jitter_is_seeded_and_clipped():
    spec, lulc, stack = _donor_world()
    poly = ((120.0, -60.0), (240.0, -60.0), (240.0, -180.0), (120.0, -180.0))
    a = inpaint(stack, lulc, InterventionSpec(polygon=poly, jitter_fraction=1.0, seed=5), _mini_config())
    b = inpaint(stack, lulc, InterventionSpec(polygon=poly, jitter_fraction=1.0, seed=5), _mini_config())
    c = inpaint(stack, lulc, InterventionSpec(polygon=poly, jitter_fraction=1.0, seed=6), _mini_config())
    for band in REFLECTANCE_BANDS:
        assert a.stack.channel(band).values.tobytes() == b.stack.channel(band).values.tobytes()
        va = a.stack.channel(band).values
        assert va.min() >= 0.0 and va.max() <= 1.0
    assert any(
        a.stack.channel(band).values.tobytes() != c.stack.channel(band).values.tobytes()
        for band in REFLECTANCE_BANDS
    )


def test_inpaint_never_fabricates_nodata():
    spec, lulc, stack = _donor_world()
    holed = stack.channel("red").values.copy()
    holed[3, 5] = -9999.0  # inside the polygon
    stack = stack.with_channel("red", stack.channel("red").with_values(holed), "hole")
    poly = ((120.0, -60.0), (240.0, -60.0), (240.0, -180.0), (120.0, -180.0))
    outcome = inpaint(stack, lulc, InterventionSpec(polygon=poly, jitter_fraction=0.0), _mini_config())
    assert outcome.stack.channel("red").values[3, 5] == np.float32(-9999.0)
    assert outcome.replaced.values[3, 5]  # replaced set is mask-level, data per band


def test_inpaint_requires_replaceable_pixels():
    spec, lulc, stack = _donor_world()
    vals = lulc.values.copy()
    vals[2:6, 4:8] = 1.0  # water under the polygon
    watered = GeoGrid(spec, vals)
    poly = ((120.0, -60.0), (240.0, -60.0), (240.0, -180.0), (120.0, -180.0))
    with pytest.raises(DataError) as err:
        inpaint(stack, watered, InterventionSpec(polygon=poly), _mini_config())
    assert err.value.code == "mask_not_built"


def test_principal_axis_orientation():
    spec = GridSpec(12, 12, 0.0, 0.0, 30.0, 32635)
    horiz = np.zeros((12, 12), dtype=bool)
    horiz[6, 2:10] = True
    (cx, cy), (vx, vy) = principal_axis(PixelMask(spec, horiz))
    assert (vx, vy) == pytest.approx((1.0, 0.0))
    assert cx == pytest.approx(spec.x_center(5.5))

    vert = np.zeros((12, 12), dtype=bool)
    vert[2:10, 6] = True
    _, (vx, vy) = principal_axis(PixelMask(spec, vert))
    assert abs(vy) == pytest.approx(1.0)
    assert vy > 0  # sign disambiguation picks the positive representative

    single = np.zeros((12, 12), dtype=bool)
    single[4, 4] = True
    _, axis = principal_axis(PixelMask(spec, single))
    assert axis == (1.0, 0.0)

    with pytest.raises(DataError):
        principal_axis(PixelMask(spec, np.zeros((12, 12), dtype=bool)))


def test_transect_rows():
    spec = GridSpec(20, 5, 0.0, 0.0, 30.0, 32635)
    mask = np.zeros((5, 20), dtype=bool)
    mask[2, 8:12] = True
    before = GeoGrid(spec, np.full((5, 20), 25.0, dtype=np.float32))
    after_vals = np.full((5, 20), 25.0, dtype=np.float32)
    after_vals[2, 8:12] = 22.0
    after_vals[2, 4] = -9999.0  # first sampled pixel on the axis
    after = GeoGrid(spec, after_vals)

    rows = transect(PixelMask(spec, mask), before, after, reach_m=120.0, step_m=30.0)
    assert rows  # some samples land on the grid
    dists = [r["distance_m"] for r in rows]
    assert dists == sorted(dists)
    assert all(r["distance_m"] % 30.0 == 0.0 for r in rows)
    in_mask = [r for r in rows if r["in_mask"]]
    assert len(in_mask) == 4
    for r in in_mask:
        assert r["before_c"] == 25.0 and r["after_c"] == 22.0 and r["delta_c"] == -3.0
    holed = [r for r in rows if r["col"] == 4]
    assert holed and holed[0]["after_c"] is None and holed[0]["delta_c"] is None
    assert holed[0]["before_c"] == 25.0
    for r in rows:
        assert (0 <= r["row"] < 5) and (0 <= r["col"] < 20)


def test_evaluate_intervention_full_run(small_ws_ro):
    ws = small_ws_ro
    predictor = oracle_predictor(ws)
    spec = InterventionSpec(polygon=BLOCK_POLYGON, jitter_fraction=0.0, scene_id="sc00", variant="oracle")
    result = evaluate_intervention(ws, ws.scene("sc00"), predictor, spec)

    assert result.request_id == spec.request_id()
    assert result.scene_id == "sc00" and result.variant == "oracle"
    assert result.replaced_pixels == 256  # the block sits on solid built core
    assert result.mask_pixels == 256
    assert result.area_m2 == pytest.approx(256 * 900.0)
    # planting a park cools the block (the 240 m block never reaches full
    # saturation depth, so the mean sits well short of the planted maximum)
    assert result.mean_delta_in_mask < -0.5
    assert set(result.donor) == set(REFLECTANCE_BANDS)

    in_rows = [r for r in result.transect if r["in_mask"]]
    assert in_rows
    assert all(r["delta_c"] < 0 for r in in_rows)

    internal = result.internal_profile
    assert internal.side == "internal"
    assert internal.count.sum() > 0
    spill = result.spillover_profile
    assert spill.side == "spillover"
    assert spill.count.sum() > 0
    # the delta grid agrees with before/after where both are valid
    ok = result.before.data_mask() & result.after.data_mask()
    want = result.after.values[ok].astype(np.float64) - result.before.values[ok].astype(np.float64)
    assert np.allclose(result.delta.values[ok], want, atol=1e-5)

    d = result.to_json()
    assert d["request_id"] == result.request_id
    assert "before" not in d  # grids are not part of the JSON payload
