"""Portable grid format: bit-exact round trips and corruption handling."""

import json

import numpy as np
import pytest

from heatlab.errors import DataError
from heatlab.grid import GeoGrid, GridSpec
from heatlab.gridio import load_grid, read_sidecar, save_grid

SPEC = GridSpec(5, 4, 500000.0, 4850000.0, 30.0, 32635)


def _grid():
    rng = np.random.default_rng(0)
    vals = rng.normal(20.0, 5.0, SPEC.shape).astype(np.float32)
    vals[0, 0] = -9999.0
    return GeoGrid(SPEC, vals)


def test_round_trip_bit_exact(tmp_path):
    g = _grid()
    path = tmp_path / "t.grid"
    save_grid(path, g, band="lst", timestamp="2024-07-01T08:30:00Z")
    loaded = load_grid(path)
    assert loaded.spec == g.spec
    assert loaded.nodata == g.nodata
    assert loaded.values.tobytes() == g.values.tobytes()

    meta = read_sidecar(path)
    assert meta["band"] == "lst"
    assert meta["timestamp"] == "2024-07-01T08:30:00Z"
    assert meta["epsg"] == 32635
    assert meta["nodata"] == -9999.0

    raw = path.read_bytes()
    assert len(raw) == SPEC.width * SPEC.height * 4
    assert np.frombuffer(raw, dtype="<f4")[SPEC.width] == g.values[1, 0]  # row-major


def test_save_requires_grid_suffix(tmp_path):
    with pytest.raises(DataError):
        save_grid(tmp_path / "t.bin", _grid())


def test_missing_and_corrupt_files(tmp_path):
    path = tmp_path / "t.grid"
    with pytest.raises(DataError):
        load_grid(path)

    save_grid(path, _grid())
    side = path.with_name(path.name + ".json")

    side_backup = side.read_text()
    side.unlink()
    with pytest.raises(DataError):
        load_grid(path)

    side.write_text("{not json")
    with pytest.raises(DataError):
        load_grid(path)

    meta = json.loads(side_backup)
    del meta["pixel_size"]
    side.write_text(json.dumps(meta))
    with pytest.raises(DataError):
        load_grid(path)

    side.write_text(side_backup)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(DataError):
        load_grid(path)


def test_nodata_value_respected(tmp_path):
    vals = np.full(SPEC.shape, -1.0, dtype=np.float32)
    g = GeoGrid(SPEC, vals, nodata=-1.0)
    path = tmp_path / "n.grid"
    save_grid(path, g)
    loaded = load_grid(path)
    assert loaded.nodata == -1.0
    assert not loaded.data_mask().any()
