"""Portable raster interchange format.

A grid is stored as two files: ``name.grid`` holding the raw little-endian
float32 row-major payload, and ``name.grid.json`` holding geometry and
band metadata. Write-then-read is bit-exact, including nodata placement.

Sidecar keys: width, height, origin_x, origin_y, pixel_size, epsg, nodata,
band, timestamp (ISO-8601 UTC or null).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import GeoGrid, GridSpec

SIDECAR_SUFFIX = ".json"


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + SIDECAR_SUFFIX)


def save_grid(path, grid: GeoGrid, band: str = "", timestamp: str | None = None) -> None:
    """Write ``path`` (raw float32 payload) and ``path.json`` (metadata)."""
    path = Path(path)
    if path.suffix != ".grid":
        raise DataError("bad_grid_file", f"portable grids use the .grid suffix, got {path.name}")
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = np.ascontiguousarray(grid.values, dtype="<f4")
    path.write_bytes(payload.tobytes())
    meta = dict(grid.spec.to_json())
    meta["nodata"] = grid.nodata
    meta["band"] = band
    meta["timestamp"] = timestamp
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_sidecar(path) -> dict:
    path = Path(path)
    side = _sidecar_path(path)
    if not side.exists():
        raise DataError("bad_grid_file", f"missing sidecar {side}")
    try:
        meta = json.loads(side.read_text())
    except json.JSONDecodeError as e:
        raise DataError("bad_grid_file", f"unparseable sidecar {side}: {e}") from e
    for key in ("width", "height", "origin_x", "origin_y", "pixel_size", "epsg", "nodata"):
        if key not in meta:
            raise DataError("bad_grid_file", f"sidecar {side} missing key {key!r}")
    return meta


def load_grid(path) -> GeoGrid:
    """Read a portable grid pair back into a GeoGrid (bit-exact)."""
    path = Path(path)
    if not path.exists():
        raise DataError("bad_grid_file", f"missing grid file {path}")
    meta = read_sidecar(path)
    spec = GridSpec.from_json(meta)
    raw = path.read_bytes()
    expected = spec.width * spec.height * 4
    if len(raw) != expected:
        raise DataError(
            "bad_grid_file",
            f"{path}: payload is {len(raw)} bytes, expected {expected} for {spec.width}x{spec.height}",
        )
    values = np.frombuffer(raw, dtype="<f4").reshape(spec.height, spec.width)
    return GeoGrid(spec, values, nodata=float(meta["nodata"]))
