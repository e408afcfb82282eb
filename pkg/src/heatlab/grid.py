"""Georeferenced grid primitives.

Conventions used throughout the toolkit:

- Pixels are square, `pixel_size` meters on a side, in a projected CRS
  identified by an EPSG code (recorded, never validated).
- `(origin_x, origin_y)` is the world coordinate of the top-left corner of
  pixel (row 0, col 0); x grows with columns, y shrinks with rows (north-up).
- Values are float32, row-major, shape (height, width). A cell is either
  finite or exactly the nodata sentinel; NaN never appears in a stored grid.
- Grids are immutable after construction. All cross-grid operations require
  exact geometry equality ("alignment").
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError

DEFAULT_NODATA = -9999.0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a grid: dimensions, placement, resolution, CRS."""

    width: int
    height: int
    origin_x: float
    origin_y: float
    pixel_size: float
    crs_code: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError("bad_grid_file", f"grid dims must be >= 1, got {self.width}x{self.height}")
        if not (self.pixel_size > 0):
            raise DataError("bad_grid_file", f"pixel_size must be > 0, got {self.pixel_size}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def x_center(self, col) -> np.ndarray | float:
        """World x of a pixel-center column."""
        return self.origin_x + (np.asarray(col) + 0.5) * self.pixel_size

    def y_center(self, row) -> np.ndarray | float:
        """World y of a pixel-center row."""
        return self.origin_y - (np.asarray(row) + 0.5) * self.pixel_size

    def world_to_pixel(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the pixel containing world point (x, y)."""
        col = int(np.floor((x - self.origin_x) / self.pixel_size))
        row = int(np.floor((self.origin_y - y) / self.pixel_size))
        return row, col

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "pixel_size": self.pixel_size,
            "epsg": self.crs_code,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            origin_x=float(d["origin_x"]),
            origin_y=float(d["origin_y"]),
            pixel_size=float(d["pixel_size"]),
            crs_code=int(d["epsg"]),
        )


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class GeoGrid:
    """A single-band float32 raster bound to a GridSpec."""

    __slots__ = ("spec", "nodata", "values")

    def __init__(self, spec: GridSpec, values: np.ndarray, nodata: float = DEFAULT_NODATA, validate: bool = True):
        values = np.ascontiguousarray(values, dtype=np.float32)
        if values.shape != spec.shape:
            raise DataError("bad_grid_file", f"values shape {values.shape} != spec shape {spec.shape}")
        nodata = float(np.float32(nodata))
        if validate:
            bad = ~(np.isfinite(values) | (values == np.float32(nodata)))
            if bad.any():
                raise DataError("bad_grid_file", f"{int(bad.sum())} values neither finite nor nodata")
        self.spec = spec
        self.nodata = nodata
        self.values = _freeze(values)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def full(cls, spec: GridSpec, value: float, nodata: float = DEFAULT_NODATA) -> "GeoGrid":
        return cls(spec, np.full(spec.shape, value, dtype=np.float32), nodata)

    def with_values(self, values: np.ndarray, validate: bool = True) -> "GeoGrid":
        """Same geometry and nodata, new values."""
        return GeoGrid(self.spec, values, self.nodata, validate=validate)

    # -- basic accessors ------------------------------------------------------

    @property
    def width(self) -> int:
        return self.spec.width

    @property
    def height(self) -> int:
        return self.spec.height

    @property
    def pixel_size(self) -> float:
        return self.spec.pixel_size

    def data_mask(self) -> np.ndarray:
        """Boolean array, True where the pixel holds data."""
        return self.values != np.float32(self.nodata)

    def masked(self) -> np.ndarray:
        """float64 copy with nodata replaced by NaN (for numeric work)."""
        out = self.values.astype(np.float64)
        out[~self.data_mask()] = np.nan
        return out


class PixelMask:
    """Boolean per-pixel mask sharing GeoGrid's geometry rules."""

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=bool)
        if values.shape != spec.shape:
            raise DataError("bad_grid_file", f"mask shape {values.shape} != spec shape {spec.shape}")
        self.spec = spec
        self.values = _freeze(values)

    def count(self) -> int:
        return int(self.values.sum())


def align_check(a, b) -> bool:
    """True iff the two grids/masks share all geometry fields."""
    return a.spec == b.spec


def require_aligned(*grids) -> None:
    first = grids[0]
    for g in grids[1:]:
        if not align_check(first, g):
            raise DataError("alignment_mismatch", f"grid geometry differs: {first.spec} vs {g.spec}")


def crop(g: GeoGrid, window: tuple[int, int, int, int]) -> GeoGrid:
    """Crop to a pixel window (row0, col0, n_rows, n_cols).

    The output origin is recomputed so retained pixels keep their world
    coordinates.
    """
    row0, col0, n_rows, n_cols = window
    if row0 < 0 or col0 < 0 or n_rows < 1 or n_cols < 1:
        raise DataError("bad_grid_file", f"bad crop window {window}")
    if row0 + n_rows > g.height or col0 + n_cols > g.width:
        raise DataError("bad_grid_file", f"crop window {window} exceeds grid {g.spec.shape}")
    spec = GridSpec(
        width=n_cols,
        height=n_rows,
        origin_x=g.spec.origin_x + col0 * g.pixel_size,
        origin_y=g.spec.origin_y - row0 * g.pixel_size,
        pixel_size=g.pixel_size,
        crs_code=g.spec.crs_code,
    )
    vals = g.values[row0 : row0 + n_rows, col0 : col0 + n_cols].copy()
    return GeoGrid(spec, vals, g.nodata, validate=False)


NODATA_CODE = -2147483648  # integer sentinel used while resampling categories


def resample_majority(src: GeoGrid, target: GridSpec) -> GeoGrid:
    """Aggregate a categorical grid onto a coarser grid by per-block majority.

    The target pixel size must be an integer multiple k of the source's, and
    target pixel edges must fall on source pixel edges. Each target cell takes
    the modal category of the k x k source pixels it covers; nodata pixels do
    not vote, an all-nodata block stays nodata, and ties go to the lowest
    category code.
    """
    if target.crs_code != src.spec.crs_code:
        raise DataError("alignment_mismatch", f"crs mismatch: {src.spec.crs_code} vs {target.crs_code}")
    ratio = target.pixel_size / src.pixel_size
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise DataError("bad_grid_file", f"resolution ratio {ratio} is not an integer")
    off_cols = (target.origin_x - src.spec.origin_x) / src.pixel_size
    off_rows = (src.spec.origin_y - target.origin_y) / src.pixel_size
    if abs(off_cols - round(off_cols)) > 1e-6 or abs(off_rows - round(off_rows)) > 1e-6:
        raise DataError("alignment_mismatch", "target origin does not fall on source pixel edges")
    off_cols, off_rows = int(round(off_cols)), int(round(off_rows))
    # overlap of the target's source-resolution footprint with the source grid
    if (
        off_cols >= src.width
        or off_rows >= src.height
        or off_cols + target.width * k <= 0
        or off_rows + target.height * k <= 0
    ):
        raise DataError("alignment_mismatch", "grids do not overlap")

    src_codes = np.where(src.data_mask(), np.rint(src.values).astype(np.int64), NODATA_CODE)
    block = np.full((target.height * k, target.width * k), NODATA_CODE, dtype=np.int64)
    # copy the overlapping region into the block-aligned buffer
    r0, c0 = max(0, off_rows), max(0, off_cols)
    r1 = min(src.height, off_rows + target.height * k)
    c1 = min(src.width, off_cols + target.width * k)
    block[r0 - off_rows : r1 - off_rows, c0 - off_cols : c1 - off_cols] = src_codes[r0:r1, c0:c1]

    out_codes = kernels.majority_downsample(block, k, NODATA_CODE)
    out_vals = np.where(out_codes == NODATA_CODE, np.float32(src.nodata), out_codes.astype(np.float32))
    return GeoGrid(target, out_vals, src.nodata, validate=False)
