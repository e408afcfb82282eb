"""Land-cover semantics: category codes, park extraction, built-up masking,
distance fields, and built-density smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DataError
from .grid import GeoGrid, PixelMask, require_aligned

CATEGORY_NAMES = (
    "water",
    "trees",
    "flooded_vegetation",
    "crops",
    "built",
    "bare_ground",
    "snow_ice",
    "clouds",
    "rangeland",
)

# default code assignment for the 9-category scheme; real deployments override
# these in workspace config to match their LULC product's documentation
DEFAULT_CATEGORY_CODES = {
    "water": 1,
    "trees": 2,
    "flooded_vegetation": 4,
    "crops": 5,
    "built": 7,
    "bare_ground": 8,
    "snow_ice": 9,
    "clouds": 10,
    "rangeland": 11,
}


@dataclass(frozen=True)
class CategoryMap:
    """name -> integer code mapping for a categorical land-cover grid."""

    codes: dict = field(default_factory=lambda: dict(DEFAULT_CATEGORY_CODES))

    def __post_init__(self):
        unknown = set(self.codes) - set(CATEGORY_NAMES)
        if unknown:
            raise DataError("bad_workspace", f"unknown land-cover categories {sorted(unknown)}")
        values = list(self.codes.values())
        if len(set(values)) != len(values):
            raise DataError("bad_workspace", "land-cover category codes must be unique")

    def code(self, name: str) -> int:
        if name not in self.codes:
            raise DataError("bad_workspace", f"no code configured for category {name!r}")
        return int(self.codes[name])

    def name_of(self, code: int) -> str | None:
        for name, c in self.codes.items():
            if int(c) == int(code):
                return name
        return None

    def to_json(self) -> dict:
        return {k: int(v) for k, v in self.codes.items()}


def category_mask(lulc: GeoGrid, codes) -> PixelMask:
    """Pixels whose category code is in `codes`; nodata pixels are False."""
    codes = {int(c) for c in codes}
    data = lulc.data_mask()
    as_int = np.rint(lulc.values).astype(np.int64)
    member = np.isin(as_int, sorted(codes)) & data
    return PixelMask(lulc.spec, member)


def built_mask(lulc: GeoGrid, built_codes) -> PixelMask:
    return category_mask(lulc, built_codes)


@dataclass(frozen=True)
class ParkSet:
    labels: GeoGrid  # integer component ids stored as float32; 0 = not park
    park_areas: dict  # id -> area in m^2
    source_mask: PixelMask  # pixels belonging to any retained park

    @property
    def count(self) -> int:
        return len(self.park_areas)

    def park_mask(self, park_id: int) -> PixelMask:
        return PixelMask(self.labels.spec, self.labels.values == np.float32(park_id))


def extract_parks(lulc: GeoGrid, green_codes, min_area: float) -> ParkSet:
    """8-connected components of green-category pixels, area-filtered.

    Components smaller than min_area (m^2) are dropped; surviving parks are
    renumbered 1..n in first-occurrence scan order.
    """
    green = category_mask(lulc, green_codes)
    raw_labels, n = kernels.label_components(green.values)
    px_area = lulc.spec.pixel_size ** 2
    out = np.zeros(lulc.spec.shape, dtype=np.float32)
    areas: dict[int, float] = {}
    if n:
        counts = np.bincount(raw_labels.ravel(), minlength=n + 1)
        keep = [lab for lab in range(1, n + 1) if counts[lab] * px_area >= min_area]
        remap = np.zeros(n + 1, dtype=np.float32)
        for new_id, lab in enumerate(keep, start=1):  # scan order preserved
            remap[lab] = new_id
            areas[new_id] = float(counts[lab] * px_area)
        out = remap[raw_labels]
    labels = GeoGrid(lulc.spec, out, nodata=lulc.nodata, validate=False)
    return ParkSet(labels=labels, park_areas=areas, source_mask=PixelMask(lulc.spec, out > 0))


def distance_m(feature_mask: np.ndarray, pixel_size: float) -> np.ndarray:
    """Exact float64 distance (meters) from every pixel to the nearest True
    pixel center. Unreachable cells get +inf."""
    sq = kernels.edt_sq(np.ascontiguousarray(feature_mask, dtype=bool))
    out = np.sqrt(sq.astype(np.float64)) * float(pixel_size)
    out[sq >= kernels.INF_SQ] = np.inf
    return out


def euclidean_distance(mask: PixelMask, direction: str) -> GeoGrid:
    """Distance field in meters per the stated convention.

    direction "inside": defined on mask pixels, distance to the nearest
    non-mask pixel center (boundary pixels read pixel_size, not half).
    direction "outside": defined on non-mask pixels, distance to the nearest
    mask pixel center. The undefined side is nodata.
    """
    values = mask.values
    n_true = int(values.sum())
    n_false = values.size - n_true
    if direction == "inside":
        if n_true == 0 or n_false == 0:
            raise DataError("degenerate_mask", "inside distance needs both mask and background pixels")
        dist = distance_m(~values, mask.spec.pixel_size)
        keep = values
    elif direction == "outside":
        if n_true == 0 or n_false == 0:
            raise DataError("degenerate_mask", "outside distance needs both mask and background pixels")
        dist = distance_m(values, mask.spec.pixel_size)
        keep = ~values
    else:
        raise DataError("bad_request", f"direction must be inside or outside, got {direction!r}")
    out = np.full(mask.spec.shape, np.float32(-9999.0), dtype=np.float32)
    out[keep] = dist[keep].astype(np.float32)
    return GeoGrid(mask.spec, out, nodata=-9999.0, validate=False)


def built_fraction(built: PixelMask, valid: PixelMask, radius_px: int) -> GeoGrid:
    """Share of built pixels among valid pixels in a (2r+1)^2 moving window."""
    require_aligned(built, valid)
    num = kernels.box_count((built.values & valid.values).astype(np.int64), radius_px)
    den = kernels.box_count(valid.values.astype(np.int64), radius_px)
    out = np.full(built.spec.shape, np.float32(-9999.0), dtype=np.float32)
    ok = den > 0
    out[ok] = (num[ok].astype(np.float64) / den[ok].astype(np.float64)).astype(np.float32)
    return GeoGrid(built.spec, out, nodata=-9999.0, validate=False)
