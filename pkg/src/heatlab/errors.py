"""Exception hierarchy and the machine-readable error catalog.

Every failure that can cross a process or HTTP boundary carries a code from
ERROR_CATALOG; the service layer refuses to emit anything else.
"""

from __future__ import annotations

ERROR_CATALOG: dict[str, str] = {
    "city_not_found": "No workspace matches the requested city id",
    "scene_not_found": "No scene with the requested id in this workspace",
    "layer_not_found": "Unknown layer name",
    "variant_not_found": "No predictions or model for the requested variant",
    "scenario_not_found": "Scenario (rcp, year) combination not configured",
    "analysis_pending": "Requested analysis output has not been computed yet",
    "mask_not_built": "Intervention polygon covers no convertible pixels",
    "invalid_polygon": "Polygon is degenerate or self-intersecting",
    "predictor_unavailable": "Selected variant cannot predict on modified inputs",
    "grid_too_large": "Grid exceeds the synchronous computation guard",
    "alignment_mismatch": "Grids do not share geometry",
    "missing_band": "Scene is missing one or more required bands",
    "bad_grid_file": "Portable grid file is malformed or inconsistent",
    "bad_geotiff": "GeoTIFF layout not supported by the importer",
    "bad_workspace": "Workspace layout or configuration is invalid",
    "empty_ring": "Baseline ring holds no usable pixels and fallback is disabled",
    "degenerate_mask": "Mask is all-true or all-false for the requested direction",
    "insufficient_donor": "Too few donor pixels for the target category",
    "bad_split": "Split preconditions not met",
    "bad_request": "Malformed request payload",
    "internal_error": "Internal invariant violation",
}

# CLI exit codes per error class (usage errors exit 2 via argparse).
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


class HeatlabError(Exception):
    """Base class; carries a catalog code plus a human-readable message."""

    exit_code = EXIT_DATA

    def __init__(self, code: str, message: str, detail: object = None):
        if code not in ERROR_CATALOG:
            raise ValueError(f"uncataloged error code: {code}")
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "detail": self.detail}


class DataError(HeatlabError):
    """Bad inputs, missing files, contract violations by the caller."""

    exit_code = EXIT_DATA


class InternalError(HeatlabError):
    """A heatlab invariant broke; always a bug."""

    exit_code = EXIT_INTERNAL

    def __init__(self, message: str, detail: object = None):
        super().__init__("internal_error", message, detail)
