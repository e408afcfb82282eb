"""JSON Schemas for the wire formats served over HTTP.

These are plain dicts (draft 2020-12) so clients can fetch them from the
service and validate payloads without importing this package.
"""

from __future__ import annotations

NUMBER_OR_NULL = {"type": ["number", "null"]}

ERROR_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["error"],
    "properties": {
        "error": {
            "type": "object",
            "required": ["code", "message"],
            "properties": {
                "code": {"type": "string"},
                "message": {"type": "string"},
                "detail": {},
            },
        }
    },
}

CITY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["city_id", "grid", "n_scenes", "layers", "variants"],
    "properties": {
        "city_id": {"type": "string"},
        "grid": {
            "type": "object",
            "required": ["width", "height", "origin_x", "origin_y", "pixel_size", "epsg"],
        },
        "utc_offset_hours": {"type": "number"},
        "n_scenes": {"type": "integer", "minimum": 0},
        "scene_ids": {"type": "array", "items": {"type": "string"}},
        "layers": {"type": "array", "items": {"type": "string"}},
        "variants": {"type": "array", "items": {"type": "string"}},
        "scenarios": {"type": "array"},
    },
}

CITIES_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "array",
    "items": CITY_SCHEMA,
}

LAYER_STATS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["layer", "stats", "palette", "vmin", "vmax"],
    "properties": {
        "layer": {"type": "string"},
        "scene_id": {"type": ["string", "null"]},
        "variant": {"type": ["string", "null"]},
        "stats": {
            "type": "object",
            "required": ["min", "mean", "max", "n"],
            "properties": {
                "min": NUMBER_OR_NULL,
                "mean": NUMBER_OR_NULL,
                "max": NUMBER_OR_NULL,
                "n": {"type": "integer"},
            },
        },
        "palette": {"type": "string"},
        "vmin": {"type": "number"},
        "vmax": {"type": "number"},
        "png_url": {"type": "string"},
    },
}

PROFILE_SCHEMA = {
    "type": "object",
    "required": ["side", "bin_edges", "mean_dt", "std_dt", "count", "mean_dist"],
    "properties": {
        "side": {"enum": ["internal", "spillover"]},
        "bin_edges": {"type": "array", "items": {"type": "number"}},
        "mean_dt": {"type": "array", "items": NUMBER_OR_NULL},
        "std_dt": {"type": "array", "items": NUMBER_OR_NULL},
        "count": {"type": "array", "items": {"type": "integer"}},
        "mean_dist": {"type": "array", "items": NUMBER_OR_NULL},
    },
}

PROFILES_RESPONSE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["city_id", "kind", "truth"],
    "properties": {
        "city_id": {"type": "string"},
        "kind": {"enum": ["internal", "spillover"]},
        "truth": PROFILE_SCHEMA,
        "variants": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["profile", "metrics"],
                "properties": {
                    "profile": PROFILE_SCHEMA,
                    "metrics": {
                        "type": "object",
                        "required": ["mae", "mse", "rmse", "mbe", "n"],
                    },
                },
            },
        },
    },
}

INTERVENTION_REQUEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["polygon"],
    "properties": {
        "polygon": {
            "type": "array",
            "minItems": 3,
            "items": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": {"type": "number"},
            },
        },
        "target_category": {"type": "string"},
        "statistic": {"enum": ["median", "mean", None]},
        "jitter_fraction": NUMBER_OR_NULL,
        "seed": {"type": "integer"},
        "scene_id": {"type": ["string", "null"]},
        "variant": {"type": "string"},
    },
}

TRANSECT_SAMPLE_SCHEMA = {
    "type": "object",
    "required": ["distance_m", "before_c", "after_c", "delta_c", "in_mask"],
    "properties": {
        "distance_m": {"type": "number"},
        "x": {"type": "number"},
        "y": {"type": "number"},
        "row": {"type": "integer"},
        "col": {"type": "integer"},
        "before_c": NUMBER_OR_NULL,
        "after_c": NUMBER_OR_NULL,
        "delta_c": NUMBER_OR_NULL,
        "in_mask": {"type": "boolean"},
    },
}

INTERVENTION_RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": [
        "request_id",
        "spec",
        "scene_id",
        "variant",
        "replaced_pixels",
        "mask_pixels",
        "area_m2",
        "mean_delta_in_mask",
        "donor",
        "transect",
        "internal_profile",
        "spillover_profile",
    ],
    "properties": {
        "request_id": {"type": "string"},
        "scene_id": {"type": "string"},
        "variant": {"type": "string"},
        "replaced_pixels": {"type": "integer", "minimum": 1},
        "mask_pixels": {"type": "integer", "minimum": 1},
        "area_m2": {"type": "number"},
        "mean_delta_in_mask": {"type": "number"},
        "donor": {"type": "object"},
        "transect": {"type": "array", "items": TRANSECT_SAMPLE_SCHEMA},
        "internal_profile": PROFILE_SCHEMA,
        "spillover_profile": PROFILE_SCHEMA,
    },
}

SCENARIO_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["scenario", "variant", "report", "per_scene", "out_of_validated_range"],
    "properties": {
        "scenario": {
            "type": "object",
            "required": ["rcp", "horizon_year", "monthly_delta", "source_label"],
            "properties": {
                "rcp": {"type": "string"},
                "horizon_year": {"type": "integer"},
                "monthly_delta": {
                    "type": "array",
                    "minItems": 12,
                    "maxItems": 12,
                    "items": {"type": "number"},
                },
                "source_label": {"type": "string"},
            },
        },
        "variant": {"type": "string"},
        "report": {
            "type": "object",
            "required": [
                "threshold_c",
                "urban_pixels",
                "exceed_pixels",
                "exceed_area_km2",
                "exceed_fraction",
                "mean_urban_anomaly",
            ],
        },
        "per_scene": {"type": "array"},
        "out_of_validated_range": {"type": ["boolean", "null"]},
        "anomaly_png_url": {"type": "string"},
    },
}

SPLIT_PLAN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["strategy", "train", "val", "test", "seed"],
    "properties": {
        "strategy": {"enum": ["random", "high_heat"]},
        "train": {"type": "array", "items": {"type": "integer"}},
        "val": {"type": "array", "items": {"type": "integer"}},
        "test": {"type": "array", "items": {"type": "integer"}},
        "seed": {"type": "integer"},
        "ordering_key": {"type": "string"},
        "warning": {"type": ["string", "null"]},
    },
}

VERSION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "version", "api_version", "kernel_backend"],
    "properties": {
        "name": {"type": "string"},
        "version": {"type": "string"},
        "api_version": {"type": "integer"},
        "kernel_backend": {"enum": ["numba", "numpy"]},
    },
}

ALL_SCHEMAS = {
    "error": ERROR_SCHEMA,
    "city": CITY_SCHEMA,
    "cities": CITIES_SCHEMA,
    "layer_stats": LAYER_STATS_SCHEMA,
    "profiles_response": PROFILES_RESPONSE_SCHEMA,
    "intervention_request": INTERVENTION_REQUEST_SCHEMA,
    "intervention_result": INTERVENTION_RESULT_SCHEMA,
    "scenario_report": SCENARIO_REPORT_SCHEMA,
    "split_plan": SPLIT_PLAN_SCHEMA,
    "version": VERSION_SCHEMA,
}
