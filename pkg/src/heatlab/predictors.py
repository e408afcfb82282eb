"""Pluggable LST predictors: a linear baseline, externally produced
prediction rasters, and the synthetic-world oracle.

A predictor is (identity, predict) where predict maps a SceneStack to an
aligned LST grid in degrees C, absorbing nodata from every input channel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral
from .errors import DataError
from .grid import GeoGrid
from .gridio import load_grid
from .landcover import distance_m
from .stats import ridge_fit
from .workspace import SceneStack, Workspace

FEATURE_NAMES = ("airtemp", "ndvi", "ndbi", "albedo")


@dataclass(frozen=True)
class Predictor:
    identity: str
    predict: object  # SceneStack -> GeoGrid


@dataclass(frozen=True)
class LinearLstModel:
    w0: float
    w_airtemp: float
    w_ndvi: float
    w_ndbi: float
    w_albedo: float

    def __post_init__(self):
        for name in ("w0", "w_airtemp", "w_ndvi", "w_ndbi", "w_albedo"):
            if not math.isfinite(getattr(self, name)):
                raise DataError("bad_request", f"model weight {name} is not finite")

    def weights(self) -> np.ndarray:
        return np.array([self.w_airtemp, self.w_ndvi, self.w_ndbi, self.w_albedo])

    def to_json(self) -> dict:
        return {
            "w0": self.w0,
            "w_airtemp": self.w_airtemp,
            "w_ndvi": self.w_ndvi,
            "w_ndbi": self.w_ndbi,
            "w_albedo": self.w_albedo,
        }

    @classmethod
    def from_json(cls, d: dict) -> "LinearLstModel":
        return cls(**{k: float(d[k]) for k in ("w0", "w_airtemp", "w_ndvi", "w_ndbi", "w_albedo")})

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "LinearLstModel":
        path = Path(path)
        if not path.exists():
            raise DataError("predictor_unavailable", f"no fitted model at {path}")
        return cls.from_json(json.loads(path.read_text()))


def stack_features(stack: SceneStack, albedo_weights: dict | None = None) -> dict:
    """Per-pixel feature grids for the linear model."""
    nd = spectral.ndvi(stack.channel("nir"), stack.channel("red"))
    nb = spectral.ndbi(stack.channel("swir1"), stack.channel("nir"))
    al = spectral.albedo(stack.channels, albedo_weights)
    return {"airtemp": stack.channel("airtemp"), "ndvi": nd, "ndbi": nb, "albedo": al}


def fit_baseline(train, albedo_weights: dict | None = None, lam: float = 1e-8) -> LinearLstModel:
    """Least squares over (air temp, ndvi, ndbi, albedo) -> LST pixels.

    `train` is a sequence of (SceneStack, truth GeoGrid) pairs; pixels where
    any feature or the truth is nodata are dropped.
    """
    rows = []
    targets = []
    for stack, truth in train:
        feats = stack_features(stack, albedo_weights)
        valid = truth.data_mask()
        for g in feats.values():
            valid &= g.data_mask()
        if not valid.any():
            continue
        cols = [feats[name].values[valid].astype(np.float64) for name in FEATURE_NAMES]
        rows.append(np.stack(cols, axis=1))
        targets.append(truth.values[valid].astype(np.float64))
    if not rows:
        raise DataError("bad_request", "no usable training pixels")
    X = np.concatenate(rows, axis=0)
    y = np.concatenate(targets)
    if X.shape[0] < 5 * len(FEATURE_NAMES):
        raise DataError("bad_request", f"only {X.shape[0]} usable pixels, need {5 * len(FEATURE_NAMES)}")
    intercept, w = ridge_fit(X, y, lam=lam)
    return LinearLstModel(w0=intercept, w_airtemp=w[0], w_ndvi=w[1], w_ndbi=w[2], w_albedo=w[3])


def predict_baseline(model: LinearLstModel, stack: SceneStack, albedo_weights: dict | None = None) -> GeoGrid:
    """w0 + w.features per pixel, nodata absorbing."""
    feats = stack_features(stack, albedo_weights)
    first = feats["airtemp"]
    valid = np.ones(first.spec.shape, dtype=bool)
    acc = np.full(first.spec.shape, model.w0, dtype=np.float64)
    for name, weight in zip(FEATURE_NAMES, model.weights()):
        g = feats[name]
        valid &= g.data_mask()
        acc += weight * g.values.astype(np.float64)
    out = np.full(first.spec.shape, first.nodata, dtype=np.float32)
    out[valid] = acc[valid].astype(np.float32)
    return first.with_values(out, validate=False)


def baseline_predictor(model: LinearLstModel, albedo_weights: dict | None = None) -> Predictor:
    return Predictor(identity="baseline", predict=lambda s: predict_baseline(model, s, albedo_weights))


def load_external_predictions(directory, ws: Workspace, variant: str) -> Predictor:
    """Serve pre-computed prediction grids, one per scene_id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError("variant_not_found", f"no prediction directory for variant {variant!r}")

    def predict(stack: SceneStack) -> GeoGrid:
        path = directory / f"{stack.scene_id}.grid"
        if not path.exists():
            raise DataError("scene_not_found", f"variant {variant!r} has no prediction for {stack.scene_id}")
        grid = load_grid(path)
        if grid.spec != ws.grid_spec:
            raise DataError("alignment_mismatch", f"prediction for {stack.scene_id} is misaligned")
        return grid

    return Predictor(identity=variant, predict=predict)


class OraclePredictor:
    """Re-evaluates the synthetic world's planted physics from the inputs.

    Park pixels are recognized by NDVI threshold, distances recomputed from
    that mask, the built-density surface comes from the generator metadata,
    and the scene base temperature is recovered from the air channel. Noise
    is never replayed, so the oracle is the noise-free planted field.
    """

    def __init__(self, meta: dict, built_density: GeoGrid):
        self.meta = meta
        self.density = built_density

    @classmethod
    def open(cls, ws: Workspace) -> "OraclePredictor":
        meta_path = ws.root / "synth.json"
        density_path = ws.root / "built_density.grid"
        if not meta_path.exists() or not density_path.exists():
            raise DataError(
                "predictor_unavailable",
                "the oracle variant exists only for synthetic workspaces with planted metadata",
            )
        return cls(json.loads(meta_path.read_text()), load_grid(density_path))

    def predict(self, stack: SceneStack) -> GeoGrid:
        m = self.meta
        first = stack.channel("airtemp")
        valid = np.ones(first.spec.shape, dtype=bool)
        for band in stack.channels.values():
            valid &= band.data_mask()
        valid &= self.density.data_mask()
        air = stack.channel("airtemp").values.astype(np.float64)
        if not valid.any():
            raise DataError("degenerate_mask", "no usable pixels in scene")
        base = float(air[valid].mean()) + float(m["air_gap_c"])
        nd = spectral.ndvi(stack.channel("nir"), stack.channel("red"))
        park = nd.data_mask() & (nd.values >= np.float32(m["park_ndvi_threshold"]))
        px = first.spec.pixel_size
        lst = base + float(m["uhi_amplitude"]) * self.density.values.astype(np.float64)
        if park.any() and not park.all():
            d_in = distance_m(~park, px)
            d_out = distance_m(park, px)
            sat = np.minimum(d_in / float(m["internal_saturation_m"]), 1.0)
            lst = np.where(park, lst - float(m["internal_depth"]) * sat, lst)
            spill = float(m["spillover_amplitude"]) * np.exp(-d_out / float(m["spillover_decay_m"]))
            lst = np.where(~park, lst - spill, lst)
        elif park.all():
            lst = lst - float(m["internal_depth"])
        out = np.full(first.spec.shape, first.nodata, dtype=np.float32)
        out[valid] = lst[valid].astype(np.float32)
        return first.with_values(out, validate=False)


def oracle_predictor(ws: Workspace) -> Predictor:
    oracle = OraclePredictor.open(ws)
    return Predictor(identity="oracle", predict=oracle.predict)


def available_variants(ws: Workspace) -> list[str]:
    """Variant labels resolvable in this workspace, stable order."""
    out = []
    if (ws.root / "synth.json").exists():
        out.append("oracle")
    if (ws.models_dir / "baseline.json").exists():
        out.append("baseline")
    pred_root = ws.root / "predictions"
    if pred_root.is_dir():
        for p in sorted(pred_root.iterdir()):
            if p.is_dir() and p.name not in out:
                out.append(p.name)
    return out


def get_predictor(ws: Workspace, variant: str) -> Predictor:
    if variant == "oracle":
        return oracle_predictor(ws)
    if variant == "baseline":
        model = LinearLstModel.load(ws.models_dir / "baseline.json")
        return baseline_predictor(model, ws.config.raw["albedo_weights"])
    pred_dir = ws.predictions_dir(variant)
    if pred_dir.is_dir():
        return load_external_predictions(pred_dir, ws, variant)
    raise DataError("variant_not_found", f"unknown predictor variant {variant!r}")
