"""Shared numerics: error metrics, nearest-rank quantiles, pooled moments,
largest-remainder allocation, and the ridge-guarded least squares used by the
linear predictor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class MetricReport:
    """Pointwise error metrics between prediction and truth (degrees C)."""

    mae: float
    mse: float
    rmse: float
    mbe: float
    n: int

    def to_json(self) -> dict:
        return {"mae": self.mae, "mse": self.mse, "rmse": self.rmse, "mbe": self.mbe, "n": self.n}


def metrics(pred, truth) -> MetricReport:
    """mae/mse/rmse/mbe over paired values; pairs must be pre-cleaned."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.size != truth.size:
        raise DataError("bad_request", f"length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise DataError("bad_request", "no usable pairs")
    err = pred - truth
    mse = float(np.mean(err * err))
    return MetricReport(
        mae=float(np.mean(np.abs(err))),
        mse=mse,
        rmse=float(np.sqrt(mse)),
        mbe=float(np.mean(err)),
        n=int(pred.size),
    )


def nearest_rank(values, q: float) -> float:
    """Nearest-rank quantile: the ceil(q*n)-th smallest value, no interpolation."""
    values = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = values.size
    if n == 0:
        raise DataError("bad_request", "quantile of an empty set")
    if not (0.0 < q <= 1.0):
        raise DataError("bad_request", f"quantile fraction must be in (0, 1], got {q}")
    idx = int(np.ceil(q * n)) - 1
    return float(values[min(max(idx, 0), n - 1)])


def largest_remainder(n: int, fractions) -> list[int]:
    """Integer allocation of n into len(fractions) parts, remainders favoring
    earlier entries on ties."""
    fractions = list(fractions)
    exact = [n * f for f in fractions]
    base = [int(np.floor(e)) for e in exact]
    leftover = n - sum(base)
    order = sorted(range(len(fractions)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in range(leftover):
        base[order[i]] += 1
    return base


def pooled_mean_std(means, stds, counts) -> tuple[float, float, int]:
    """Combine per-group population moments into the pooled mean/std/count."""
    means = np.asarray(means, dtype=np.float64)
    stds = np.asarray(stds, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        return float("nan"), float("nan"), 0
    mean = float((counts * means).sum() / n)
    second = (counts * (stds * stds + means * means)).sum() / n
    var = max(0.0, second - mean * mean)
    return mean, float(np.sqrt(var)), int(n)


def ridge_fit(features: np.ndarray, target: np.ndarray, lam: float = 1e-8) -> tuple[float, np.ndarray]:
    """Least squares with a small ridge term on centered features.

    Returns (intercept, weights). Centering makes the intercept exact for
    constant targets and keeps the fit invariant under dataset duplication.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(target, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError("bad_request", f"feature matrix {X.shape} does not match {y.size} targets")
    if X.shape[0] < X.shape[1] + 1:
        raise DataError("bad_request", f"{X.shape[0]} samples cannot constrain {X.shape[1]} features")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    n = X.shape[0]
    gram = Xc.T @ Xc / n + lam * np.eye(X.shape[1])
    rhs = Xc.T @ (y - y_mean) / n
    try:
        w = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as e:
        raise DataError("bad_request", f"feature matrix is rank-deficient beyond the ridge guard: {e}") from e
    intercept = y_mean - float(w @ x_mean)
    return intercept, w
