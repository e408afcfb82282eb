"""Evaluation harness: train/val/test splits (random and temperature-ordered),
profile comparison, and extrapolation accounting for the high-heat holdout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cooling import CoolingProfile
from .errors import DataError
from .stats import MetricReport, largest_remainder, metrics, nearest_rank


@dataclass(frozen=True)
class SplitPlan:
    strategy: str  # "random" | "high_heat"
    train: list
    val: list
    test: list
    seed: int
    ordering_key: str = "index"
    warning: str | None = None

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "train": list(self.train),
            "val": list(self.val),
            "test": list(self.test),
            "seed": self.seed,
            "ordering_key": self.ordering_key,
            "warning": self.warning,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SplitPlan":
        return cls(
            strategy=str(d["strategy"]),
            train=[int(i) for i in d["train"]],
            val=[int(i) for i in d["val"]],
            test=[int(i) for i in d["test"]],
            seed=int(d["seed"]),
            ordering_key=str(d.get("ordering_key", "index")),
            warning=d.get("warning"),
        )


def _check_n(n: int) -> None:
    if n < 10:
        raise DataError("bad_split", f"need at least 10 samples, got {n}")


def split_random(n: int, fracs=(0.72, 0.18, 0.10), seed: int = 0) -> SplitPlan:
    """Seeded shuffle then contiguous slices sized by largest remainder."""
    _check_n(n)
    if len(fracs) != 3 or abs(sum(fracs) - 1.0) > 1e-9:
        raise DataError("bad_split", f"fractions must be three values summing to 1, got {fracs}")
    sizes = largest_remainder(n, fracs)
    if min(sizes) < 1:
        raise DataError("bad_split", f"{n} samples cannot give every part at least one member")
    perm = np.random.default_rng(seed).permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return SplitPlan(
        strategy="random",
        train=[int(i) for i in perm[:a]],
        val=[int(i) for i in perm[a:b]],
        test=[int(i) for i in perm[b:]],
        seed=seed,
    )


def split_high_heat(
    keys,
    q: float = 0.90,
    train_val_ratio: float = 0.8,
    seed: int = 0,
    ordering_key: str = "scene_mean_lst",
) -> SplitPlan:
    """Withhold the hottest (1-q) tail by ordering key.

    The threshold is the nearest-rank q-quantile; samples strictly above it
    form the test set (ties stay on the cooler side), and the cooler part is
    shuffled into train/val by train_val_ratio.
    """
    keys = np.asarray(keys, dtype=np.float64)
    _check_n(keys.size)
    if not np.isfinite(keys).all():
        raise DataError("bad_split", "ordering keys must be finite")
    threshold = nearest_rank(keys, q)
    test = [int(i) for i in np.nonzero(keys > threshold)[0]]
    cooler = np.nonzero(keys <= threshold)[0]
    sizes = largest_remainder(cooler.size, (train_val_ratio, 1.0 - train_val_ratio))
    perm = np.random.default_rng(seed).permutation(cooler.size)
    shuffled = cooler[perm]
    warning = None
    if not test:
        warning = "degenerate ordering keys: hottest tail is empty"
    return SplitPlan(
        strategy="high_heat",
        train=[int(i) for i in shuffled[: sizes[0]]],
        val=[int(i) for i in shuffled[sizes[0] :]],
        test=test,
        seed=seed,
        ordering_key=ordering_key,
        warning=warning,
    )


@dataclass(frozen=True)
class ExtrapolationReport:
    train_max_key: float  # hottest ordering key seen by train+val
    test_key_range: tuple  # (min, max) ordering key over test
    predicted_max: float | None  # hottest accepted test prediction
    margin: float | None  # predicted_max - train_max_key
    metrics: MetricReport
    tolerance: float
    accepted: int  # test predictions within tolerance of truth

    def to_json(self) -> dict:
        return {
            "train_max_key": self.train_max_key,
            "test_key_range": [self.test_key_range[0], self.test_key_range[1]],
            "predicted_max": self.predicted_max,
            "margin": self.margin,
            "metrics": self.metrics.to_json(),
            "tolerance": self.tolerance,
            "accepted": self.accepted,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExtrapolationReport":
        m = d["metrics"]
        return cls(
            train_max_key=float(d["train_max_key"]),
            test_key_range=(float(d["test_key_range"][0]), float(d["test_key_range"][1])),
            predicted_max=None if d["predicted_max"] is None else float(d["predicted_max"]),
            margin=None if d["margin"] is None else float(d["margin"]),
            metrics=MetricReport(mae=m["mae"], mse=m["mse"], rmse=m["rmse"], mbe=m["mbe"], n=m["n"]),
            tolerance=float(d["tolerance"]),
            accepted=int(d["accepted"]),
        )


def extrapolation_margin(predicted_max: float, train_max_key: float) -> float:
    """The accepted prediction's reach beyond the hottest training key."""
    return predicted_max - train_max_key


def extrapolation_report(plan: SplitPlan, keys, pred, truth, tolerance: float = 2.0) -> ExtrapolationReport:
    """Score the high-heat holdout and measure how far accepted predictions
    extend past the training range."""
    keys = np.asarray(keys, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if not plan.test:
        raise DataError("bad_split", "extrapolation needs a nonempty test set")
    test = np.asarray(plan.test, dtype=np.int64)
    fit_pool = np.asarray(list(plan.train) + list(plan.val), dtype=np.int64)
    if fit_pool.size == 0:
        raise DataError("bad_split", "empty training pool")
    report = metrics(pred[test], truth[test])
    err_ok = np.abs(pred[test] - truth[test]) <= tolerance
    accepted = int(err_ok.sum())
    train_max_key = float(keys[fit_pool].max())
    predicted_max = float(pred[test][err_ok].max()) if accepted else None
    margin = extrapolation_margin(predicted_max, train_max_key) if predicted_max is not None else None
    return ExtrapolationReport(
        train_max_key=train_max_key,
        test_key_range=(float(keys[test].min()), float(keys[test].max())),
        predicted_max=predicted_max,
        margin=margin,
        metrics=report,
        tolerance=tolerance,
        accepted=accepted,
    )


def compare_profiles(truth: CoolingProfile, pred: CoolingProfile) -> MetricReport:
    """Metrics over paired bin means, skipping bins either side left empty."""
    if truth.side != pred.side or not np.array_equal(truth.bin_edges, pred.bin_edges):
        raise DataError("bad_request", "profiles disagree on side or bin edges")
    both = (truth.count > 0) & (pred.count > 0)
    if not both.any():
        raise DataError("bad_request", "profiles share no populated bins")
    return metrics(pred.mean_dt[both], truth.mean_dt[both])
