"""Error metrics and the GA fitness (reciprocal of MAPE)."""
from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._io import atomic_write, fmt
from .dataset import Dataset
from .grnn import GrnnModel, estimate_batch

# fitness of a perfect (MAPE = 0) prediction; ranks above every finite fitness
PERFECT_FITNESS = math.inf

REPORT_COLUMNS = ("mape", "mae", "rmse", "max_ape", "n")
PREDICTION_COLUMNS = ("row", "actual_ms", "predicted_ms", "ape_percent")


class MetricError(ValueError):
    pass


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.ndim != 1 or a.shape != p.shape:
        raise MetricError(f"length mismatch: {a.shape} vs {p.shape}")
    if a.size == 0:
        raise MetricError("metrics need at least one value")
    if np.any(~(a > 0)):
        raise MetricError("actual values must be > 0")
    return a, p


def ape(actual, predicted) -> np.ndarray:
    """Per-row absolute percentage error."""
    a, p = _pair(actual, predicted)
    return 100.0 * np.abs(a - p) / a


def mape(actual: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute percentage error, in percent."""
    return float(np.mean(ape(actual, predicted)))


def fitness(mape_percent: float) -> float:
    if mape_percent < 0 or math.isnan(mape_percent):
        raise MetricError(f"MAPE must be >= 0, got {mape_percent!r}")
    if mape_percent == 0:
        return PERFECT_FITNESS
    # 1/subnormal overflows; stay finite so an exact fit still ranks strictly first
    return min(1.0 / mape_percent, sys.float_info.max)


@dataclass(frozen=True)
class EvalReport:
    mape: float
    mae: float
    rmse: float
    max_ape: float
    n: int

    @classmethod
    def from_predictions(cls, actual, predicted) -> "EvalReport":
        a, p = _pair(actual, predicted)
        err = np.abs(a - p)
        pct = 100.0 * err / a
        return cls(mape=float(pct.mean()), mae=float(err.mean()),
                   rmse=float(math.sqrt(np.mean(err * err))),
                   max_ape=float(pct.max()), n=int(a.size))

    def summary(self) -> str:
        return (f"mape={self.mape:.4f}% mae={self.mae:.6g}ms rmse={self.rmse:.6g}ms "
                f"max_ape={self.max_ape:.4f}% n={self.n}")

    def write_csv(self, path) -> None:
        with atomic_write(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            w.writerow([fmt(self.mape), fmt(self.mae), fmt(self.rmse),
                        fmt(self.max_ape), str(self.n)])


def write_predictions(path, actual, predicted) -> None:
    pct = ape(actual, predicted)
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PREDICTION_COLUMNS)
        for i, (a, p, e) in enumerate(zip(actual, predicted, pct), start=1):
            w.writerow([i, fmt(a), fmt(p), fmt(e)])


def evaluate(model: GrnnModel, test: Dataset, predictions_path=None) -> EvalReport:
    if len(test) == 0:
        raise MetricError("empty test set")
    actual = test.delays
    predicted = np.asarray(estimate_batch(model, test.conditions))
    if predictions_path is not None:
        write_predictions(predictions_path, actual, predicted)
    return EvalReport.from_predictions(actual, predicted)
