"""General regression neural network (Gaussian-kernel Nadaraya-Watson).

Training is pattern storage. An estimate is the kernel-weighted average of
the stored targets::

    y(x) = sum_j y_j exp(-d_j / 2) / sum_j exp(-d_j / 2)
    d_j  = sum_k ((x_k - p_jk) / sigma_k) ** 2

with every quantity in z-scored feature units. Weights are evaluated as
``exp(-(d_j - min_i d_i) / 2)``: identical in exact arithmetic, but it
cannot underflow to 0/0 for a tiny sigma or a far-away query.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from ._io import atomic_write, fmt
from .dataset import FEATURES, N_FEATURES, Dataset, NetworkCondition, NormStats

SIGMA_MIN = 1e-4
SIGMA_MAX = 10.0
SCHEMA_VERSION = 1


class ModelError(ValueError):
    pass


class ZeroVarianceWarning(UserWarning):
    """A training feature is constant and is ignored by the distance."""


@dataclass(frozen=True)
class Sigma:
    """Smoothing parameter: one value (isotropic) or one per feature."""

    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        if len(values) not in (1, N_FEATURES):
            raise ModelError(f"sigma needs 1 or {N_FEATURES} values, got {len(values)}")
        for v in values:
            if not SIGMA_MIN <= v <= SIGMA_MAX:
                raise ModelError(
                    f"sigma {v!r} outside [{SIGMA_MIN:g}, {SIGMA_MAX:g}]")
        object.__setattr__(self, "values", values)

    @classmethod
    def isotropic(cls, value: float) -> "Sigma":
        return cls((value,))

    @property
    def mode(self) -> str:
        return "isotropic" if len(self.values) == 1 else "per-feature"

    def expanded(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.values), (N_FEATURES,)).copy()


@dataclass(frozen=True, eq=False)
class GrnnModel:
    """Stored (normalized) training patterns plus what is needed to query them."""

    patterns: np.ndarray
    targets: np.ndarray
    sigma: Sigma
    norm_stats: NormStats

    def __post_init__(self):
        patterns = np.ascontiguousarray(self.patterns, dtype=np.float64)
        targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        if patterns.ndim != 2 or patterns.shape[1] != N_FEATURES:
            raise ModelError(f"patterns must have shape (n, {N_FEATURES})")
        if patterns.shape[0] < 1 or targets.shape != (patterns.shape[0],):
            raise ModelError("need at least one pattern and one target per pattern")
        patterns.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "patterns", patterns)
        object.__setattr__(self, "targets", targets)

    def __len__(self):
        return self.patterns.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrnnModel):
            return NotImplemented
        return (self.sigma == other.sigma and self.norm_stats == other.norm_stats
                and np.array_equal(self.patterns, other.patterns)
                and np.array_equal(self.targets, other.targets))

    def with_sigma(self, sigma: Sigma) -> "GrnnModel":
        return GrnnModel(self.patterns, self.targets, sigma, self.norm_stats)


def fit(train: Dataset, sigma: Sigma) -> GrnnModel:
    if len(train) < 1:
        raise ModelError("cannot fit on an empty dataset")
    stats = train.norm_stats
    flat = [name for name, z in zip(FEATURES, stats.zero_variance) if z]
    if flat and len(train) > 1:
        warnings.warn(f"zero-variance features ignored: {', '.join(flat)}",
                      ZeroVarianceWarning, stacklevel=2)
    return GrnnModel(stats.apply(train.features), train.delays, sigma, stats)


def distance_sq(query_z, pattern_z, sigma: Sigma) -> float:
    diff = (np.asarray(query_z, dtype=np.float64)
            - np.asarray(pattern_z, dtype=np.float64)) / sigma.expanded()
    return float(diff @ diff)


def _predict_z(model: GrnnModel, queries_z: np.ndarray) -> np.ndarray:
    queries_z = np.ascontiguousarray(queries_z, dtype=np.float64).reshape(-1, N_FEATURES)
    t = model.targets
    return _backend.kernels.predict(model.patterns, t, model.sigma.expanded(),
                                    queries_z, float(t.min()), float(t.max()))


def estimate(model: GrnnModel, cond: NetworkCondition) -> float:
    return float(_predict_z(model, model.norm_stats.apply(cond.as_array()))[0])


def estimate_batch(model: GrnnModel, conds: Sequence[NetworkCondition]) -> list[float]:
    if len(conds) == 0:
        return []
    raw = np.array([c.as_array() for c in conds])
    return _predict_z(model, model.norm_stats.apply(raw)).tolist()


def loo_estimates(model: GrnnModel) -> np.ndarray:
    """Estimate at each stored pattern with that pattern left out of both sums."""
    if len(model) < 2:
        raise ModelError("leave-one-out needs at least 2 patterns")
    return _backend.kernels.loo_predict(model.patterns, model.targets,
                                        model.sigma.expanded())


def _arr(values) -> str:
    return "[" + ", ".join(fmt(v) for v in values) + "]"


def dumps(model: GrnnModel) -> str:
    rows = ",\n    ".join(_arr(list(p) + [y]) for p, y in zip(model.patterns, model.targets))
    return (
        "{\n"
        f'  "schema_version": {SCHEMA_VERSION},\n'
        f'  "features": {json.dumps(list(FEATURES))},\n'
        f'  "sigma": {_arr(model.sigma.values)},\n'
        '  "norm_stats": {\n'
        f'    "mean": {_arr(model.norm_stats.mean)},\n'
        f'    "std": {_arr(model.norm_stats.std)}\n'
        "  },\n"
        f'  "patterns": [\n    {rows}\n  ]\n'
        "}\n"
    )


def loads(text: str) -> GrnnModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model file is not valid JSON: {exc}") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelError(f"unsupported model schema_version {version!r} "
                         f"(expected {SCHEMA_VERSION})")
    if tuple(doc.get("features", FEATURES)) != FEATURES:
        raise ModelError(f"model features {doc['features']} do not match {list(FEATURES)}")
    try:
        rows = np.array(doc["patterns"], dtype=np.float64)
        stats = NormStats(tuple(doc["norm_stats"]["mean"]), tuple(doc["norm_stats"]["std"]))
        sigma = Sigma(tuple(doc["sigma"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model file: {exc}") from None
    if rows.ndim != 2 or rows.shape[1] != N_FEATURES + 1:
        raise ModelError("patterns must be rows of 5 features + target")
    if not np.all(np.isfinite(rows)) or np.any(rows[:, -1] <= 0):
        raise ModelError("patterns must be finite with positive targets")
    return GrnnModel(rows[:, :-1], rows[:, -1], sigma, stats)


def save_model(model: GrnnModel, path) -> None:
    with atomic_write(path) as fh:
        fh.write(dumps(model))


def load_model(path) -> GrnnModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def isotropic_grid(n: int = 64, lo: float = SIGMA_MIN, hi: float = SIGMA_MAX) -> np.ndarray:
    """Log-spaced isotropic sigma values, endpoints included."""
    return np.clip(np.logspace(math.log10(lo), math.log10(hi), n), lo, hi)
