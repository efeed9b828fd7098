"""Delay samples, CSV ingestion and z-score normalization."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._io import atomic_write, fmt

FEATURES = ("loading", "length_m", "contention", "devices", "plc_rungs")
TARGET = "delay_ms"
COLUMNS = FEATURES + (TARGET,)
N_FEATURES = len(FEATURES)


class DatasetError(ValueError):
    """Malformed or invalid delay data."""


@dataclass(frozen=True)
class NetworkCondition:
    """Observable channel state for one measurement."""

    loading: float
    length: float
    contention: float
    devices: int
    plc_rungs: int

    def __post_init__(self):
        for name in ("loading", "length", "contention", "devices", "plc_rungs"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DatasetError(f"{name} must be finite, got {v!r}")
        if not 0.0 <= self.loading <= 1.0:
            raise DatasetError(f"loading must be in [0, 1], got {self.loading!r}")
        if not self.length > 0:
            raise DatasetError(f"length must be > 0, got {self.length!r}")
        if not self.contention >= 1:
            raise DatasetError(f"contention must be >= 1, got {self.contention!r}")
        for name, lo in (("devices", 1), ("plc_rungs", 0)):
            v = getattr(self, name)
            if v != int(v):
                raise DatasetError(f"{name} must be an integer, got {v!r}")
            if v < lo:
                raise DatasetError(f"{name} must be >= {lo}, got {v!r}")
            object.__setattr__(self, name, int(v))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.loading, self.length, self.contention, self.devices, self.plc_rungs],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class DelaySample:
    condition: NetworkCondition
    delay: float

    def __post_init__(self):
        if not (math.isfinite(self.delay) and self.delay > 0):
            raise DatasetError(f"delay must be > 0 and finite, got {self.delay!r}")


@dataclass(frozen=True)
class NormStats:
    """Per-feature mean and population standard deviation."""

    mean: tuple[float, ...]
    std: tuple[float, ...]

    def __post_init__(self):
        if len(self.mean) != N_FEATURES or len(self.std) != N_FEATURES:
            raise DatasetError("norm stats need one mean and one std per feature")
        if not all(math.isfinite(v) for v in self.mean + self.std):
            raise DatasetError("norm stats must be finite")
        if any(s < 0 for s in self.std):
            raise DatasetError("standard deviations must be >= 0")

    @classmethod
    def from_features(cls, x: np.ndarray) -> "NormStats":
        return cls(tuple(float(v) for v in x.mean(axis=0)),
                   tuple(float(v) for v in x.std(axis=0)))

    @property
    def zero_variance(self) -> tuple[bool, ...]:
        return tuple(s == 0 for s in self.std)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Z-score rows of ``x``; zero-variance columns map to 0."""
        mean = np.asarray(self.mean)
        std = np.asarray(self.std)
        safe = np.where(std > 0, std, 1.0)
        z = (np.asarray(x, dtype=np.float64) - mean) / safe
        z[..., std == 0] = 0.0
        return z

    def invert(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(self.mean) + np.asarray(z) * np.asarray(self.std)


@dataclass(frozen=True)
class Dataset:
    """Immutable, ordered collection of delay samples.

    ``norm_stats`` is derived from the held samples at construction.
    """

    samples: tuple[DelaySample, ...]
    norm_stats: NormStats = field(init=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise DatasetError("a dataset needs at least one sample")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "norm_stats", NormStats.from_features(self.features))

    def __len__(self):
        return len(self.samples)

    @property
    def features(self) -> np.ndarray:
        return np.array([s.condition.as_array() for s in self.samples])

    @property
    def delays(self) -> np.ndarray:
        return np.array([s.delay for s in self.samples], dtype=np.float64)

    @property
    def conditions(self) -> list[NetworkCondition]:
        return [s.condition for s in self.samples]

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices))


def normalize(cond: NetworkCondition, stats: NormStats) -> np.ndarray:
    return stats.apply(cond.as_array())


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded Fisher-Yates shuffle, then the first floor(n*fraction) rows train."""
    n = len(ds)
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction!r}")
    n_train = math.floor(n * train_fraction)
    if n_train < 1 or n_train >= n:
        raise DatasetError(
            f"train_fraction={train_fraction} on n={n} leaves an empty "
            f"{'train' if n_train < 1 else 'test'} side")
    rng = np.random.default_rng(seed)
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return ds.subset(order[:n_train]), ds.subset(order[n_train:])


def _read_rows(path: Path, columns: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [(i, line) for i, line in enumerate(fh, start=1)
                 if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise DatasetError(f"{path}: no header row")
    reader = csv.reader(line for _, line in lines)
    header = [h.strip() for h in next(reader)]
    if tuple(header) != tuple(columns):
        missing = [c for c in columns if c not in header]
        extra = [c for c in header if c not in columns]
        raise DatasetError(
            f"{path}: header must be {','.join(columns)}"
            + (f"; missing {missing}" if missing else "")
            + (f"; unexpected {extra}" if extra else ""))
    for (lineno, _), cells in zip(lines[1:], reader):
        if len(cells) != len(columns):
            raise DatasetError(f"{path}: row {lineno} has {len(cells)} cells, "
                               f"expected {len(columns)}")
        values = []
        for name, cell in zip(columns, cells):
            try:
                values.append(float(cell))
            except ValueError:
                raise DatasetError(f"{path}: non-numeric {name} {cell!r} "
                                   f"at row {lineno}") from None
        yield lineno, values


def _condition(values, where: str) -> NetworkCondition:
    try:
        return NetworkCondition(*values[:N_FEATURES])
    except DatasetError as exc:
        raise DatasetError(f"{exc} at {where}") from None


def load_csv(path) -> Dataset:
    """Read a labeled delay CSV (``loading,...,delay_ms``); row order is kept."""
    path = Path(path)
    samples = []
    for lineno, values in _read_rows(path, COLUMNS):
        cond = _condition(values, f"row {lineno}")
        if not (math.isfinite(values[-1]) and values[-1] > 0):
            raise DatasetError(f"delay must be > 0 at row {lineno}")
        samples.append(DelaySample(cond, values[-1]))
    if not samples:
        raise DatasetError(f"{path}: no data rows")
    return Dataset(tuple(samples))


def load_conditions_csv(path) -> list[NetworkCondition]:
    """Read an unlabeled conditions CSV (the dataset schema minus ``delay_ms``)."""
    path = Path(path)
    conds = [_condition(values, f"row {lineno}")
             for lineno, values in _read_rows(path, FEATURES)]
    if not conds:
        raise DatasetError(f"{path}: no data rows")
    return conds


def _row(cond: NetworkCondition) -> list[str]:
    return [fmt(cond.loading), fmt(cond.length), fmt(cond.contention),
            str(cond.devices), str(cond.plc_rungs)]


def save_csv(ds: Dataset, path, comment: str | None = None) -> None:
    with atomic_write(path) as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for s in ds.samples:
            w.writerow(_row(s.condition) + [fmt(s.delay)])


def save_conditions_csv(conds: Sequence[NetworkCondition], path) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURES)
        for c in conds:
            w.writerow(_row(c))
