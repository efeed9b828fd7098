"""Synthetic Modbus round-trip delay traces.

Stand-in for testbed measurements. The noiseless delay surface is

    base + prop * length + contention_gain * (contention - 1)
         + device_gain * devices + rung_gain * plc_rungs
         + base * (loading / (1 - loading)) ** load_exponent

and each sample is multiplied by lognormal noise with unit median.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, DelaySample, NetworkCondition

LOADING_CEILING = 0.95


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureRanges:
    loading: tuple[float, float] = (0.05, 0.9)
    length: tuple[float, float] = (10.0, 500.0)
    contention: tuple[float, float] = (1.0, 8.0)
    devices: tuple[int, int] = (1, 32)
    plc_rungs: tuple[int, int] = (0, 200)


@dataclass(frozen=True)
class GenConfig:
    n_samples: int = 200
    seed: int = 0
    base_delay_ms: float = 5.0
    propagation_ms_per_m: float = 0.004
    load_exponent: float = 2.0
    contention_gain_ms: float = 1.5
    device_gain_ms: float = 0.25
    rung_gain_ms: float = 0.02
    noise_cv: float = 0.08
    ranges: FeatureRanges = field(default_factory=FeatureRanges)

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigError(f"n_samples must be an integer >= 1, got {self.n_samples!r}")
        for name in ("base_delay_ms", "propagation_ms_per_m", "contention_gain_ms",
                     "device_gain_ms", "rung_gain_ms"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not (math.isfinite(self.load_exponent) and self.load_exponent > 1):
            raise ConfigError(f"load_exponent must be > 1, got {self.load_exponent!r}")
        if not 0 <= self.noise_cv < 1:
            raise ConfigError(f"noise_cv must be in [0, 1), got {self.noise_cv!r}")
        r = self.ranges
        lo, hi = r.loading
        if not 0 <= lo <= hi <= LOADING_CEILING:
            raise ConfigError(
                f"loading range [{lo}, {hi}] must lie within [0, {LOADING_CEILING}] "
                f"(loading < {LOADING_CEILING} keeps the queuing term finite)")
        if not 0 < r.length[0] <= r.length[1]:
            raise ConfigError(f"length range {r.length} must be positive and ordered")
        if not 1 <= r.contention[0] <= r.contention[1]:
            raise ConfigError(f"contention range {r.contention} must be >= 1 and ordered")
        for name, floor in (("devices", 1), ("plc_rungs", 0)):
            a, b = getattr(r, name)
            if a != int(a) or b != int(b) or not floor <= a <= b:
                raise ConfigError(f"{name} range ({a}, {b}) must be integers >= {floor}, ordered")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def delay_surface(loading, length, contention, devices, plc_rungs, cfg: GenConfig):
    """Noiseless mean delay in ms; broadcasts over numpy arrays."""
    loading = np.asarray(loading, dtype=np.float64)
    if np.any(loading >= 1):
        raise ConfigError("loading must be < 1")
    queue = (loading / (1.0 - loading)) ** cfg.load_exponent
    return (cfg.base_delay_ms
            + cfg.propagation_ms_per_m * np.asarray(length, dtype=np.float64)
            + cfg.contention_gain_ms * (np.asarray(contention, dtype=np.float64) - 1.0)
            + cfg.device_gain_ms * np.asarray(devices, dtype=np.float64)
            + cfg.rung_gain_ms * np.asarray(plc_rungs, dtype=np.float64)
            + cfg.base_delay_ms * queue)


def mean_delay(cond: NetworkCondition, cfg: GenConfig) -> float:
    # 1-element arrays: the same numpy code path as ``generate`` uses
    x = cond.as_array()[:, None]
    return float(delay_surface(*x, cfg)[0])


def noise_log_std(cv: float) -> float:
    """Log-space std of a lognormal with the given coefficient of variation."""
    return math.sqrt(math.log1p(cv * cv))


def generate(cfg: GenConfig) -> Dataset:
    """Draw ``cfg.n_samples`` rows.

    Draw order from ``default_rng(seed)``, each a length-n vector: loading,
    length, contention (uniform), devices, plc_rungs (uniform integers,
    inclusive), then standard normals for the noise.
    """
    n, r = cfg.n_samples, cfg.ranges
    rng = np.random.default_rng(cfg.seed)
    loading = rng.uniform(*r.loading, size=n)
    length = rng.uniform(*r.length, size=n)
    contention = rng.uniform(*r.contention, size=n)
    devices = rng.integers(r.devices[0], r.devices[1] + 1, size=n)
    rungs = rng.integers(r.plc_rungs[0], r.plc_rungs[1] + 1, size=n)
    z = rng.standard_normal(size=n)
    mean = delay_surface(loading, length, contention, devices, rungs, cfg)
    delay = mean if cfg.noise_cv == 0 else mean * np.exp(noise_log_std(cfg.noise_cv) * z)
    return Dataset(tuple(
        DelaySample(NetworkCondition(float(a), float(b), float(c), int(d), int(e)), float(y))
        for a, b, c, d, e, y in zip(loading, length, contention, devices, rungs, delay)))


def header_comment(cfg: GenConfig) -> str:
    return f"synthetic trace, seed={cfg.seed}"


_RANGE_KEYS = {f"{name}_{end}": (name, i)
               for name in ("loading", "length", "contention", "devices", "plc_rungs")
               for i, end in enumerate(("min", "max"))}
_INT_FIELDS = {"n_samples", "seed"}


def from_mapping(values: dict, base: GenConfig | None = None) -> GenConfig:
    """Build a config from flat keys (``noise_cv``, ``loading_max``, ...)."""
    base = base or GenConfig()
    top = {f.name for f in dataclasses.fields(GenConfig)} - {"ranges"}
    kwargs, ranges = {}, dataclasses.asdict(base.ranges)
    for key, raw in values.items():
        key = key.replace("-", "_")
        try:
            if key in top:
                kwargs[key] = int(raw) if key in _INT_FIELDS else float(raw)
            elif key in _RANGE_KEYS:
                name, i = _RANGE_KEYS[key]
                pair = list(ranges[name])
                pair[i] = int(raw) if name in ("devices", "plc_rungs") else float(raw)
                ranges[name] = tuple(pair)
            else:
                raise ConfigError(f"unknown generator setting {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return dataclasses.replace(base, ranges=FeatureRanges(**ranges), **kwargs)


def read_config(path) -> GenConfig:
    """Parse a plain ``key=value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return from_mapping(values)
