"""Real-coded genetic algorithm that tunes the GRNN smoothing parameter.

Genes are sigma values. Fitness is 1 / MAPE, scored by leave-one-out on the
training set or on a held-out validation slice.

Random draws all come from one ``numpy.random.default_rng(cfg.seed)``, in
this order:

1. initial population: one ``uniform(log lo, log hi, (pop, genes))`` call;
2. per generation, per offspring pair:
   tournament A indices, tournament B indices, crossover coin,
   blend uniforms ``(2, genes)`` (only when the coin says cross),
   then for child A and child B in turn: mutation coins ``(genes,)`` and
   gaussian noise ``(genes,)``.

Fitness evaluation draws nothing, so it may run in parallel.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._io import atomic_write, fmt
from .dataset import N_FEATURES, Dataset, split
from .grnn import SIGMA_MAX, SIGMA_MIN, GrnnModel, Sigma, fit, loo_estimates, _predict_z
from .metrics import fitness, mape

SIGMA_MODES = ("isotropic", "per-feature")
FITNESS_PROTOCOLS = ("leave-one-out", "holdout")
HISTORY_COLUMNS = ("generation", "best_fitness", "mean_fitness", "best_mape")


class GaError(ValueError):
    pass


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 30
    generations: int = 100
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    mutation_scale: float = 0.1
    tournament_size: int = 2
    elitism_count: int = 1
    seed: int = 0
    sigma_mode: str = "isotropic"
    fitness_protocol: str = "leave-one-out"
    # fraction of the training rows kept for fitting under the holdout protocol
    holdout_fraction: float = 0.7
    blend_alpha: float = 0.5
    sigma_min: float = SIGMA_MIN
    sigma_max: float = SIGMA_MAX
    # stop after this many generations without a best-fitness gain > 1e-12
    early_stop: Optional[int] = None

    def __post_init__(self):
        def bad(msg):
            raise GaError(msg)

        if self.population_size < 2:
            bad("population_size must be >= 2")
        if self.generations < 1:
            bad("generations must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                bad(f"{name} must be in [0, 1]")
        if not (self.mutation_scale >= 0 and self.blend_alpha >= 0):
            bad("mutation_scale and blend_alpha must be >= 0")
        if self.tournament_size < 2:
            bad("tournament_size must be >= 2")
        if not 0 <= self.elitism_count < self.population_size:
            bad("elitism_count must be in [0, population_size)")
        if self.sigma_mode not in SIGMA_MODES:
            bad(f"sigma_mode must be one of {SIGMA_MODES}")
        if self.fitness_protocol not in FITNESS_PROTOCOLS:
            bad(f"fitness_protocol must be one of {FITNESS_PROTOCOLS}")
        if not 0 < self.holdout_fraction < 1:
            bad("holdout_fraction must be in (0, 1)")
        if not SIGMA_MIN <= self.sigma_min <= self.sigma_max <= SIGMA_MAX:
            bad(f"sigma bounds must satisfy {SIGMA_MIN:g} <= min <= max <= {SIGMA_MAX:g}")
        if self.early_stop is not None and self.early_stop < 1:
            bad("early_stop must be >= 1 or None")

    @property
    def n_genes(self) -> int:
        return 1 if self.sigma_mode == "isotropic" else N_FEATURES

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_mape: float


@dataclass(frozen=True)
class PopulationLog:
    genes: np.ndarray
    fitness: np.ndarray
    mape: np.ndarray


@dataclass(frozen=True)
class GaResult:
    best_sigma: Sigma
    best_fitness: float
    best_mape: float
    history: tuple[GenerationStats, ...]
    populations: tuple[PopulationLog, ...] = field(default=(), repr=False)

    def write_history(self, path) -> None:
        with atomic_write(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_COLUMNS)
            for h in self.history:
                w.writerow([h.generation, fmt(h.best_fitness), fmt(h.mean_fitness),
                            fmt(h.best_mape)])


def clamp(genes: np.ndarray, cfg: GaConfig) -> np.ndarray:
    return np.clip(genes, cfg.sigma_min, cfg.sigma_max)


def init_population(cfg: GaConfig, rng: np.random.Generator | None = None) -> list[np.ndarray]:
    """Log-uniform genes over the sigma box."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    lo, hi = math.log(cfg.sigma_min), math.log(cfg.sigma_max)
    genes = clamp(np.exp(rng.uniform(lo, hi, size=(cfg.population_size, cfg.n_genes))), cfg)
    return list(genes)


class _Scorer:
    """Caches the fitted base model so each chromosome only swaps sigma."""

    def __init__(self, train: Dataset, cfg: GaConfig):
        placeholder = Sigma.isotropic(cfg.sigma_max)
        if cfg.fitness_protocol == "leave-one-out":
            if len(train) < 2:
                raise GaError("leave-one-out fitness needs at least 2 training samples")
            self.model = fit(train, placeholder)
            self.actual = self.model.targets
            self.queries = None
        else:
            try:
                fit_side, val_side = split(train, cfg.holdout_fraction, cfg.seed)
            except ValueError as exc:
                raise GaError(f"holdout fitness: {exc}") from None
            self.model = fit(fit_side, placeholder)
            self.actual = val_side.delays
            self.queries = self.model.norm_stats.apply(val_side.features)

    def __call__(self, genes: np.ndarray) -> tuple[float, float]:
        model = self.model.with_sigma(Sigma(tuple(genes)))
        if self.queries is None:
            predicted = loo_estimates(model)
        else:
            predicted = _predict_z(model, self.queries)
        err = mape(self.actual, predicted)
        return fitness(err), err


def evaluate_fitness(chrom, train: Dataset, cfg: GaConfig) -> tuple[float, float]:
    """Return ``(1 / MAPE, MAPE)`` for one chromosome under ``cfg.fitness_protocol``."""
    return _Scorer(train, cfg)(np.asarray(chrom, dtype=np.float64))


def select_parents(population, fitnesses, rng: np.random.Generator,
                   tournament_size: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Two independent tournaments, sampled with replacement.

    The winner is the sampled individual with the highest fitness; ties go to
    the lowest population index.
    """
    f = np.asarray(fitnesses, dtype=np.float64)

    def tournament():
        picks = np.unique(rng.integers(0, len(population), size=tournament_size))
        return population[picks[np.argmax(f[picks])]]

    a = tournament()
    return a, tournament()


def crossover(a, b, rng: np.random.Generator, cfg: GaConfig) -> tuple[np.ndarray, np.ndarray]:
    """BLX-alpha blend with probability ``crossover_rate``, else copies."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise GaError("parents must have the same number of genes")
    if rng.random() >= cfg.crossover_rate:
        return a.copy(), b.copy()
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    reach = cfg.blend_alpha * (hi - lo)
    lo, width = lo - reach, (hi - lo) + 2 * reach
    u = rng.random((2, a.size))
    return clamp(lo + u[0] * width, cfg), clamp(lo + u[1] * width, cfg)


def mutate(c, rng: np.random.Generator, cfg: GaConfig) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    hit = rng.random(c.size) < cfg.mutation_rate
    noise = rng.normal(0.0, cfg.mutation_scale * (cfg.sigma_max - cfg.sigma_min), c.size)
    return clamp(np.where(hit, c + noise, c), cfg)


def run(train: Dataset, cfg: GaConfig, *, workers: int = 1,
        log_populations: bool = False) -> GaResult:
    """Evolve for ``cfg.generations`` generations and return the best-ever sigma.

    ``workers > 1`` scores chromosomes on a thread pool; results are identical
    to the sequential run.
    """
    scorer = _Scorer(train, cfg)
    rng = np.random.default_rng(cfg.seed)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def score(pop):
        results = list(pool.map(scorer, pop) if pool else map(scorer, pop))
        return (np.array([r[0] for r in results]), np.array([r[1] for r in results]))

    try:
        population = init_population(cfg, rng)
        fit_vals, mape_vals = score(population)
        best_i = int(np.argmax(fit_vals))
        best = (population[best_i].copy(), fit_vals[best_i], mape_vals[best_i])
        history, logs, stale = [], [], 0
        for gen in range(1, cfg.generations + 1):
            order = np.argsort(-fit_vals, kind="stable")
            nxt = [population[i].copy() for i in order[:cfg.elitism_count]]
            while len(nxt) < cfg.population_size:
                pa, pb = select_parents(population, fit_vals, rng, cfg.tournament_size)
                ca, cb = crossover(pa, pb, rng, cfg)
                nxt.append(mutate(ca, rng, cfg))
                mb = mutate(cb, rng, cfg)
                if len(nxt) < cfg.population_size:
                    nxt.append(mb)
            population = nxt
            fit_vals, mape_vals = score(population)
            i = int(np.argmax(fit_vals))
            history.append(GenerationStats(gen, float(fit_vals[i]),
                                           float(np.mean(fit_vals)), float(mape_vals[i])))
            if log_populations:
                logs.append(PopulationLog(np.array(population), fit_vals, mape_vals))
            gain = fit_vals[i] - best[1] if fit_vals[i] > best[1] else 0.0
            if fit_vals[i] > best[1]:
                best = (population[i].copy(), fit_vals[i], mape_vals[i])
            stale = 0 if gain > 1e-12 else stale + 1
            if cfg.early_stop is not None and stale >= cfg.early_stop:
                break
    finally:
        if pool:
            pool.shutdown()
    return GaResult(Sigma(tuple(best[0])), float(best[1]), float(best[2]),
                    tuple(history), tuple(logs))
