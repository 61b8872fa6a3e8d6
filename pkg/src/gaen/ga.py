"""
Binary-chromosome genetic algorithm for predictor subset search.

An individual is a 0/1 vector over the P predictors. Fitness is a weighted
sum of the cross-validated relative RMSE of an elastic net restricted to the
selected predictors and the fraction of predictors selected; lower is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _cd
from .data import Dataset, FoldPlan, Scaling
from .errors import ConfigurationError, UndefinedMetricError
from .regress import DEFAULT_MAX_SWEEPS, DEFAULT_TOL, default_alphas


@dataclass
class Individual:
    bits: np.ndarray
    fitness: float | None = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)

    @property
    def P(self) -> int:
        return self.bits.shape[0]

    @property
    def key(self) -> bytes:
        return self.bits.tobytes()

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class FitnessWeights:
    """Relative importance of prediction error (``w_r``) and subset size."""

    w_r: float
    w_p: float

    def __post_init__(self):
        if self.w_r < 0 or self.w_p < 0:
            raise ConfigurationError("fitness weights must be non-negative")
        if not math.isclose(self.w_r + self.w_p, 1.0, abs_tol=1e-9):
            raise ConfigurationError(
                f"fitness weights must sum to 1, got {self.w_r} + {self.w_p}")

    @classmethod
    def normalized(cls, w_r, w_p) -> "FitnessWeights":
        s = w_r + w_p
        return cls(w_r / s, w_p / s)


# the four weight scenarios searched during tuning; w_r = 0 is left out
WEIGHT_SCENARIOS = (FitnessWeights(0.15, 0.85), FitnessWeights(0.5, 0.5),
                    FitnessWeights(0.85, 0.15), FitnessWeights(1.0, 0.0))


@dataclass(frozen=True)
class GAConfig:
    """GA settings.

    ``(n_best + n_random) / 2 * n_children`` must equal ``population_size``
    so every generation has the same size. ``inner_rho`` and
    ``inner_alphas`` define the elastic net used inside the fitness; the
    alpha with the lowest cross-validated error is used for each individual.
    """

    population_size: int = 50
    generations: int = 10
    n_best: int = 19
    n_random: int = 1
    n_children: int = 5
    mutation_rate: float = 0.05
    seed: int = 0
    inner_rho: float = 0.5
    inner_alphas: tuple = field(default_factory=lambda: default_alphas(5))

    def __post_init__(self):
        object.__setattr__(self, "inner_alphas",
                           tuple(float(a) for a in self.inner_alphas))
        pool = self.n_best + self.n_random
        if self.population_size < 1 or self.generations < 1:
            raise ConfigurationError("population_size and generations must "
                                     "be positive")
        if self.n_best < 0 or self.n_random < 0 or self.n_children < 1:
            raise ConfigurationError("invalid parent/children counts")
        if pool % 2 or pool == 0:
            raise ConfigurationError(
                f"n_best + n_random must be even and positive, got {pool}")
        if pool // 2 * self.n_children != self.population_size:
            raise ConfigurationError(
                f"({self.n_best} + {self.n_random}) / 2 * {self.n_children} "
                f"= {pool // 2 * self.n_children}, expected population_size "
                f"{self.population_size}")
        if pool > self.population_size:
            raise ConfigurationError("parent pool larger than population")
        if not 0 <= self.mutation_rate <= 1:
            raise ConfigurationError("mutation_rate must be in [0, 1]")
        if not 0 <= self.inner_rho <= 1 or not self.inner_alphas:
            raise ConfigurationError("invalid inner elastic net settings")

    def to_dict(self):
        d = dict(self.__dict__)
        d["inner_alphas"] = list(self.inner_alphas)
        return d


def fitness_value(w: FitnessWeights, r_rmse: float, n_selected: int,
                  P: int) -> float:
    """``w_r * clamp(r_rmse, 0, 1) + w_p * n_selected / P``."""
    return w.w_r * min(max(r_rmse, 0.0), 1.0) + w.w_p * n_selected / P


class FitnessFunction:
    """Fitness of predictor subsets on a fixed dataset and fold plan.

    Every fold's training and validation blocks are standardized once on
    the training rows; a subset just picks columns out of them. Results are
    memoised by bit pattern.
    """

    def __init__(self, d: Dataset, folds: FoldPlan, weights: FitnessWeights,
                 rho=0.5, alphas=None, tol=DEFAULT_TOL,
                 max_sweeps=DEFAULT_MAX_SWEEPS):
        if d.has_missing:
            raise ConfigurationError("impute missing values before the GA")
        if folds.n != d.n:
            raise ConfigurationError("fold plan does not match dataset")
        self.weights = weights
        self.P = d.P
        self.rho = float(rho)
        alphas = default_alphas(5) if alphas is None else alphas
        self.alphas = np.sort(np.asarray(alphas, dtype=float))[::-1].copy()
        self.tol, self.max_sweeps = float(tol), int(max_sweeps)
        self.y_bar = abs(d.y_mean)
        if self.y_bar == 0:
            raise UndefinedMetricError("response mean is zero; relative RMSE "
                                       "is undefined")
        self._folds = []
        for tr, va in folds.splits():
            sc = Scaling.fit(d.predictors[tr])
            self._folds.append((np.asfortranarray(sc.transform(d.predictors[tr])),
                                d.response[tr].copy(),
                                np.asfortranarray(sc.transform(d.predictors[va])),
                                d.response[va].copy()))
        self._cache: dict[bytes, tuple[float, float]] = {}

    def relative_error(self, bits) -> float:
        """Cross-validated RMSE divided by the response mean, unclamped."""
        return self._lookup(bits)[0]

    def __call__(self, bits) -> float:
        return self._lookup(bits)[1]

    def _lookup(self, bits):
        bits = np.asarray(bits, dtype=np.uint8)
        key = bits.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            r = self._cv_rmse(np.flatnonzero(bits)) / self.y_bar
            fit = fitness_value(self.weights, r, int(bits.sum()), self.P)
            hit = self._cache[key] = (float(r), float(fit))
        return hit

    def _cv_rmse(self, cols) -> float:
        if cols.size == 0:
            return float(np.mean([np.sqrt(np.mean((yva - ytr.mean()) ** 2))
                                  for _, ytr, _, yva in self._folds]))
        total = np.zeros(self.alphas.size)
        for Xtr, ytr, Xva, yva in self._folds:
            total += _cd.path_rmse(np.asfortranarray(Xtr[:, cols]), ytr,
                                   np.ascontiguousarray(Xva[:, cols]), yva,
                                   self.alphas, self.rho, self.tol,
                                   self.max_sweeps)
        return float(total.min() / len(self._folds))


def make_fitness(d, folds, weights, cfg: GAConfig | None = None):
    cfg = cfg or GAConfig()
    return FitnessFunction(d, folds, weights, cfg.inner_rho, cfg.inner_alphas)


def evaluate_fitness(ind: Individual, d: Dataset, folds: FoldPlan,
                     w: FitnessWeights, cfg: GAConfig | None = None) -> float:
    """Score one individual; stores the result on ``ind`` as well."""
    ind.fitness = make_fitness(d, folds, w, cfg)(ind.bits)
    return ind.fitness


# -- operators ----------------------------------------------------------------

def init_population(P: int, cfg: GAConfig, rng=None) -> list[Individual]:
    """Uniform random bit strings; all-zero strings are redrawn."""
    if P < 1:
        raise ConfigurationError("P must be at least 1")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    pop = []
    for _ in range(cfg.population_size):
        bits = rng.integers(0, 2, P, dtype=np.uint8)
        while not bits.any():
            bits = rng.integers(0, 2, P, dtype=np.uint8)
        pop.append(Individual(bits))
    return pop


def rank(pop: list[Individual]) -> list[Individual]:
    """Sort by ascending fitness; ties keep population order."""
    return [pop[i] for i in np.argsort([p.fitness for p in pop], kind="stable")]


def select_parents(pop: list[Individual], cfg: GAConfig, rng) -> list[Individual]:
    """The ``n_best`` fittest plus ``n_random`` others, in shuffled order."""
    ranked = rank(pop)
    pool = ranked[:cfg.n_best]
    rest = ranked[cfg.n_best:]
    if cfg.n_random:
        picks = rng.choice(len(rest), size=min(cfg.n_random, len(rest)),
                           replace=False)
        pool += [rest[i] for i in picks]
    return [pool[i] for i in rng.permutation(len(pool))]


def crossover_single_point(a: Individual, b: Individual, rng) -> Individual:
    """Child takes ``a`` up to a random cut and ``b`` after it."""
    if a.P != b.P:
        raise ValueError("parents differ in length")
    if a.P == 1:
        return Individual((a, b)[rng.integers(2)].bits.copy())
    cut = int(rng.integers(1, a.P))
    return Individual(np.concatenate([a.bits[:cut], b.bits[cut:]]))


def mutate(ind: Individual, rate: float, rng) -> Individual:
    """Flip each bit independently with probability ``rate``."""
    if not 0 <= rate <= 1:
        raise ValueError("rate must be in [0, 1]")
    flip = rng.random(ind.P) < rate
    return Individual(ind.bits ^ flip.astype(np.uint8))


def next_generation(pop, fitness, cfg: GAConfig, rng) -> list[Individual]:
    """Breed a full replacement population and score it.

    All random draws happen before any child is scored, so the result does
    not depend on how scoring is scheduled.
    """
    pool = select_parents(pop, cfg, rng)
    children = []
    for i in range(0, len(pool), 2):
        a, b = pool[i], pool[i + 1]
        for _ in range(cfg.n_children):
            children.append(mutate(crossover_single_point(a, b, rng),
                                   cfg.mutation_rate, rng))
    for c in children:
        c.fitness = fitness(c.bits)
    return children


@dataclass
class GAResult:
    best: Individual
    history: list[float]
    trace: list[dict]

    def __iter__(self):
        return iter((self.best, self.history))


def run_ga(d: Dataset, folds: FoldPlan, w: FitnessWeights,
           cfg: GAConfig = GAConfig(), fitness=None) -> GAResult:
    """Evolve ``cfg.generations`` generations and return the best child seen.

    ``history[g]`` is the best fitness within generation ``g + 1``; the
    initial random population only serves as the first parent pool.
    """
    rng = np.random.default_rng(cfg.seed)
    if fitness is None:
        fitness = make_fitness(d, folds, w, cfg)
    pop = init_population(d.P, cfg, rng)
    for ind in pop:
        ind.fitness = fitness(ind.bits)
    best = None
    history, trace = [], []
    for g in range(1, cfg.generations + 1):
        pop = next_generation(pop, fitness, cfg, rng)
        gen_best = rank(pop)[0]
        if best is None or gen_best.fitness < best.fitness:
            best = Individual(gen_best.bits.copy(), gen_best.fitness)
        history.append(gen_best.fitness)
        trace.append({"gen": g, "population_size": len(pop),
                      "best_fitness": gen_best.fitness,
                      "best_so_far": best.fitness,
                      "mean_fitness": float(np.mean([p.fitness for p in pop])),
                      "best_bits": gen_best.bitstring()})
    return GAResult(best, history, trace)
