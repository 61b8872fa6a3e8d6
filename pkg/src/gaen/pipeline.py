"""
Two-layer GA + elastic net selection, its baselines, and nested CV.

Layer 1 runs the GA several times on the training data and keeps the
predictors that appear in at least a fraction ``fsp`` of the per-run best
individuals. Layer 2 tunes and fits an elastic net on that subset.

Every method is scored by an outer k-fold loop: everything (standardization,
GA, tuning) sees only the outer-training rows, and the held-out fold is used
for the error only. Missing predictors are imputed once on the full data
before the loop, which leaks the validation rows' predictors (not their
response) into the imputation regressions.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, FoldPlan, impute_missing, kfold_split
from .errors import ConfigurationError, FoldError, UndefinedMetricError
from .ga import (GAConfig, FitnessWeights, Individual, WEIGHT_SCENARIOS,
                 run_ga)
from .regress import (ElasticNetModel, TuneGrid, fit_elastic_net,
                      fit_min_norm_ols, predict, tune_elastic_net)

METHODS = ("GA-EN", "EN", "GA-Lr")
FSP_GRID = (0.3, 0.5, 0.7)


def canonical_method(name: str) -> str:
    for m in METHODS:
        if name.lower() == m.lower():
            return m
    raise ConfigurationError(f"unknown method {name!r}; expected one of "
                             f"{', '.join(METHODS)}")


def derive_seed(master: int, *path: int) -> int:
    """Independent 32-bit seed for the stream named by ``path``.

    Streams are addressed by position, so adding new consumers never shifts
    the seeds handed to existing ones.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1)[0])


# stream tags for derive_seed
_OUTER, _GA, _GA_FOLDS, _TUNE, _GRID = range(5)


@dataclass(frozen=True)
class PipelineConfig:
    # a frequent winner of the weights and FSP grid search (see grid_tune)
    weights: FitnessWeights = FitnessWeights(0.85, 0.15)
    fsp: float = 0.3
    n_ga_iterations: int = 5
    ga: GAConfig = field(default_factory=GAConfig)
    grid: TuneGrid = field(default_factory=TuneGrid)
    outer_k: int = 3
    inner_k: int = 3
    seed: int = 0
    # choose weights and fsp by grid search inside every outer-training set
    tune_inside: bool = False

    def __post_init__(self):
        if not 0 < self.fsp <= 1:
            raise ConfigurationError(f"fsp must be in (0, 1], got {self.fsp}")
        if self.n_ga_iterations < 1:
            raise ConfigurationError("n_ga_iterations must be positive")
        if self.outer_k < 2 or self.inner_k < 2:
            raise ConfigurationError("fold counts must be at least 2")

    def to_dict(self) -> dict:
        return {"weights": {"w_r": self.weights.w_r, "w_p": self.weights.w_p},
                "fsp": self.fsp, "n_ga_iterations": self.n_ga_iterations,
                "ga": self.ga.to_dict(), "grid": self.grid.to_dict(),
                "outer_k": self.outer_k, "inner_k": self.inner_k,
                "seed": self.seed, "tune_inside": self.tune_inside}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        kw = {}
        if "weights" in d:
            w = d.pop("weights")
            kw["weights"] = (FitnessWeights(w["w_r"], w["w_p"])
                             if isinstance(w, dict) else FitnessWeights(*w))
        if "ga" in d:
            kw["ga"] = GAConfig(**d.pop("ga"))
        if "grid" in d:
            kw["grid"] = TuneGrid(**d.pop("grid"))
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kw, **d)


# -- metrics ------------------------------------------------------------------

def rmse_cv(actuals, predictions) -> float:
    """Mean over folds of the per-fold root mean squared error."""
    if len(actuals) == 0 or len(actuals) != len(predictions):
        raise ValueError("need matching, non-empty fold lists")
    out = []
    for a, p in zip(actuals, predictions):
        a, p = np.asarray(a, float), np.asarray(p, float)
        if a.size == 0 or a.shape != p.shape:
            raise ValueError("empty fold or misaligned predictions")
        out.append(math.sqrt(np.mean((a - p) ** 2)))
    return float(np.mean(out))


def relative_rmse_cv(rmse: float, y_bar: float) -> float:
    """``rmse / y_bar``; may exceed 1 and is never clamped."""
    if y_bar == 0:
        raise UndefinedMetricError("response mean is zero so relative RMSE is "
                                   "undefined; report the absolute RMSE")
    return rmse / y_bar


# -- layer 1 ------------------------------------------------------------------

def fsp_subset(counts, n_iter: int, fsp: float):
    """Predictors with ``count / n_iter >= fsp``.

    If none qualify, all predictors with the maximal count are kept instead.
    Returns ``(subset, relaxed)``.
    """
    counts = np.asarray(counts)
    # integer comparison avoids 0.6 * 5 style rounding at the boundary
    need = math.ceil(round(fsp * n_iter, 9))
    subset = np.flatnonzero(counts >= need)
    if subset.size:
        return tuple(int(j) for j in subset), False
    top = counts.max()
    if top == 0:
        return tuple(range(counts.size)), True
    return tuple(int(j) for j in np.flatnonzero(counts == top)), True


@dataclass
class Layer1Result:
    per_iteration_best: list
    counts: np.ndarray
    fsp: float
    final_subset: tuple
    relaxed: bool = False
    traces: list = field(default_factory=list)

    def with_fsp(self, fsp: float) -> "Layer1Result":
        subset, relaxed = fsp_subset(self.counts, len(self.per_iteration_best),
                                     fsp)
        return replace(self, fsp=fsp, final_subset=subset, relaxed=relaxed)

    def to_dict(self) -> dict:
        return {"fsp": self.fsp, "counts": self.counts.tolist(),
                "final_subset": list(self.final_subset),
                "relaxed": self.relaxed,
                "per_iteration_best": [b.bitstring()
                                       for b in self.per_iteration_best],
                "per_iteration_fitness": [b.fitness
                                          for b in self.per_iteration_best]}


def _ga_job(args):
    train, weights, ga_cfg, inner_k, folds_seed = args
    folds = kfold_split(train.n, inner_k, folds_seed)
    return run_ga(train, folds, weights, ga_cfg)


def _pmap(fn, jobs, n_jobs):
    if n_jobs is None or n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(n_jobs, len(jobs))) as ex:
        return list(ex.map(fn, jobs))


def _layer1_jobs(train, cfg, weights, key):
    return [(train, weights,
             replace(cfg.ga, seed=derive_seed(cfg.seed, _GA, *key, i)),
             cfg.inner_k, derive_seed(cfg.seed, _GA_FOLDS, *key, i))
            for i in range(cfg.n_ga_iterations)]


def _assemble_layer1(results, P, fsp):
    bests = [r.best for r in results]
    counts = np.sum([b.bits for b in bests], axis=0).astype(np.int64)
    subset, relaxed = fsp_subset(counts, len(bests), fsp)
    return Layer1Result(bests, counts, fsp, subset, relaxed,
                        [r.trace for r in results])


def run_layer1(train: Dataset, cfg: PipelineConfig, weights=None, key=(),
               n_jobs=1) -> Layer1Result:
    """Repeat the GA ``cfg.n_ga_iterations`` times and apply the FSP rule.

    ``key`` distinguishes the seed streams of different callers (the outer
    fold index in nested evaluation).
    """
    weights = cfg.weights if weights is None else weights
    jobs = _layer1_jobs(train, cfg, weights, key)
    return _assemble_layer1(_pmap(_ga_job, jobs, n_jobs), train.P, cfg.fsp)


def _layer1_many(datasets_keys, cfg, weights, n_jobs):
    """Layer 1 for several training sets, sharing one worker pool."""
    jobs, spans = [], []
    for train, key in datasets_keys:
        j = _layer1_jobs(train, cfg, weights, key)
        spans.append((len(jobs), len(jobs) + len(j), train.P))
        jobs += j
    res = _pmap(_ga_job, jobs, n_jobs)
    return [_assemble_layer1(res[a:b], P, cfg.fsp) for a, b, P in spans]


# -- layer 2 ------------------------------------------------------------------

def run_layer2(train: Dataset, grid: TuneGrid = TuneGrid(),
               seed: int = 0) -> ElasticNetModel:
    """Tune ``(alpha, rho)`` by CV on ``train`` and refit on all of it."""
    hyper, _ = tune_elastic_net(train.predictors, train.response, grid, seed)
    return fit_elastic_net(train.predictors, train.response, hyper,
                           standardize=True)


# -- nested evaluation --------------------------------------------------------

@dataclass
class FoldOutcome:
    fold: int
    selected_count: int
    rmse: float
    relative_rmse: float
    selected: tuple = ()
    layer1_count: int | None = None
    alpha: float | None = None
    rho: float | None = None
    w_r: float | None = None
    fsp: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__, selected=list(self.selected))


@dataclass
class EvalResult:
    method: str
    relative_rmse_cv: float
    rmse_cv: float
    mean_final_predictors: float
    y_bar: float
    per_fold: list
    fsp: float | None = None
    weights: FitnessWeights | None = None
    layer1: list = field(default_factory=list)

    @property
    def traces(self) -> list:
        """GA traces as ``(fold, iteration, records)`` triples."""
        return [(f, i, t) for f, l1 in enumerate(self.layer1)
                for i, t in enumerate(l1.traces)]

    def to_dict(self) -> dict:
        d = {"method": self.method,
             "relative_rmse_cv": self.relative_rmse_cv,
             "rmse_cv": self.rmse_cv,
             "mean_final_predictors": self.mean_final_predictors,
             "y_bar": self.y_bar,
             "per_fold": [f.to_dict() for f in self.per_fold]}
        if self.fsp is not None:
            d["fsp"] = self.fsp
        if self.weights is not None:
            d["weights"] = {"w_r": self.weights.w_r, "w_p": self.weights.w_p}
        if self.layer1:
            d["layer1"] = [l1.to_dict() for l1 in self.layer1]
        return d


def _prepare(d: Dataset) -> Dataset:
    return impute_missing(d) if d.has_missing else d


def outer_folds(d: Dataset, cfg: PipelineConfig) -> FoldPlan:
    if d.n < cfg.outer_k:
        raise ConfigurationError(f"{d.n} observations cannot form "
                                 f"{cfg.outer_k} outer folds")
    return kfold_split(d.n, cfg.outer_k, derive_seed(cfg.seed, _OUTER))


def _finish_fold(method, f, train, val, cfg, layer1, y_bar):
    tune_seed = derive_seed(cfg.seed, _TUNE, f)
    l1_count = None
    if method == "EN":
        model = run_layer2(train, cfg.grid, tune_seed)
        cols = np.arange(train.P)
        selected = model.selected
    else:
        cols = np.asarray(layer1.final_subset, dtype=np.int64)
        l1_count = len(cols)
        sub = train.columns(cols)
        if method == "GA-EN":
            model = run_layer2(sub, cfg.grid, tune_seed)
            selected = model.selected
        else:
            model = fit_min_norm_ols(sub.predictors, sub.response,
                                     fit_intercept=True, standardize=True)
            selected = tuple(range(len(cols)))
    pred = predict(model, val.predictors[:, cols])
    err = rmse_cv([val.response], [pred])
    return FoldOutcome(
        fold=f, selected_count=len(selected), rmse=err,
        relative_rmse=relative_rmse_cv(err, y_bar),
        selected=tuple(int(cols[j]) for j in selected),
        layer1_count=l1_count,
        alpha=None if method == "GA-Lr" else model.hyper.alpha,
        rho=None if method == "GA-Lr" else model.hyper.rho,
        w_r=None if method == "EN" else cfg.weights.w_r,
        fsp=None if method == "EN" else layer1.fsp)


def _aggregate(method, outcomes, y_bar, **extra) -> EvalResult:
    r = float(np.mean([o.rmse for o in outcomes]))
    return EvalResult(
        method=method, relative_rmse_cv=relative_rmse_cv(r, y_bar), rmse_cv=r,
        mean_final_predictors=float(np.mean([o.selected_count
                                             for o in outcomes])),
        y_bar=y_bar, per_fold=list(outcomes), **extra)


def _tuned_inside(train, cfg, f, n_jobs):
    inner = replace(cfg, tune_inside=False,
                    seed=derive_seed(cfg.seed, _GRID, f))
    res = grid_tune(train, inner, n_jobs=n_jobs)
    return replace(cfg, weights=res.weights, fsp=res.fsp)


def _fold_layer1(d, splits, cfg, n_jobs):
    """Per-fold configs and layer-1 results for the GA-based methods."""
    if not cfg.tune_inside:
        layer1 = _layer1_many([(d.rows(tr), (f,))
                               for f, (tr, _) in enumerate(splits)],
                              cfg, cfg.weights, n_jobs)
        return [cfg] * len(splits), layer1
    cfgs = [_tuned_inside(d.rows(tr), cfg, f, n_jobs)
            for f, (tr, _) in enumerate(splits)]
    layer1 = [run_layer1(d.rows(tr), c, key=(f,), n_jobs=n_jobs)
              for f, ((tr, _), c) in enumerate(zip(splits, cfgs))]
    return cfgs, layer1


def nested_cv_evaluate(d: Dataset, cfg: PipelineConfig, method: str = "GA-EN",
                       *, folds: FoldPlan | None = None, n_jobs: int = 1,
                       layer1=None, fold_configs=None) -> EvalResult:
    """Outer k-fold estimate of one method's relative RMSE_CV.

    Parameters
    ----------
    method : {"GA-EN", "EN", "GA-Lr"}
    folds : FoldPlan, optional
        Outer folds; derived from ``cfg.seed`` when omitted.
    layer1 : list of Layer1Result, optional
        Precomputed layer-1 results, one per outer fold.
    fold_configs : list of PipelineConfig, optional
        Per-fold configurations that produced ``layer1`` (when weights and
        FSP were tuned inside each fold).
    """
    method = canonical_method(method)
    d = _prepare(d)
    folds = outer_folds(d, cfg) if folds is None else folds
    y_bar = d.y_mean
    relative_rmse_cv(1.0, y_bar)  # fail early on a zero mean
    splits = list(folds.splits())
    cfgs = [cfg] * folds.k
    if method != "EN":
        if layer1 is None:
            cfgs, layer1 = _fold_layer1(d, splits, cfg, n_jobs)
        elif fold_configs is not None:
            cfgs = list(fold_configs)
    outcomes = []
    for f, (tr, va) in enumerate(splits):
        try:
            outcomes.append(_finish_fold(method, f, d.rows(tr), d.rows(va),
                                         cfgs[f],
                                         None if layer1 is None else layer1[f],
                                         y_bar))
        except Exception as exc:
            raise FoldError(f, exc) from exc
    extra = {}
    if method != "EN":
        extra = {"layer1": list(layer1), "fsp": cfg.fsp,
                 "weights": cfg.weights}
    return _aggregate(method, outcomes, y_bar, **extra)


# -- tuning of weights and FSP -----------------------------------------------

@dataclass
class GridTuneResult:
    weights: FitnessWeights
    fsp: float
    result: EvalResult
    cells: list

    def cells_table(self) -> list[dict]:
        return [{"scenario": s, "w_r": w.w_r, "w_p": w.w_p, "fsp": fsp,
                 "relative_rmse_cv": r.relative_rmse_cv}
                for s, w, fsp, r in self.cells]


def grid_tune(d: Dataset, base: PipelineConfig,
              scenarios=WEIGHT_SCENARIOS, fsps=FSP_GRID, *,
              folds: FoldPlan | None = None, n_jobs: int = 1) -> GridTuneResult:
    """Nested-CV GA-EN score for every (weights, fsp) cell; keep the best.

    The GA does not depend on ``fsp``, so layer 1 runs once per weight
    scenario and the FSP rule is re-applied to its counts. Ties go to the
    larger ``w_p`` and then the larger ``fsp``.
    """
    d = _prepare(d)
    folds = outer_folds(d, base) if folds is None else folds
    splits = list(folds.splits())
    cells = []
    for s, w in enumerate(scenarios, start=1):
        l1 = _layer1_many([(d.rows(tr), (f,)) for f, (tr, _) in enumerate(splits)],
                          base, w, n_jobs)
        for fsp in fsps:
            cfg = replace(base, weights=w, fsp=fsp, tune_inside=False)
            res = nested_cv_evaluate(d, cfg, "GA-EN", folds=folds,
                                     layer1=[x.with_fsp(fsp) for x in l1])
            cells.append((s, w, fsp, res))
    best = min(cells, key=lambda c: (c[3].relative_rmse_cv, -c[1].w_p, -c[2]))
    return GridTuneResult(best[1], best[2], best[3], cells)


# -- comparison ---------------------------------------------------------------

@dataclass
class ComparisonRow:
    method: str
    n_original: int
    mean_final_predictors: float
    relative_rmse_cv_pct: float

    @property
    def over_100(self) -> bool:
        return self.relative_rmse_cv_pct > 100.0

    def display_rmse(self) -> str:
        return ">100" if self.over_100 else f"{self.relative_rmse_cv_pct:.2f}"

    def to_dict(self) -> dict:
        return {"method": self.method, "n_original": self.n_original,
                "mean_final_predictors": self.mean_final_predictors,
                "relative_rmse_cv_pct": self.relative_rmse_cv_pct,
                "relative_rmse_cv_display": self.display_rmse(),
                "over_100": self.over_100}


@dataclass
class ComparisonReport:
    rows: list
    results: dict
    folds: FoldPlan

    def row(self, method: str) -> ComparisonRow:
        return next(r for r in self.rows if r.method == canonical_method(method))

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows],
                "results": {m: r.to_dict() for m, r in self.results.items()},
                "outer_folds": self.folds.to_dict()}

    def to_table(self) -> str:
        head = ("Method", "# original predictors", "# final predictors",
                "relative RMSE_CV (%)")
        body = [(r.method, str(r.n_original),
                 f"{r.mean_final_predictors:.2f}".rstrip("0").rstrip("."),
                 r.display_rmse()) for r in self.rows]
        widths = [max(len(x[i]) for x in [head] + body) for i in range(4)]
        line = lambda cells: "| " + " | ".join(
            c.ljust(w) for c, w in zip(cells, widths)) + " |"
        sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([line(head), sep] + [line(b) for b in body])


def compare_methods(d: Dataset, cfg: PipelineConfig, *,
                    n_jobs: int = 1) -> ComparisonReport:
    """GA-EN, EN and GA-Lr on one shared outer fold plan.

    GA-EN and GA-Lr share the same layer-1 runs; they only differ in the
    model fitted on the consensus subset.
    """
    d = _prepare(d)
    folds = outer_folds(d, cfg)
    splits = list(folds.splits())
    cfgs, layer1 = _fold_layer1(d, splits, cfg, n_jobs)
    results = {m: nested_cv_evaluate(d, cfg, m, folds=folds, n_jobs=n_jobs,
                                     layer1=None if m == "EN" else layer1,
                                     fold_configs=cfgs)
               for m in METHODS}
    rows = [ComparisonRow(m, d.P, r.mean_final_predictors,
                          100.0 * r.relative_rmse_cv)
            for m, r in results.items()]
    return ComparisonReport(rows, results, folds)
