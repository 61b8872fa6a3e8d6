"""
Elastic net by coordinate descent, cross-validated tuning, and the
minimum-norm least-squares baseline.

The penalized objective is taken exactly as

    L = SSE + alpha * rho * sum|b_p| + alpha * (1 - rho) * sum b_p^2

with SSE the plain sum of squared residuals. There is no ``1/n`` on the
SSE and no ``1/2`` on the ridge term, so ``alpha`` here is *not* the same
quantity as scikit-learn's or glmnet's ``alpha``/``lambda``. The intercept is
never penalized; it is recovered by centring.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _cd
from .data import Scaling, kfold_split
from .errors import ConfigurationError, DataError, IllPosedError

DEFAULT_TOL = 1e-7
DEFAULT_MAX_SWEEPS = 10_000


def soft_threshold(z, gamma):
    """``sign(z) * max(|z| - gamma, 0)``; works elementwise on arrays."""
    if np.any(np.asarray(gamma) < 0):
        raise ValueError("gamma must be non-negative")
    out = np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ENHyperParams:
    alpha: float
    rho: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 <= self.rho <= 1:
            raise ConfigurationError(f"rho must be in [0, 1], got {self.rho}")


def default_alphas(n=10, low=0.004, high=50.0):
    return tuple(float(a) for a in np.geomspace(low, high, n))


@dataclass(frozen=True)
class TuneGrid:
    """Hyper-parameter grid for cross-validated elastic net tuning."""

    alphas: tuple = field(default_factory=default_alphas)
    rhos: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    k: int = 3

    def __post_init__(self):
        a = tuple(float(v) for v in self.alphas)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "rhos", tuple(float(v) for v in self.rhos))
        if not a or min(a) <= 0:
            raise ConfigurationError("alphas must be non-empty and positive")
        if any(x >= y for x, y in zip(a, a[1:])):
            raise ConfigurationError("alphas must be strictly ascending")
        if not self.rhos or not all(0 <= r <= 1 for r in self.rhos):
            raise ConfigurationError("rhos must be non-empty and in [0, 1]")
        if self.k < 2:
            raise ConfigurationError("k must be at least 2")

    def pairs(self):
        return [(a, r) for r in self.rhos for a in self.alphas]

    def to_dict(self):
        return {"alphas": list(self.alphas), "rhos": list(self.rhos),
                "k": self.k}


@dataclass(frozen=True, eq=False)
class ElasticNetModel:
    """A fitted linear model.

    ``coefficients`` live on the scale the model was fitted on. When
    ``scaling`` is set, :func:`predict` standardizes its input first.
    """

    intercept: float
    coefficients: np.ndarray
    hyper: ENHyperParams
    selected: tuple
    objective_value: float
    scaling: Scaling | None = None
    n_sweeps: int = 0
    converged: bool = True

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[0]

    def to_dict(self) -> dict:
        d = {"alpha": self.hyper.alpha, "rho": self.hyper.rho,
             "intercept": float(self.intercept),
             "coefficients": [float(c) for c in self.coefficients],
             "selected": [int(s) for s in self.selected],
             "objective_value": float(self.objective_value)}
        if self.scaling is not None:
            d["scaling"] = {"mean": self.scaling.mean.tolist(),
                            "scale": self.scaling.scale.tolist()}
        return d


def objective(X, y, beta, intercept, alpha, rho) -> float:
    """Elastic net objective ``L`` at the given coefficients."""
    r = np.asarray(y) - intercept - np.asarray(X) @ beta
    return float(r @ r + alpha * rho * np.abs(beta).sum()
                 + alpha * (1 - rho) * (beta @ beta))


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise DataError("X must be two-dimensional")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError("need at least one row and one column")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("NaN or infinite value in inputs")
    return X, y


def fit_elastic_net(X, y, hyper: ENHyperParams, tol=DEFAULT_TOL,
                    max_sweeps=DEFAULT_MAX_SWEEPS, *, standardize=False,
                    start=None) -> ElasticNetModel:
    """Minimize the elastic net objective by cyclic coordinate descent.

    Parameters
    ----------
    X : array_like, shape (n, p)
        Design matrix. Columns are centred internally; pass
        ``standardize=True`` to also scale them to unit sd and keep the
        transform on the model.
    y : array_like, shape (n,)
    hyper : ENHyperParams
    tol : float
        Stop once no coefficient moves by more than this in a full sweep.
    max_sweeps : int
    start : array_like, optional
        Warm-start coefficients.

    Notes
    -----
    Coordinate ``j`` is updated to
    ``S(x_j' r_(-j), alpha*rho/2) / (x_j' x_j + alpha*(1-rho))``
    where ``r_(-j)`` is the residual with feature ``j`` removed.
    """
    X, y = _check_xy(X, y)
    scaling = None
    if standardize:
        scaling = Scaling.fit(X)
        X = scaling.transform(X)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = np.asfortranarray(X - x_mean)
    yc = y - y_mean
    a, rho = float(hyper.alpha), float(hyper.rho)
    if a * (1 - rho) == 0.0 and a * rho == 0.0:
        dead = np.flatnonzero(~np.any(Xc != 0.0, axis=0))
        if dead.size:
            raise IllPosedError(
                f"column {dead[0]} is constant and alpha=0: the coefficient "
                "is not identifiable")
    beta = np.zeros(X.shape[1]) if start is None else np.array(start, float)
    sweeps = _cd.cd_fit(Xc, yc, beta, a, rho, float(tol), int(max_sweeps))
    intercept = float(y_mean - x_mean @ beta)
    return ElasticNetModel(
        intercept=intercept,
        coefficients=beta,
        hyper=hyper,
        selected=tuple(int(j) for j in np.flatnonzero(beta)),
        objective_value=objective(X, y, beta, intercept, a, rho),
        scaling=scaling,
        n_sweeps=int(sweeps),
        converged=sweeps < max_sweeps or max_sweeps == 0,
    )


def predict(m: ElasticNetModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != m.n_features:
        raise DataError(
            f"model has {m.n_features} features, X has {X.shape[1]} columns")
    if m.scaling is not None:
        X = m.scaling.transform(X)
    sel = list(m.selected)
    return m.intercept + X[:, sel] @ m.coefficients[sel]


def fit_min_norm_ols(X, y, *, fit_intercept=False,
                     standardize=False) -> ElasticNetModel:
    """Least squares, taking the minimum-norm solution when underdetermined.

    With ``fit_intercept`` the columns and response are centred first, so
    the minimum norm applies to the slopes only.
    """
    X, y = _check_xy(X, y)
    scaling = None
    if standardize:
        scaling = Scaling.fit(X)
        X = scaling.transform(X)
    if fit_intercept:
        x_mean, y_mean = X.mean(axis=0), y.mean()
    else:
        x_mean, y_mean = np.zeros(X.shape[1]), 0.0
    beta = np.linalg.pinv(X - x_mean) @ (y - y_mean)
    intercept = float(y_mean - x_mean @ beta)
    return ElasticNetModel(
        intercept=intercept,
        coefficients=beta,
        hyper=ENHyperParams(0.0, 0.0),
        selected=tuple(range(X.shape[1])),
        objective_value=objective(X, y, beta, intercept, 0.0, 0.0),
        scaling=scaling,
    )


def cv_path_errors(X, y, folds, alphas, rho, tol=DEFAULT_TOL,
                   max_sweeps=DEFAULT_MAX_SWEEPS) -> np.ndarray:
    """Per-fold validation RMSE along an alpha path.

    Returns an array of shape ``(folds.k, len(alphas))`` in the order of
    ``alphas`` as given. Each fold is standardized on its own training rows.
    """
    alphas = np.asarray(alphas, dtype=float)
    order = np.argsort(-alphas, kind="stable")
    out = np.empty((folds.k, alphas.size))
    for f, (tr, va) in enumerate(folds.splits()):
        sc = Scaling.fit(X[tr])
        Xtr = np.ascontiguousarray(sc.transform(X[tr]))
        Xva = np.ascontiguousarray(sc.transform(X[va]))
        out[f, order] = _cd.path_rmse(Xtr, y[tr], Xva, y[va], alphas[order],
                                      float(rho), float(tol), int(max_sweeps))
    return out


def tune_elastic_net(X, y, grid: TuneGrid = TuneGrid(), seed=0, *,
                     folds=None):
    """Pick ``(alpha, rho)`` by k-fold cross-validated RMSE.

    Ties go to the smaller ``rho``, then the larger ``alpha``.

    Returns
    -------
    hyper : ENHyperParams
    cv_error : float
        Mean validation RMSE of the winning pair.
    """
    X, y = _check_xy(X, y)
    if folds is None:
        folds = kfold_split(X.shape[0], grid.k, seed)
    best = None
    for rho in sorted(grid.rhos):
        err = cv_path_errors(X, y, folds, grid.alphas, rho).mean(axis=0)
        for a, e in sorted(zip(grid.alphas, err), reverse=True):
            if best is None or e < best[0]:
                best = (float(e), a, rho)
    return ENHyperParams(best[1], best[2]), best[0]
