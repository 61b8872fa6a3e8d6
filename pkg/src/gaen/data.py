"""
Datasets, fold plans, preprocessing and synthetic data.

Predictors are stored as a dense ``(n, P)`` float array with ``NaN`` marking
missing cells. Columns carry a positional order (``column_order``) used as a
stand-in for genomic position by :func:`impute_missing`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DataError, ImputationError, ParseError


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Regression data: predictors, response and column metadata.

    Parameters
    ----------
    predictors : array_like, shape (n, P)
        Observation matrix. ``NaN`` marks a missing cell.
    response : array_like, shape (n,)
        Response values. Missing responses are not allowed.
    column_names : sequence of str, optional
        Defaults to ``x0 .. x{P-1}``.
    column_order : array_like of int, optional
        Position of each column along the genome. Defaults to ``0 .. P-1``.
    """

    predictors: np.ndarray
    response: np.ndarray
    column_names: tuple = ()
    column_order: np.ndarray = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.predictors, dtype=float))
        y = np.asarray(self.response, dtype=float).ravel()
        n, P = X.shape
        if y.shape[0] != n:
            raise DataError(f"response has {y.shape[0]} values for {n} rows")
        if n < 2 or P < 1:
            raise DataError(f"need n >= 2 and P >= 1, got n={n}, P={P}")
        if not np.all(np.isfinite(y)):
            raise DataError("response contains missing or non-finite values")
        if np.any(np.isinf(X)):
            raise DataError("predictors contain infinite values")
        names = tuple(self.column_names) or tuple(f"x{j}" for j in range(P))
        if len(names) != P:
            raise DataError(f"{len(names)} column names for {P} columns")
        order = np.arange(P) if self.column_order is None else self.column_order
        order = np.asarray(order, dtype=np.int64)
        if order.shape != (P,):
            raise DataError("column_order must have one entry per column")
        object.__setattr__(self, "predictors", _frozen(X))
        object.__setattr__(self, "response", _frozen(y))
        object.__setattr__(self, "column_names", names)
        object.__setattr__(self, "column_order", _frozen(order, np.int64))

    @property
    def n(self) -> int:
        return self.predictors.shape[0]

    @property
    def P(self) -> int:
        return self.predictors.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.predictors)

    @property
    def has_missing(self) -> bool:
        return bool(self.missing.any())

    @property
    def y_mean(self) -> float:
        return float(self.response.mean())

    def rows(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.predictors[idx], self.response[idx],
                       self.column_names, self.column_order)

    def columns(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.predictors[:, idx], self.response,
                       tuple(self.column_names[j] for j in idx),
                       self.column_order[idx])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.column_names == other.column_names
                and np.array_equal(self.column_order, other.column_order)
                and np.array_equal(self.response, other.response)
                and np.array_equal(self.predictors, other.predictors,
                                   equal_nan=True))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Assignment of ``n`` observations to ``k`` validation folds."""

    k: int
    assignment: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        a = _frozen(self.assignment, np.int64)
        if a.ndim != 1 or (a.size and (a.min() < 0 or a.max() >= self.k)):
            raise ConfigurationError("fold assignment out of range")
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    def validation(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == f)

    def training(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != f)

    def splits(self):
        """Yield ``(train_idx, val_idx)`` for each fold in order."""
        for f in range(self.k):
            yield self.training(f), self.validation(f)

    def sizes(self) -> list[int]:
        return np.bincount(self.assignment, minlength=self.k).tolist()

    def to_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed,
                "assignment": self.assignment.tolist()}

    def __eq__(self, other):
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assignment,
                                                    other.assignment)

    __hash__ = None


def kfold_split(n: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle ``range(n)`` and deal observations round-robin into ``k`` folds.

    Fold sizes differ by at most one.
    """
    if k < 2:
        raise ConfigurationError(f"k must be at least 2, got {k}")
    if k > n:
        raise ConfigurationError(f"cannot split {n} observations into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % k
    return FoldPlan(k, assignment, seed)


# -- CSV ----------------------------------------------------------------------

def _parse_cell(text, row, col, allow_missing=True):
    text = text.strip()
    if text == "":
        if not allow_missing:
            raise ParseError(f"missing value in column {col!r}", row)
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r} in column {col!r}",
                         row) from None


def load_csv(path, response_column: str = "y") -> Dataset:
    """Read a CSV with a header row. Empty cells are missing predictors."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("file is empty", 1) from None
        if response_column not in header:
            raise ConfigurationError(
                f"response column {response_column!r} not found in {path}")
        yi = header.index(response_column)
        names = [h for i, h in enumerate(header) if i != yi]
        X, y = [], []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", row_no)
            y.append(_parse_cell(row[yi], row_no, response_column, False))
            X.append([_parse_cell(c, row_no, header[i])
                      for i, c in enumerate(row) if i != yi])
    if not X:
        raise ParseError("no data rows", 2)
    return Dataset(np.array(X, dtype=float).reshape(len(X), len(names)),
                   np.array(y), tuple(names))


def _fmt(v):
    if math.isnan(v):
        return ""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_csv(d: Dataset, path, response_column: str = "y") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(d.column_names) + [response_column])
        for xi, yi in zip(d.predictors, d.response):
            w.writerow([_fmt(v) for v in xi] + [_fmt(yi)])


# -- imputation ---------------------------------------------------------------

def _is_binary(X):
    obs = X[~np.isnan(X)]
    return obs.size > 0 and bool(np.all((obs == 0) | (obs == 1)))


def _neighbours(order_pos, j, observed_row):
    """Nearest observed column on each side of position ``j`` (by order)."""
    out = []
    for step in (-1, 1):
        q = j + step
        while 0 <= q < len(order_pos):
            c = order_pos[q]
            if observed_row[c]:
                out.append(c)
                break
            q += step
    return out


def _regress_predict(target, regressors, x_new):
    """Simple/multiple linear regression of ``target`` on ``regressors``.

    Zero-variance regressors are dropped; with none left, the target mean is
    returned.
    """
    keep = [i for i in range(regressors.shape[1])
            if np.ptp(regressors[:, i]) > 0]
    if not keep:
        return float(target.mean())
    A = np.column_stack([np.ones(len(target)), regressors[:, keep]])
    coef = np.linalg.lstsq(A, target, rcond=None)[0]
    return float(coef[0] + np.dot(coef[1:], x_new[keep]))


def impute_missing(d: Dataset, binary: bool | None = None) -> Dataset:
    """Fill missing predictor cells from the nearest observed neighbour columns.

    Each missing cell ``(i, j)`` is predicted by a linear regression of column
    ``j`` on the closest columns to its left and right (by ``column_order``)
    that are observed at row ``i``. The regression uses only rows where all
    involved columns were originally observed. When ``binary`` is true (the
    default when every observed value is 0 or 1) predictions are rounded to
    the nearer of {0, 1}, ties going to 1.
    """
    X = d.predictors
    miss = np.isnan(X)
    if not miss.any():
        return d
    if binary is None:
        binary = _is_binary(X)
    empty = np.flatnonzero(miss.all(axis=0))
    if empty.size:
        raise ImputationError(
            f"column {d.column_names[empty[0]]!r} has no observed values")

    order_pos = np.argsort(d.column_order, kind="stable")
    pos_of = np.empty_like(order_pos)
    pos_of[order_pos] = np.arange(len(order_pos))
    out = X.copy()
    for i, j in zip(*np.nonzero(miss)):
        nb = _neighbours(order_pos, pos_of[j], ~miss[i])
        value = None
        # fall back to single neighbours if the pair shares no complete rows
        for regs in ([nb] if len(nb) < 2 else [nb, nb[:1], nb[1:]]):
            rows = ~miss[:, j]
            for c in regs:
                rows &= ~miss[:, c]
            if rows.any():
                value = _regress_predict(X[rows, j], X[np.ix_(rows, regs)],
                                         X[i, regs])
                break
        if value is None:
            value = float(np.nanmean(X[:, j]))
        if binary:
            value = 1.0 if value >= 0.5 else 0.0
        out[i, j] = value
    return Dataset(out, d.response, d.column_names, d.column_order)


# -- standardization ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Scaling:
    """Per-column centring and scaling record.

    Zero-variance columns get ``scale == 1`` so they map to all zeros and
    still invert exactly.
    """

    mean: np.ndarray
    scale: np.ndarray
    zero_variance: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaling":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        # relative threshold so rounding noise in a constant column is ignored
        zero = sd <= 1e-12 * np.maximum(1.0, np.abs(mean))
        scale = np.where(zero, 1.0, sd)
        return cls(_frozen(mean), _frozen(scale), _frozen(zero, bool))

    def transform(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        Z[:, self.zero_variance] = 0.0
        return Z

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.mean

    def subset(self, idx) -> "Scaling":
        idx = np.asarray(idx, dtype=np.int64)
        return Scaling(self.mean[idx], self.scale[idx], self.zero_variance[idx])


def standardize(d: Dataset) -> tuple[Dataset, Scaling]:
    """Centre every predictor and scale non-constant ones to unit sd."""
    rec = Scaling.fit(d.predictors)
    return (Dataset(rec.transform(d.predictors), d.response, d.column_names,
                    d.column_order), rec)


def unstandardize(d: Dataset, rec: Scaling) -> Dataset:
    return Dataset(rec.inverse(d.predictors), d.response, d.column_names,
                   d.column_order)


# -- synthetic data -----------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a sparse linear regression benchmark.

    Binary predictors follow a Markov chain along the columns: column ``j+1``
    copies column ``j`` and flips each entry with probability
    ``(1 - adjacent_correlation) / 2``, which gives exactly that correlation
    between neighbours. Continuous predictors use a Gaussian AR(1) chain.
    Nonzero coefficients are all ``+beta_magnitude`` so the response mean is
    positive for binary designs.
    """

    n: int = 30
    P: int = 120
    k_true: int = 5
    beta_magnitude: float = 1.0
    noise_sd: float = 0.5
    adjacent_correlation: float = 0.3
    missing_rate: float = 0.0
    binary_predictors: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.P < 1:
            raise ConfigurationError("need n >= 2 and P >= 1")
        if not 0 <= self.k_true <= self.P:
            raise ConfigurationError(
                f"k_true={self.k_true} must lie in [0, P={self.P}]")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be non-negative")
        if not 0 <= self.adjacent_correlation < 1:
            raise ConfigurationError("adjacent_correlation must be in [0, 1)")
        if not 0 <= self.missing_rate < 1:
            raise ConfigurationError("missing_rate must be in [0, 1)")


def generate_synthetic(spec: SynthSpec):
    """Draw a dataset from ``spec``.

    Returns
    -------
    dataset : Dataset
    support : ndarray of int
        Sorted indices of the nonzero coefficients.
    beta : ndarray, shape (P,)
    """
    rng = np.random.default_rng(spec.seed)
    n, P, r = spec.n, spec.P, spec.adjacent_correlation
    X = np.empty((n, P))
    if spec.binary_predictors:
        X[:, 0] = rng.random(n) < 0.5
        flip = rng.random((n, P)) < (1.0 - r) / 2.0
        for j in range(1, P):
            X[:, j] = np.where(flip[:, j], 1.0 - X[:, j - 1], X[:, j - 1])
    else:
        e = rng.standard_normal((n, P))
        X[:, 0] = e[:, 0]
        for j in range(1, P):
            X[:, j] = r * X[:, j - 1] + math.sqrt(1 - r * r) * e[:, j]
    support = np.sort(rng.choice(P, size=spec.k_true, replace=False))
    beta = np.zeros(P)
    beta[support] = spec.beta_magnitude
    y = X @ beta + spec.noise_sd * rng.standard_normal(n)
    if spec.missing_rate > 0:
        X[rng.random((n, P)) < spec.missing_rate] = np.nan
    return Dataset(X, y), support, beta


def write_truth(path, support, beta, seed) -> None:
    payload = {"support": [int(i) for i in support],
               "beta": [float(b) for b in beta], "seed": int(seed)}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_truth(path) -> dict:
    return json.loads(Path(path).read_text())
