"""Brute-force reference computations used by the tests.

Nothing here calls into the coordinate-descent code.
"""

import itertools

import numpy as np
from scipy.optimize import minimize, minimize_scalar


def en_objective(X, y, b, alpha, rho):
    r = y - X @ b
    return r @ r + alpha * rho * np.abs(b).sum() + alpha * (1 - rho) * b @ b


def en_exact_minimum(X, y, alpha, rho):
    """Minimum of the elastic net objective by enumerating sign patterns.

    For every assignment of {-1, 0, +1} to the coefficients the objective is
    a quadratic on that orthant face; its stationary point is solved for and
    the true objective evaluated there. The global minimizer lies on one of
    these faces and is a stationary point of that face's quadratic, so the
    smallest value found is the exact minimum (when each face quadratic has
    a unique stationary point, e.g. full column rank or alpha*(1-rho) > 0).
    """
    p = X.shape[1]
    best_val, best_b = en_objective(X, y, np.zeros(p), alpha, rho), np.zeros(p)
    for signs in itertools.product((-1, 0, 1), repeat=p):
        s = np.array(signs, float)
        act = np.flatnonzero(s)
        if act.size == 0:
            continue
        Xa = X[:, act]
        A = Xa.T @ Xa + alpha * (1 - rho) * np.eye(act.size)
        rhs = Xa.T @ y - alpha * rho * s[act] / 2
        ba = np.linalg.lstsq(A, rhs, rcond=None)[0]
        b = np.zeros(p)
        b[act] = ba
        v = en_objective(X, y, b, alpha, rho)
        if v < best_val:
            best_val, best_b = v, b
    return best_val, best_b


def en_numeric_minimum(X, y, alpha, rho):
    """Smooth reformulation b = u - v, u, v >= 0, solved by L-BFGS-B."""
    p = X.shape[1]

    def f(z):
        u, v = z[:p], z[p:]
        b = u - v
        r = y - X @ b
        g = -2 * X.T @ r + 2 * alpha * (1 - rho) * b
        val = r @ r + alpha * rho * (u.sum() + v.sum()) + alpha * (1 - rho) * b @ b
        return val, np.concatenate([g + alpha * rho, -g + alpha * rho])

    res = minimize(f, np.zeros(2 * p), jac=True, method="L-BFGS-B",
                   bounds=[(0, None)] * (2 * p),
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 10000})
    return res.fun, res.x[:p] - res.x[p:]


def en_1d_minimum(x, y, alpha, rho):
    """Dense scalar minimization for a single-column problem."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    f = lambda b: en_objective(x[:, None], y, np.array([b]), alpha, rho)
    grid = np.linspace(-5, 5, 20001)
    b0 = grid[np.argmin([f(b) for b in grid])]
    res = minimize_scalar(f, bracket=(b0 - 1e-3, b0, b0 + 1e-3),
                          options={"xtol": 1e-12})
    return res.x


def all_subsets(P):
    for code in range(2 ** P):
        yield np.array([(code >> j) & 1 for j in range(P)], dtype=np.uint8)


def exhaustive_best(fitness, P):
    """Lowest fitness over all 2**P bit strings."""
    return min(fitness(bits) for bits in all_subsets(P))
