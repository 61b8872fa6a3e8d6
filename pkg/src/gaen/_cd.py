"""Compiled coordinate-descent kernels for the elastic net objective

    L(b) = ||y - X b||^2 + alpha * rho * ||b||_1 + alpha * (1 - rho) * ||b||^2

with ``X`` and ``y`` already centred.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _penalized(Xa, y, coef, l1, l2):
    r = y - Xa @ coef
    return r @ r + 2.0 * l1 * np.abs(coef).sum() + l2 * (coef @ coef)


@njit(cache=True)
def _active_set_step(X, y, beta, l1, l2):
    """Newton step on the current signed support (feature-sign search).

    Solves the stationarity equations restricted to the nonzero coordinates
    of ``beta`` with their current signs. If the solution keeps every sign
    and all inactive coordinates satisfy their optimality condition it is
    the exact minimizer: ``beta`` is overwritten and 1 is returned. If some
    signs flip, ``beta`` moves to the best point on the segment towards the
    solution among the zero crossings (a strict descent step) and 0 is
    returned. -1 means nothing was changed.
    """
    p = X.shape[1]
    act = np.flatnonzero(beta)
    m = act.shape[0]
    if m == 0 or (l2 == 0.0 and m > X.shape[0]):
        return -1
    Xa = np.empty((X.shape[0], m))
    cur = np.empty(m)
    for k in range(m):
        Xa[:, k] = X[:, act[k]]
        cur[k] = beta[act[k]]
    A = Xa.T @ Xa
    b = Xa.T @ y
    for k in range(m):
        A[k, k] += l2
        b[k] -= l1 * np.sign(cur[k])
    try:
        sol = np.linalg.solve(A, b)
    except Exception:
        return -1
    for k in range(m):
        if not np.isfinite(sol[k]):
            return -1
    consistent = True
    for k in range(m):
        if sol[k] * cur[k] <= 0.0:
            consistent = False
            break
    if consistent:
        r = y - Xa @ sol
        slack = 1e-10 * (1.0 + l1)
        is_act = np.zeros(p, dtype=np.bool_)
        for k in range(m):
            is_act[act[k]] = True
        optimal = True
        for j in range(p):
            if not is_act[j]:
                z = 0.0
                for i in range(X.shape[0]):
                    z += X[i, j] * r[i]
                if abs(z) > l1 + slack:
                    optimal = False
                    break
        if optimal:
            for k in range(m):
                beta[act[k]] = sol[k]
            return 1
        return -1
    # discrete line search over the points where a coordinate hits zero
    f0 = _penalized(Xa, y, cur, l1, l2)
    best_f = f0
    best = cur.copy()
    d = sol - cur
    for k in range(m):
        if sol[k] * cur[k] <= 0.0 and d[k] != 0.0:
            t = -cur[k] / d[k]
            cand = cur + t * d
            cand[k] = 0.0
            fc = _penalized(Xa, y, cand, l1, l2)
            if fc < best_f:
                best_f = fc
                best = cand
    if best_f >= f0:
        return -1
    for k in range(m):
        beta[act[k]] = best[k]
    return 0


@njit(cache=True)
def cd_fit(X, y, beta, alpha, rho, tol, max_sweeps):
    """Cyclic coordinate descent, updating ``beta`` in place.

    Whenever the sign pattern survives a sweep unchanged, an active-set
    Newton step is tried (see ``_active_set_step``); it either lands on the
    exact minimizer, which ends the fit, or makes a descent step after which
    sweeping resumes.

    Returns the number of sweeps performed. A sweep count equal to
    ``max_sweeps`` means the tolerance was not reached.
    """
    n, p = X.shape
    l1 = alpha * rho / 2.0
    l2 = alpha * (1.0 - rho)
    # inputs sitting exactly on the threshold stay zero despite rounding in z
    edge = l1 * (1.0 + 1e-12)
    col_sq = np.zeros(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        col_sq[j] = s
    r = y.copy()
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    signs = np.sign(beta)
    stable = 0
    next_try = 0
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(p):
            denom = col_sq[j] + l2
            old = beta[j]
            if denom == 0.0:
                new = 0.0
            else:
                z = col_sq[j] * old
                for i in range(n):
                    z += X[i, j] * r[i]
                if z > edge:
                    new = (z - l1) / denom
                elif z < -edge:
                    new = (z + l1) / denom
                else:
                    new = 0.0
            delta = new - old
            if delta != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * delta
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            return sweep + 1
        cur = np.sign(beta)
        if np.array_equal(cur, signs):
            stable += 1
        else:
            stable = 0
            signs = cur
        if stable >= 1 and sweep >= next_try:
            status = _active_set_step(X, y, beta, l1, l2)
            if status == 1:
                return sweep + 1
            if status == 0:
                r = y - X @ beta
                signs = np.sign(beta)
                stable = 0
            else:
                # back off so a hopeless pattern is not re-solved every sweep
                next_try = sweep + 10
    return max_sweeps


@njit(cache=True)
def cd_path(X, y, alphas, rho, tol, max_sweeps):
    """Fit each alpha in turn, warm-starting from the previous solution.

    ``alphas`` should be sorted in descending order for warm starts to help.
    Returns an ``(len(alphas), p)`` coefficient array.
    """
    p = X.shape[1]
    out = np.zeros((alphas.shape[0], p))
    beta = np.zeros(p)
    for a in range(alphas.shape[0]):
        cd_fit(X, y, beta, alphas[a], rho, tol, max_sweeps)
        out[a] = beta
    return out


@njit(cache=True)
def path_rmse(Xtr, ytr, Xva, yva, alphas, rho, tol, max_sweeps):
    """Validation RMSE along an alpha path.

    ``Xtr`` and ``Xva`` must be standardized with the training statistics,
    so the intercept is the training response mean.
    """
    ybar = ytr.mean()
    coefs = cd_path(Xtr, ytr - ybar, alphas, rho, tol, max_sweeps)
    m = Xva.shape[0]
    out = np.empty(alphas.shape[0])
    for a in range(alphas.shape[0]):
        s = 0.0
        for i in range(m):
            pred = ybar
            for j in range(Xva.shape[1]):
                pred += Xva[i, j] * coefs[a, j]
            d = yva[i] - pred
            s += d * d
        out[a] = np.sqrt(s / m)
    return out
