"""
Elastic net by coordinate descent
=================================

The solver minimizes the sum of squared errors plus an L1/L2 mix weighted
by ``alpha`` and split by ``rho``. Here we check it against a ridge closed
form, watch the lasso switch everything off, and tune both hyper-parameters
by cross-validation on a wide problem.
"""

import numpy as np

from gaen import ENHyperParams, TuneGrid, fit_elastic_net, tune_elastic_net
from gaen.data import SynthSpec, generate_synthetic

rng = np.random.default_rng(0)
X = rng.normal(size=(20, 5))
X -= X.mean(axis=0)
y = X @ np.array([2.0, 0, -1, 0, 0]) + 0.1 * rng.normal(size=20)

# rho = 0 is ridge regression, so the closed form must agree
m = fit_elastic_net(X, y, ENHyperParams(alpha=0.5, rho=0.0))
closed = np.linalg.solve(X.T @ X + 0.5 * np.eye(5), X.T @ (y - y.mean()))
print("ridge gap:", np.abs(m.coefficients - closed).max())

# a large enough L1 weight leaves only the intercept
big = 2 * np.abs(X.T @ (y - y.mean())).max()
print("lasso at alpha =", round(big, 2), "->",
      fit_elastic_net(X, y, ENHyperParams(big, 1.0)).selected)

# %%
# A p >> n problem: 30 rows, 120 binary predictors, 5 of them active.
# Columns are standardized inside the fit; the model predicts from raw input.
d, support, beta = generate_synthetic(SynthSpec(n=30, P=120, k_true=5, seed=1))
hyper, cv_err = tune_elastic_net(d.predictors, d.response, TuneGrid(), seed=0)
model = fit_elastic_net(d.predictors, d.response, hyper, standardize=True)
print(f"tuned alpha={hyper.alpha:.3g} rho={hyper.rho}, CV RMSE {cv_err:.3f}")
print("selected", len(model.selected), "predictors; true support",
      support.tolist(), "recovered:",
      sorted(set(support.tolist()) & set(model.selected)))
