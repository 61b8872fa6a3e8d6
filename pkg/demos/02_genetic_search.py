"""
Genetic search over predictor subsets
=====================================

Each individual is a bit string over the predictors. Its fitness mixes the
cross-validated relative RMSE of an elastic net fitted on the chosen columns
with the fraction of columns chosen; lower is better.
"""

import numpy as np

from gaen import FitnessWeights, GAConfig, run_ga
from gaen.data import SynthSpec, generate_synthetic, kfold_split
from gaen.ga import make_fitness

d, support, _ = generate_synthetic(SynthSpec(n=30, P=40, k_true=3,
                                             noise_sd=0.3, seed=2))
folds = kfold_split(d.n, 3, seed=0)
weights = FitnessWeights(w_r=0.85, w_p=0.15)

# population 50, 10 generations, 19 best + 1 random parents, 5 children
cfg = GAConfig(seed=0)
res = run_ga(d, folds, weights, cfg)
for rec in res.trace:
    print(f"gen {rec['gen']:2d}  best {rec['best_fitness']:.4f}  "
          f"mean {rec['mean_fitness']:.4f}  best so far {rec['best_so_far']:.4f}")

print("best subset:", res.best.selected)
print("true support:", support.tolist())

# %%
# The fitness is memoised per bit pattern, so scoring a known subset is cheap
# once the GA has seen it.
fit = make_fitness(d, folds, weights, cfg)
truth = np.zeros(d.P, dtype=np.uint8)
truth[support] = 1
print("fitness of the true support:", round(fit(truth), 4))
print("fitness of all predictors:  ", round(fit(np.ones(d.P)), 4))
