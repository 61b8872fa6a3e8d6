"""Two-layer feature selection: a genetic algorithm wrapper followed by an
elastic net, with the elastic-net-only and GA + least-squares baselines."""

from .data import (Dataset, FoldPlan, Scaling, SynthSpec, generate_synthetic,
                   impute_missing, kfold_split, load_csv, standardize,
                   write_csv)
from .ga import (FitnessWeights, GAConfig, Individual, WEIGHT_SCENARIOS,
                 evaluate_fitness, run_ga)
from .pipeline import (ComparisonReport, EvalResult, PipelineConfig,
                       compare_methods, grid_tune, nested_cv_evaluate,
                       run_layer1, run_layer2)
from .regress import (ENHyperParams, ElasticNetModel, TuneGrid,
                      fit_elastic_net, fit_min_norm_ols, predict,
                      soft_threshold, tune_elastic_net)

__version__ = "0.1.0"
