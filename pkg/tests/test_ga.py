import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaen.data import Dataset, SynthSpec, generate_synthetic, kfold_split
from gaen.errors import ConfigurationError
from gaen.ga import (FitnessFunction, FitnessWeights, GAConfig, Individual,
                     WEIGHT_SCENARIOS, crossover_single_point,
                     evaluate_fitness, fitness_value, init_population,
                     make_fitness, mutate, next_generation, run_ga,
                     select_parents)

from oracles import all_subsets, exhaustive_best

SMALL = GAConfig(population_size=10, generations=4, n_best=3, n_random=1,
                 n_children=5)


class FixedRng:
    """Stands in for a Generator where a test needs a known cut point."""

    def __init__(self, value):
        self.value = value

    def integers(self, low, high=None, size=None):
        return self.value


@pytest.fixture(scope="module")
def sparse_data():
    d, support, _ = generate_synthetic(SynthSpec(n=30, P=12, k_true=1,
                                                 noise_sd=0.0, seed=2))
    return d, support, kfold_split(d.n, 3, 0)


class TestConfig:
    def test_defaults_satisfy_size_identity(self):
        c = GAConfig()
        assert (c.n_best + c.n_random) / 2 * c.n_children == c.population_size == 50
        assert (c.generations, c.mutation_rate) == (10, 0.05)

    @pytest.mark.parametrize("kw", [dict(population_size=40),
                                    dict(n_random=2),
                                    dict(n_best=2, n_random=1),
                                    dict(mutation_rate=1.5)])
    def test_violations(self, kw):
        with pytest.raises(ConfigurationError):
            GAConfig(**kw)

    def test_small_identity(self):
        c = GAConfig(population_size=4, n_best=3, n_random=1, n_children=2)
        assert c.population_size == 4

    def test_weights(self):
        with pytest.raises(ConfigurationError):
            FitnessWeights(0.5, 0.6)
        with pytest.raises(ConfigurationError):
            FitnessWeights(1.2, -0.2)
        assert len(WEIGHT_SCENARIOS) == 4
        assert all(w.w_r > 0 for w in WEIGHT_SCENARIOS)


class TestInit:
    def test_size(self):
        pop = init_population(36, GAConfig())
        assert len(pop) == 50
        assert all(ind.P == 36 for ind in pop)

    def test_deterministic(self):
        a = init_population(20, GAConfig(seed=3))
        b = init_population(20, GAConfig(seed=3))
        assert [i.key for i in a] == [i.key for i in b]

    def test_single_predictor(self):
        assert all(ind.bits.tolist() == [1] for ind in init_population(1, GAConfig()))

    def test_no_empty_individuals(self):
        assert all(ind.bits.any() for ind in init_population(2, GAConfig(seed=1)))


class TestFitness:
    def test_arithmetic(self):
        w = FitnessWeights(0.5, 0.5)
        assert fitness_value(w, 0.4, 10, 36) == pytest.approx(0.3389, abs=5e-5)
        assert fitness_value(FitnessWeights(1, 0), 0.3, 7, 36) == pytest.approx(0.3)

    def test_clamped(self):
        w = FitnessWeights(0.85, 0.15)
        assert fitness_value(w, 3.7, 5, 10) == pytest.approx(0.85 + 0.075)

    def test_true_predictor_scores_near_penalty_only(self, sparse_data):
        d, support, folds = sparse_data
        w = FitnessWeights(0.85, 0.15)
        bits = np.zeros(d.P, dtype=np.uint8)
        bits[support] = 1
        ind = Individual(bits)
        f = evaluate_fitness(ind, d, folds, w)
        assert ind.fitness == f
        assert f == pytest.approx(0.15 / d.P, abs=0.01)

    def test_empty_uses_intercept_model(self, sparse_data):
        d, _, folds = sparse_data
        fit = make_fitness(d, folds, FitnessWeights(1, 0))
        expected = np.mean([np.sqrt(np.mean((d.response[va] - d.response[tr].mean()) ** 2))
                            for tr, va in folds.splits()]) / d.y_mean
        assert fit.relative_error(np.zeros(d.P)) == pytest.approx(expected)

    def test_bounded(self, sparse_data):
        d, _, folds = sparse_data
        fit = make_fitness(d, folds, FitnessWeights(0.5, 0.5))
        rng = np.random.default_rng(0)
        for _ in range(30):
            assert 0 <= fit(rng.integers(0, 2, d.P)) <= 1

    def test_memoised(self, sparse_data):
        d, _, folds = sparse_data
        fit = make_fitness(d, folds, FitnessWeights(0.5, 0.5))
        bits = np.ones(d.P, dtype=np.uint8)
        assert fit(bits) == fit(bits.copy())

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.1, 10), st.integers(0, 2**12 - 1),
           st.integers(0, 2**12 - 1))
    def test_scaled_weights_keep_ranking(self, w_r, c, code_a, code_b):
        d, support, _ = generate_synthetic(SynthSpec(n=30, P=12, k_true=1,
                                                     noise_sd=0.0, seed=2))
        folds = kfold_split(d.n, 3, 0)
        a = np.array([(code_a >> j) & 1 for j in range(12)], np.uint8)
        b = np.array([(code_b >> j) & 1 for j in range(12)], np.uint8)
        f1 = make_fitness(d, folds, FitnessWeights(w_r, 1 - w_r))
        f2 = make_fitness(d, folds, FitnessWeights.normalized(c * w_r, c * (1 - w_r)))
        assert (f1(a) < f1(b)) == (f2(a) < f2(b))


class TestOperators:
    def _pop(self, fits):
        return [Individual(np.array([i % 2, 1], np.uint8), f)
                for i, f in enumerate(fits)]

    def test_pool_size(self):
        rng = np.random.default_rng(0)
        pop = [Individual(np.ones(3, np.uint8), float(i)) for i in range(50)]
        pool = select_parents(pop, GAConfig(), rng)
        assert len(pool) == 20
        fits = sorted(p.fitness for p in pool)
        assert fits[:19] == list(range(19))
        assert fits[19] >= 19

    def test_equal_fitness_deterministic(self):
        pop = [Individual(np.array([i], np.uint8) , 1.0) for i in range(2)] * 5
        a = select_parents(pop, SMALL, np.random.default_rng(1))
        b = select_parents(pop, SMALL, np.random.default_rng(1))
        assert [id(x) for x in a] == [id(x) for x in b]

    def test_elitist_pool(self):
        cfg = GAConfig(population_size=10, n_best=4, n_random=0, n_children=5)
        pop = [Individual(np.ones(2, np.uint8), float(f)) for f in range(10)]
        pool = select_parents(pop, cfg, np.random.default_rng(0))
        assert sorted(p.fitness for p in pool) == [0, 1, 2, 3]

    def test_crossover_cut(self):
        a = Individual(np.ones(4, np.uint8))
        b = Individual(np.zeros(4, np.uint8))
        assert crossover_single_point(a, b, FixedRng(2)).bitstring() == "1100"

    def test_crossover_identical_parents(self):
        a = Individual(np.array([1, 0, 1, 1, 0], np.uint8))
        rng = np.random.default_rng(0)
        for _ in range(10):
            child = crossover_single_point(a, a, rng)
            assert child.P == 5 and child.key == a.key

    def test_crossover_single_gene(self):
        a, b = Individual([1]), Individual([0])
        seen = {crossover_single_point(a, b, np.random.default_rng(s)).bits[0]
                for s in range(20)}
        assert seen == {0, 1}

    def test_mutation_extremes(self):
        ind = Individual(np.array([1, 0, 1, 0], np.uint8))
        rng = np.random.default_rng(0)
        assert mutate(ind, 0.0, rng).key == ind.key
        assert mutate(ind, 1.0, rng).bitstring() == "0101"

    def test_mutation_rate(self):
        rng = np.random.default_rng(12)
        ind = Individual(np.zeros(100, np.uint8))
        flips = [mutate(ind, 0.05, rng).bits.sum() for _ in range(10_000)]
        assert 4.4 <= np.mean(flips) <= 5.6

    def test_next_generation_sizes(self, sparse_data):
        d, _, folds = sparse_data
        fit = make_fitness(d, folds, FitnessWeights(0.5, 0.5))
        for cfg in (GAConfig(), GAConfig(population_size=4, n_best=3,
                                          n_random=1, n_children=2)):
            rng = np.random.default_rng(0)
            pop = init_population(d.P, cfg, rng)
            for p in pop:
                p.fitness = fit(p.bits)
            new = next_generation(pop, fit, cfg, rng)
            assert len(new) == cfg.population_size
            assert all(c.fitness is not None for c in new)


class TestRun:
    def test_history_and_best(self, sparse_data):
        d, _, folds = sparse_data
        res = run_ga(d, folds, FitnessWeights(0.85, 0.15), SMALL)
        assert len(res.history) == SMALL.generations
        assert res.best.fitness == min(res.history)
        running = np.minimum.accumulate(res.history)
        assert np.all(np.diff(running) <= 0)
        assert [r["gen"] for r in res.trace] == [1, 2, 3, 4]
        best, history = res
        assert history is res.history

    def test_single_generation(self, sparse_data):
        d, _, folds = sparse_data
        res = run_ga(d, folds, FitnessWeights(0.5, 0.5),
                     GAConfig(generations=1, seed=3))
        assert res.history == [res.best.fitness]

    def test_deterministic(self, sparse_data):
        d, _, folds = sparse_data
        a = run_ga(d, folds, FitnessWeights(0.5, 0.5), SMALL)
        b = run_ga(d, folds, FitnessWeights(0.5, 0.5), SMALL)
        assert a.best.key == b.best.key and a.history == b.history

    def test_finds_exhaustive_optimum_on_toy(self):
        rng = np.random.default_rng(0)
        X = rng.integers(0, 2, size=(27, 3)).astype(float)
        d = Dataset(X, 2 * X[:, 0] + 1)
        folds = kfold_split(27, 3, 0)
        w = FitnessWeights(0.85, 0.15)
        fit = make_fitness(d, folds, w)
        res = run_ga(d, folds, w, GAConfig(), fitness=fit)
        assert res.best.fitness == exhaustive_best(fit, 3)
        assert res.best.bitstring() == "100"

    def test_population_has_every_subset_reachable(self):
        # mutation can produce the empty subset even though init never does
        ind = Individual(np.array([1, 0], np.uint8))
        seen = {mutate(ind, 0.5, np.random.default_rng(s)).bitstring()
                for s in range(50)}
        assert "00" in seen
        assert len(list(all_subsets(2))) == 4
