import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaen.data import Dataset, SynthSpec, generate_synthetic, kfold_split
from gaen.errors import ConfigurationError, FoldError, UndefinedMetricError
from gaen.ga import FitnessWeights, GAConfig
from gaen.pipeline import (FSP_GRID, ComparisonReport, ComparisonRow,
                           EvalResult, FoldOutcome, PipelineConfig,
                           compare_methods, derive_seed, fsp_subset,
                           grid_tune, nested_cv_evaluate, outer_folds,
                           relative_rmse_cv, rmse_cv, run_layer1, run_layer2)
from gaen.regress import TuneGrid, predict

# a small GA keeps these tests quick; default sizes are exercised elsewhere
TINY_GA = GAConfig(population_size=10, generations=3, n_best=3, n_random=1,
                   n_children=5)
FAST = PipelineConfig(ga=TINY_GA, n_ga_iterations=3,
                      grid=TuneGrid(alphas=(0.01, 0.1, 1.0), rhos=(0.5, 0.9)))


@pytest.fixture(scope="module")
def small():
    d, support, _ = generate_synthetic(SynthSpec(n=24, P=15, k_true=2,
                                                 noise_sd=0.3, seed=5))
    return d, support


class TestMetrics:
    def test_perfect(self):
        assert rmse_cv([[1, 2]], [[1, 2]]) == 0

    def test_single_fold(self):
        assert rmse_cv([[1, 2, 3]], [[2, 2, 2]]) == pytest.approx(math.sqrt(2 / 3))

    def test_mean_of_folds(self):
        assert rmse_cv([[0.2], [0.4]], [[0.0], [0.0]]) == pytest.approx(0.3)

    def test_empty_fold(self):
        with pytest.raises(ValueError):
            rmse_cv([[]], [[]])

    def test_relative(self):
        assert relative_rmse_cv(0.8165, 2) == pytest.approx(0.40825)
        assert relative_rmse_cv(0, 2) == 0
        assert relative_rmse_cv(3, 2) == 1.5

    def test_zero_mean(self):
        with pytest.raises(UndefinedMetricError, match="absolute"):
            relative_rmse_cv(1.0, 0.0)


class TestFsp:
    def test_examples(self):
        counts = np.array([2, 1, 4, 0])
        assert fsp_subset(counts, 5, 0.3) == ((0, 2), False)
        assert fsp_subset(counts, 5, 0.7) == ((2,), False)

    def test_boundary_inclusive(self):
        # 3 of 5 is exactly 0.6
        assert fsp_subset([3, 2], 5, 0.6) == ((0,), False)

    def test_fallback(self):
        assert fsp_subset([1, 2, 2, 0], 5, 0.7) == ((1, 2), True)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 10).flatmap(
        lambda n: st.tuples(st.just(n),
                            st.lists(st.integers(0, n), min_size=1, max_size=30))),
        st.floats(0.01, 1.0), st.floats(0.01, 1.0))
    def test_monotone(self, nc, a, b):
        n, counts = nc
        lo, hi = sorted((a, b))
        s_lo, r_lo = fsp_subset(counts, n, lo)
        s_hi, r_hi = fsp_subset(counts, n, hi)
        if not (r_lo or r_hi):
            assert set(s_hi) <= set(s_lo)
        assert len(s_hi) >= 1


class TestLayers:
    def test_layer1(self, small):
        d, _ = small
        l1 = run_layer1(d, FAST)
        assert len(l1.per_iteration_best) == 3
        assert l1.counts.sum() == sum(b.bits.sum() for b in l1.per_iteration_best)
        need = math.ceil(FAST.fsp * 3)
        if not l1.relaxed:
            assert set(l1.final_subset) == set(np.flatnonzero(l1.counts >= need))
        assert l1.final_subset

    def test_layer1_iterations_differ(self, small):
        d, _ = small
        l1 = run_layer1(d, FAST)
        assert len({b.key for b in l1.per_iteration_best}) > 1

    def test_layer2_single_predictor(self):
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2, 20).astype(float)
        d = Dataset(x[:, None], 3 * x + 2)
        m = run_layer2(d, TuneGrid(alphas=(0.004, 0.01), rhos=(0.5,)))
        assert m.selected == (0,)
        assert np.abs(d.response - predict(m, d.predictors)).max() < 0.05

    def test_layer2_kill_switch(self, small):
        d, _ = small
        m = run_layer2(d, TuneGrid(alphas=(1e6,), rhos=(1.0,)))
        assert m.selected == ()
        assert m.intercept == pytest.approx(d.y_mean)

    def test_layer_monotonicity(self, small):
        d, _ = small
        res = nested_cv_evaluate(d, FAST, "GA-EN")
        for f in res.per_fold:
            assert f.selected_count <= f.layer1_count <= d.P
            assert set(f.selected) <= set(res.layer1[f.fold].final_subset)


class TestNested:
    def test_mean_of_counts(self):
        outs = [FoldOutcome(i, c, 1.0, 0.5) for i, c in enumerate((5, 6, 7))]
        from gaen.pipeline import _aggregate
        assert _aggregate("EN", outs, 2.0).mean_final_predictors == 6.0

    def test_en_degenerate_grid_is_plain_kfold(self, small):
        d, _ = small
        from gaen.regress import ENHyperParams, fit_elastic_net
        cfg = replace(FAST, grid=TuneGrid(alphas=(0.1,), rhos=(0.5,)))
        res = nested_cv_evaluate(d, cfg, "EN")
        errs = []
        for tr, va in outer_folds(d, cfg).splits():
            m = fit_elastic_net(d.predictors[tr], d.response[tr],
                                ENHyperParams(0.1, 0.5), standardize=True)
            p = predict(m, d.predictors[va])
            errs.append(np.sqrt(np.mean((d.response[va] - p) ** 2)))
        assert res.rmse_cv == pytest.approx(np.mean(errs), rel=1e-10)

    def test_noiseless_one_sparse(self):
        d, _, _ = generate_synthetic(SynthSpec(n=30, P=10, k_true=1,
                                               noise_sd=0, seed=3))
        cfg = PipelineConfig(weights=FitnessWeights(0.85, 0.15), fsp=0.5,
                             ga=GAConfig(generations=10))
        res = nested_cv_evaluate(d, cfg, "GA-EN")
        assert res.relative_rmse_cv < 0.05

    def test_unclamped(self, small):
        d, _ = small
        res = nested_cv_evaluate(d, FAST, "GA-Lr")
        assert res.relative_rmse_cv == pytest.approx(res.rmse_cv / d.y_mean)

    def test_imputes_missing(self):
        d, _, _ = generate_synthetic(SynthSpec(n=18, P=8, k_true=2,
                                               missing_rate=0.1, seed=1))
        assert d.has_missing
        res = nested_cv_evaluate(d, FAST, "EN")
        assert np.isfinite(res.relative_rmse_cv)

    def test_fold_error_names_fold(self, small, monkeypatch):
        d, _ = small
        import gaen.pipeline as pl

        def boom(*a, **k):
            raise RuntimeError("bad")
        monkeypatch.setattr(pl, "run_layer2", boom)
        with pytest.raises(FoldError, match="fold 0"):
            nested_cv_evaluate(d, FAST, "EN")

    def test_too_few_rows(self):
        d = Dataset(np.ones((2, 1)), [1.0, 2.0])
        with pytest.raises(ConfigurationError):
            nested_cv_evaluate(d, FAST, "EN")

    def test_unknown_method(self, small):
        with pytest.raises(ConfigurationError):
            nested_cv_evaluate(small[0], FAST, "SVM")

    def test_tune_inside(self, small):
        d, _ = small
        cfg = replace(FAST, tune_inside=True, n_ga_iterations=2,
                      ga=replace(TINY_GA, generations=1))
        res = nested_cv_evaluate(d, cfg, "GA-EN")
        assert all(f.fsp in FSP_GRID for f in res.per_fold)


class TestGridTune:
    def test_twelve_cells(self, small):
        d, _ = small
        cfg = replace(FAST, n_ga_iterations=2, ga=replace(TINY_GA, generations=2))
        res = grid_tune(d, cfg)
        assert len(res.cells) == 12
        table = res.cells_table()
        assert {(c["w_r"], c["fsp"]) for c in table} == {
            (w, f) for w in (0.15, 0.5, 0.85, 1.0) for f in FSP_GRID}
        best = min(c["relative_rmse_cv"] for c in table)
        assert res.result.relative_rmse_cv == best
        assert w_p_preferred(table, res)

    def test_single_cell(self, small):
        d, _ = small
        w = FitnessWeights(0.5, 0.5)
        res = grid_tune(d, FAST, scenarios=(w,), fsps=(0.5,))
        assert (res.weights, res.fsp) == (w, 0.5)


def w_p_preferred(table, res):
    tied = [c for c in table if c["relative_rmse_cv"] == res.result.relative_rmse_cv]
    top = max(tied, key=lambda c: (c["w_p"], c["fsp"]))
    return (top["w_p"], top["fsp"]) == (res.weights.w_p, res.fsp)


@pytest.fixture(scope="module")
def report(small):
    return compare_methods(small[0], FAST)


class TestCompare:
    def test_rows(self, report, small):
        assert [r.method for r in report.rows] == ["GA-EN", "EN", "GA-Lr"]
        assert {r.n_original for r in report.rows} == {small[0].P}

    def test_shared_folds_and_layer1(self, report):
        ga, lr = report.results["GA-EN"], report.results["GA-Lr"]
        assert [l.final_subset for l in ga.layer1] == [l.final_subset for l in lr.layer1]
        assert report.to_dict()["outer_folds"] == report.folds.to_dict()
        for m in ("GA-EN", "EN", "GA-Lr"):
            assert [f.fold for f in report.results[m].per_fold] == [0, 1, 2]

    def test_deterministic(self, report, small):
        again = compare_methods(small[0], FAST)
        assert json.dumps(report.to_dict(), sort_keys=True) == \
            json.dumps(again.to_dict(), sort_keys=True)

    def test_table_headers(self, report):
        head = report.to_table().splitlines()[0]
        for h in ("Method", "# original predictors", "# final predictors",
                  "relative RMSE_CV (%)"):
            assert h in head


class TestOver100:
    def test_display_and_json(self):
        row = ComparisonRow("GA-Lr", 120, 80.0, 187.4321)
        assert row.over_100 and row.display_rmse() == ">100"
        d = json.loads(json.dumps(row.to_dict()))
        assert d["relative_rmse_cv_pct"] == 187.4321
        assert d["relative_rmse_cv_display"] == ">100"
        ok = ComparisonRow("EN", 120, 25.66, 39.44)
        assert not ok.over_100 and ok.display_rmse() == "39.44"


def test_seed_streams_independent():
    assert derive_seed(0, 1, 0, 0) != derive_seed(0, 1, 0, 1)
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 0) != derive_seed(1, 0)


def test_config_roundtrip():
    cfg = replace(FAST, weights=FitnessWeights(0.15, 0.85), fsp=0.7, seed=9)
    assert PipelineConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ConfigurationError):
        PipelineConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigurationError):
        PipelineConfig(fsp=0)
