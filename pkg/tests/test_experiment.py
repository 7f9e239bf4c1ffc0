import numpy as np
import pytest

from starcontour import (
    AppendSpec,
    ExperimentConfig,
    builtin_shape,
    points_from_lengths,
    run_cross_validation,
    run_experiment,
    sample_lengths,
)


TINY_ORACLE = dict(oracle=True, oracle_samples=150, runs=3, M=40,
                   rows=48, cols=48)


class TestExperimentConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(runs=0)
        with pytest.raises(ValueError):
            ExperimentConfig(alphas=(0.2, 1.5))


class TestRunExperiment:
    def test_deterministic_in_seed(self):
        cfg = ExperimentConfig(seed=3, **TINY_ORACLE)
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        for alpha in cfg.alphas:
            assert np.array_equal(a.W[alpha], b.W[alpha])
        assert np.array_equal(a.p_hat, b.p_hat)

    def test_threads_do_not_change_results(self):
        cfg = ExperimentConfig(seed=4, **TINY_ORACLE)
        a = run_experiment(cfg, threads=1)
        b = run_experiment(cfg, threads=2)
        for alpha in cfg.alphas:
            assert np.array_equal(a.W[alpha], b.W[alpha])

    def test_oracle_mode_near_nominal(self):
        cfg = ExperimentConfig(seed=0, oracle=True, oracle_samples=500,
                               runs=12, M=60, rows=64, cols=64)
        res = run_experiment(cfg)
        for alpha in cfg.alphas:
            # loose Monte Carlo bound at this tiny scale
            assert abs(res.mean_coverage(alpha) - (1 - alpha)) < 0.12

    def test_table_layout(self):
        cfg = ExperimentConfig(seed=1, **TINY_ORACLE)
        res = run_experiment(cfg)
        rows = res.table()
        assert len(rows) == 3
        assert [r[0] for r in rows] == [0.8, 0.9, 0.95]

    def test_fitted_mode_runs(self):
        cfg = ExperimentConfig(seed=2, runs=1, n_train=6, fixed_p=12, M=30,
                               rows=32, cols=32, mcmc_iters=600,
                               mcmc_burnin=200, n_sample=20)
        res = run_experiment(cfg)
        assert res.p_hat[0] == 12
        assert res.W[0.1].shape == (1, 30)

    def test_appended_sections_run(self):
        cfg = ExperimentConfig(seed=5, runs=1, n_train=5, fixed_p=12, M=20,
                               rows=32, cols=32, mcmc_iters=400,
                               mcmc_burnin=100, n_sample=15, mode="under",
                               append=AppendSpec(location="fixed"))
        res = run_experiment(cfg)
        assert res.W[0.05].shape == (1, 20)


class TestCrossValidation:
    def test_leave_one_out(self):
        params = builtin_shape("A")
        Y = sample_lengths(params, 5, seed=6)
        contours = [points_from_lengths(params.lines, y) for y in Y]
        cfg = ExperimentConfig(seed=7, fixed_p=12, M=24, rows=32, cols=32,
                               mcmc_iters=500, mcmc_burnin=150, n_sample=15,
                               alphas=(0.2,))
        res = run_cross_validation(contours, cfg)
        assert res.W[0.2].shape == (5, 24)
        assert res.p == 12
        assert 0.0 <= res.mean_coverage(0.2) <= 1.0

    def test_needs_three_contours(self):
        params = builtin_shape("A")
        Y = sample_lengths(params, 2, seed=8)
        contours = [points_from_lengths(params.lines, y) for y in Y]
        with pytest.raises(ValueError):
            run_cross_validation(contours, ExperimentConfig())
