"""Simulation studies: seeded end-to-end runs that train on sampled
contours, build credible regions, and score per-direction coverage; plus a
leave-one-out cross-validation runner for observed contour sets."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coverage import coverage_report
from .fitting import (
    FitConfig,
    Hyperparameters,
    find_C_and_theta,
    find_C_given_theta,
    mcmc_fit,
    observed_lengths,
    posterior_predictive_lengths,
)
from .model import (
    GscmParams,
    credible_region,
    gridded_probability_from_lengths,
    sample_lengths,
)
from .representation import LineSet, MODE_EXACT, points_from_lengths
from .shapes import AppendSpec, append_section, builtin_shape


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation study: fit (or oracle-score) a shape's contour
    distribution over independent evaluation runs."""

    shape: str = "A"
    kappa: float | None = None
    n_train: int = 20
    runs: int = 40
    delta: float = 0.02
    fixed_p: int | None = None      # skip the angle search; optimize C only
    mode: str = MODE_EXACT
    M: int = 100
    alphas: tuple = (0.2, 0.1, 0.05)
    n_sample: int = 100             # contours per fitted model for the grid
    rows: int = 64
    cols: int = 64
    mcmc_iters: int = 50_000
    mcmc_burnin: int = 15_000
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    append: AppendSpec | None = None
    oracle: bool = False            # score the true model, no fitting
    oracle_samples: int = 2000
    growth: float = 1.25
    p0: int = 8
    grid_resolution: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("need at least one evaluation run")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("alpha levels must lie in (0, 1)")


@dataclass(frozen=True)
class ExperimentResult:
    """Coverage per (alpha, run, line) plus the per-run selected line count."""

    config: ExperimentConfig
    W: dict                     # alpha -> (runs, M) boolean array
    p_hat: np.ndarray           # (runs,)

    def mean_coverage(self, alpha: float) -> float:
        return float(self.W[alpha].mean())

    def per_line_coverage(self, alpha: float) -> np.ndarray:
        return self.W[alpha].mean(axis=0)

    def sd_across_lines(self, alpha: float) -> float:
        return float(np.std(self.per_line_coverage(alpha), ddof=1))

    def mean_p_hat(self) -> float:
        return float(np.mean(self.p_hat))

    def table(self):
        """Rows of (nominal level, mean coverage, sd across lines)."""
        return [(1.0 - a, self.mean_coverage(a), self.sd_across_lines(a))
                for a in self.config.alphas]


def _true_params(config: ExperimentConfig) -> GscmParams:
    return builtin_shape(config.shape, kappa=config.kappa)


def _grid_geom(config: ExperimentConfig):
    return dict(rows=config.rows, cols=config.cols, origin=(0.0, 0.0),
                cell=1.0 / config.cols)


def _run_one(config: ExperimentConfig, run_seed: np.random.SeedSequence):
    """One evaluation run: returns ({alpha: (M,) bools}, p_hat)."""
    params = _true_params(config)
    sub = run_seed.spawn(5)
    train_Y = sample_lengths(params, config.n_train, sub[0])
    train = [points_from_lengths(params.lines, y) for y in train_Y]
    if config.append is not None:
        append_seeds = sub[1].spawn(config.n_train + 1)
        train = [append_section(S, params.lines, config.append, s)
                 for S, s in zip(train, append_seeds[:-1])]
    test_Y = sample_lengths(params, 1, sub[2])
    test = points_from_lengths(params.lines, test_Y[0])
    if config.append is not None:
        test = append_section(test, params.lines, config.append,
                              append_seeds[-1])

    geom = _grid_geom(config)
    if config.oracle:
        pred_Y = sample_lengths(params, config.oracle_samples, sub[3])
        pred_lines = params.lines
        p_hat = params.p
        C_star = params.lines.C
    else:
        fit_cfg = FitConfig(delta=config.delta, growth=config.growth,
                            p0=config.p0, mode=config.mode,
                            grid_resolution=config.grid_resolution)
        if config.fixed_p is not None:
            theta = LineSet.evenly_spaced(np.zeros(2), config.fixed_p).theta
            C = find_C_given_theta(train, theta, fit_cfg)
        else:
            C, theta = find_C_and_theta(train, fit_cfg)
        p_hat = theta.size
        pred_lines = LineSet(C=C, theta=theta)
        Y = observed_lengths(train, C, theta, config.mode)
        mcmc_seed = int(sub[4].generate_state(1)[0] % (2**31))
        samples = mcmc_fit(Y, theta, config.hyper, iters=config.mcmc_iters,
                           burnin=config.mcmc_burnin, seed=mcmc_seed)
        pred_Y = posterior_predictive_lengths(samples, config.n_sample,
                                              seed=mcmc_seed)
        C_star = params.lines.C  # simulations score against the true center
    grid = gridded_probability_from_lengths(pred_lines, pred_Y, **geom)
    out = {}
    for alpha in config.alphas:
        region = credible_region(grid, alpha)
        report = coverage_report([test], region, C_star, M=config.M)
        out[alpha] = report.W[0]
    return out, p_hat


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Execute all evaluation runs (optionally in parallel worker processes;
    results are identical either way) and aggregate coverage."""
    run_seeds = np.random.SeedSequence(config.seed).spawn(config.runs)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, [config] * config.runs, run_seeds))
    else:
        results = [_run_one(config, s) for s in run_seeds]
    W = {alpha: np.vstack([r[0][alpha] for r in results])
         for alpha in config.alphas}
    p_hat = np.array([r[1] for r in results], dtype=float)
    return ExperimentResult(config=config, W=W, p_hat=p_hat)


@dataclass(frozen=True)
class CrossValidationResult:
    alphas: tuple
    W: dict                     # alpha -> (folds, M) booleans
    p: int

    def mean_coverage(self, alpha: float) -> float:
        return float(self.W[alpha].mean())

    def sd_across_lines(self, alpha: float) -> float:
        return float(np.std(self.W[alpha].mean(axis=0), ddof=1))

    def table(self):
        return [(1.0 - a, self.mean_coverage(a), self.sd_across_lines(a))
                for a in self.alphas]


def run_cross_validation(contours, config: ExperimentConfig) -> CrossValidationResult:
    """Leave-one-out over observed contours: fit on the rest, score coverage
    of the held-out contour.  The starting point is re-estimated per fold and
    the test lines use the fitted center."""
    contours = list(contours)
    n = len(contours)
    if n < 3:
        raise ValueError("cross-validation needs at least 3 contours")
    fit_cfg = FitConfig(delta=config.delta, growth=config.growth, p0=config.p0,
                        mode=config.mode, grid_resolution=config.grid_resolution)
    geom = _grid_geom(config)
    seeds = np.random.SeedSequence(config.seed).spawn(n)
    rows_W = {alpha: [] for alpha in config.alphas}
    p_used = None
    for fold in range(n):
        train = contours[:fold] + contours[fold + 1:]
        held_out = contours[fold]
        if config.fixed_p is not None:
            theta = LineSet.evenly_spaced(np.zeros(2), config.fixed_p).theta
            C = find_C_given_theta(train, theta, fit_cfg)
        else:
            C, theta = find_C_and_theta(train, fit_cfg)
        p_used = theta.size
        Y = observed_lengths(train, C, theta, config.mode)
        mcmc_seed = int(seeds[fold].generate_state(1)[0] % (2**31))
        samples = mcmc_fit(Y, theta, config.hyper, iters=config.mcmc_iters,
                           burnin=config.mcmc_burnin, seed=mcmc_seed)
        pred_Y = posterior_predictive_lengths(samples, config.n_sample,
                                              seed=mcmc_seed)
        grid = gridded_probability_from_lengths(LineSet(C=C, theta=theta),
                                                pred_Y, **geom)
        for alpha in config.alphas:
            region = credible_region(grid, alpha)
            report = coverage_report([held_out], region, C, M=config.M)
            rows_W[alpha].append(report.W[0])
    W = {alpha: np.vstack(rows_W[alpha]) for alpha in config.alphas}
    return CrossValidationResult(alphas=config.alphas, W=W, p=p_used)
