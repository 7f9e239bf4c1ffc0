"""Command-line front end: batch subcommands over the documented file
formats.  Every stochastic subcommand takes a required --seed."""
from __future__ import annotations

import sys

import click
import numpy as np
from scipy import ndimage

from . import fileio
from .coverage import coverage_report
from .experiment import (
    ExperimentConfig,
    run_cross_validation,
    run_experiment,
)
from .fitting import (
    FitConfig,
    Hyperparameters,
    find_C_and_theta,
    find_C_given_theta,
    mcmc_fit,
    observed_lengths,
    rescale,
)
from .geometry import BinaryGrid, GeometryError, grid_to_contour
from .model import credible_region, gridded_probability, sample_contours
from .representation import (
    LineSet,
    MODE_OVER,
    MODE_UNDER,
    star_shapedness_report,
)
from .shapes import AppendSpec

_ERRORS = (GeometryError, ValueError, OSError, fileio.FileFormatError)


def _fail(e) -> "click.ClickException":
    return click.ClickException(str(e))


@click.group()
def main():
    """Star-shaped contour modeling: representation, fitting, sampling,
    credible regions, coverage, and simulation studies."""


@main.command()
@click.argument("raster", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--threshold", default=0.15, show_default=True,
              help="concentration fraction defining membership")
def ingest(raster, out, threshold):
    """Threshold a raster, keep the largest 4-connected region, fill holes,
    and trace its boundary to a contour file."""
    try:
        rows, cols, origin, cell, data = fileio.read_raster(raster)
        mask = data >= threshold
        labels, n = ndimage.label(mask, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
        if n == 0:
            raise fileio.FileFormatError("no region above the threshold")
        sizes = ndimage.sum_labels(mask, labels, index=np.arange(1, n + 1))
        mask = labels == (1 + int(np.argmax(sizes)))
        mask = ndimage.binary_fill_holes(mask)
        grid = BinaryGrid(rows=rows, cols=cols, origin=origin, cell=cell,
                          values=mask)
        contour = grid_to_contour(grid)
        fileio.write_contours(out, [contour])
    except _ERRORS as e:
        raise _fail(e)


def _fit_config(cfg: dict) -> FitConfig:
    keys = ("delta", "growth", "p0", "mode", "grid_resolution", "eps", "max_p")
    return FitConfig(**{k: cfg[k] for k in keys if k in cfg})


def _hyper(cfg: dict) -> Hyperparameters:
    h = cfg.get("hyper", {})
    keys = ("mu0", "lambda0", "beta_kappa", "beta_sigma")
    return Hyperparameters(**{k: h[k] for k in keys if k in h})


@main.command()
@click.argument("contours", type=click.Path(exists=True))
@click.argument("config", type=click.Path(exists=True))
@click.option("--lineset-out", required=True, type=click.Path(),
              help="fitted line set + rescale record")
@click.option("--posterior-out", required=True, type=click.Path(),
              help="posterior draw table")
@click.option("--seed", required=True, type=int)
def fit(contours, config, lineset_out, posterior_out, seed):
    """Rescale contours, select the starting point and angles, and sample
    the posterior of (mu, sigma, kappa)."""
    try:
        S_list, _ = fileio.read_contours(contours)
        if len(S_list) < 2:
            raise fileio.FileFormatError(
                "fitting requires at least 2 contours (variance undefined)")
        cfg = fileio.read_config(config)
        fit_cfg = _fit_config(cfg)
        rescaled, tr = rescale(S_list, eps=fit_cfg.eps)
        if cfg.get("fixed_p"):
            theta = LineSet.evenly_spaced(np.zeros(2), int(cfg["fixed_p"])).theta
            C = find_C_given_theta(rescaled, theta, fit_cfg)
        else:
            C, theta = find_C_and_theta(rescaled, fit_cfg)
        Y = observed_lengths(rescaled, C, theta, fit_cfg.mode)
        samples = mcmc_fit(Y, theta, _hyper(cfg),
                           iters=int(cfg.get("iters", 50_000)),
                           burnin=int(cfg.get("burnin", 15_000)), seed=seed)
        fileio.write_line_set(lineset_out, LineSet(C=C, theta=theta),
                              transform=tr, mode=fit_cfg.mode)
        fileio.write_posterior(posterior_out, samples)
    except _ERRORS as e:
        raise _fail(e)


@main.command()
@click.argument("model", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--k", "count", required=True, type=int, help="number of contours")
@click.option("--seed", required=True, type=int)
def sample(model, out, count, seed):
    """Draw contours from a model parameter file."""
    try:
        params = fileio.read_model_params(model)
        fileio.write_contours(out, sample_contours(params, count, seed))
    except _ERRORS as e:
        raise _fail(e)


@main.command()
@click.argument("contours", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--rows", required=True, type=int)
@click.option("--cols", required=True, type=int)
@click.option("--origin-x", default=0.0, show_default=True)
@click.option("--origin-y", default=0.0, show_default=True)
@click.option("--cell", required=True, type=float)
def probgrid(contours, out, rows, cols, origin_x, origin_y, cell):
    """Per-cell inclusion probabilities from a set of contours."""
    try:
        S_list, _ = fileio.read_contours(contours)
        grid = gridded_probability(S_list, rows, cols, (origin_x, origin_y), cell)
        fileio.write_probability_grid(out, grid)
    except _ERRORS as e:
        raise _fail(e)


@main.command()
@click.argument("grid", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--alpha", required=True, type=float)
def credible(grid, out, alpha):
    """Credible region: cells with alpha/2 < p < 1 - alpha/2."""
    try:
        pg = fileio.read_probability_grid(grid)
        fileio.write_credible_region(out, credible_region(pg, alpha))
    except _ERRORS as e:
        raise _fail(e)


@main.command()
@click.argument("contours", type=click.Path(exists=True))
@click.argument("region", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--cx", required=True, type=float, help="test-line origin x")
@click.option("--cy", required=True, type=float, help="test-line origin y")
@click.option("--m", "n_lines", default=100, show_default=True,
              help="number of test lines")
@click.option("--summary-out", type=click.Path(), default=None,
              help="also write the (alpha, mean, sd) summary")
def coverage(contours, region, out, cx, cy, n_lines, summary_out):
    """Per-line coverage of a credible region by test contours."""
    try:
        S_list, _ = fileio.read_contours(contours)
        reg = fileio.read_credible_region(region)
        report = coverage_report(S_list, reg, (cx, cy), M=n_lines)
        fileio.write_coverage_report(out, report)
        if summary_out:
            fileio.write_coverage_summary(summary_out, [
                (reg.alpha, report.grand_mean, report.sd_across_lines)])
    except _ERRORS as e:
        raise _fail(e)


def _experiment_config(cfg: dict, seed: int) -> ExperimentConfig:
    cfg = dict(cfg)
    cfg.pop("cross_validation", None)
    if cfg.pop("desk_scale", False):
        cfg.setdefault("runs", 10)
        cfg.setdefault("mcmc_iters", 10_000)
        cfg.setdefault("mcmc_burnin", 3_000)
    if "append" in cfg and cfg["append"] is not None:
        a = dict(cfg["append"])
        for k in ("offset_range", "width_range"):
            if k in a:
                a[k] = tuple(a[k])
        cfg["append"] = AppendSpec(**a)
    if "hyper" in cfg:
        cfg["hyper"] = Hyperparameters(**cfg["hyper"])
    if "alphas" in cfg:
        cfg["alphas"] = tuple(cfg["alphas"])
    cfg["seed"] = seed
    return ExperimentConfig(**cfg)


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--seed", required=True, type=int)
@click.option("--threads", default=1, show_default=True,
              help="worker process cap for evaluation runs")
def experiment(config, out, seed, threads):
    """Run a simulation study (or leave-one-out cross-validation when the
    config names a contour file) and write the coverage summary table."""
    try:
        cfg = fileio.read_config(config)
        cv = cfg.get("cross_validation")
        econf = _experiment_config(cfg, seed)
        if cv:
            S_list, _ = fileio.read_contours(cv)
            result = run_cross_validation(S_list, econf)
            rows = [(a, m, s) for (a, m, s) in
                    ((alpha, result.mean_coverage(alpha),
                      result.sd_across_lines(alpha))
                     for alpha in result.alphas)]
            p_hat = float(result.p)
        else:
            result = run_experiment(econf, threads=threads)
            rows = [(alpha, result.mean_coverage(alpha),
                     result.sd_across_lines(alpha))
                    for alpha in econf.alphas]
            p_hat = result.mean_p_hat()
        with open(out, "w", newline="", encoding="utf-8") as fh:
            fh.write("alpha,mean,sd_across_lines,mean_p_hat\n")
            for alpha, mean, sd in rows:
                fh.write(",".join(fileio.FMT % v
                                  for v in (alpha, mean, sd, p_hat)) + "\n")
    except _ERRORS as e:
        raise _fail(e)


@main.command("report-starshape")
@click.argument("contours", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--p", "n_lines", default=200, show_default=True,
              help="evenly spaced line count")
@click.option("--mode", default="both", show_default=True,
              type=click.Choice(["under", "over", "both"]))
@click.option("--grid-resolution", default=50, show_default=True)
def report_starshape(contours, out, n_lines, mode, grid_resolution):
    """Star-shapedness report: minimized differing area as a percentage of
    each contour's own area."""
    try:
        S_list, ids = fileio.read_contours(contours)
        modes = (MODE_UNDER, MODE_OVER) if mode == "both" else (mode,)
        entries = star_shapedness_report(S_list, n_lines, modes=modes,
                                         grid_resolution=grid_resolution)
        # report file carries the input ids, not positional indices
        by_pos = {i: cid for i, cid in enumerate(ids)}
        entries = [type(e)(contour_id=by_pos[e.contour_id], mode=e.mode,
                           pct_differing_area=e.pct_differing_area, C=e.C,
                           differing_area=e.differing_area)
                   for e in entries]
        fileio.write_starshape_report(out, entries)
    except _ERRORS as e:
        raise _fail(e)


if __name__ == "__main__":
    sys.exit(main())
