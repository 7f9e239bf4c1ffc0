"""Generative contour model: Gaussian length vectors with angular
exponential covariance, plus gridded inclusion probabilities and credible
regions computed from sampled contours."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, LinAlgError
from scipy.stats import norm

from .geometry import BinaryGrid, ContourPointSequence, Polygon, contour_to_grid, \
    grid_sample_points, _SUBS
from .representation import LineSet, points_from_lengths

TWO_PI = 2.0 * np.pi


class ModelError(ValueError):
    """Raised for invalid model parameters."""


def angular_distance(a, b):
    """Angle between two directions, in [0, pi] (wraparound-aware)."""
    diff = np.abs(np.asarray(a, float) - np.asarray(b, float))
    diff = diff % TWO_PI
    return np.minimum(diff, TWO_PI - diff)


def exp_covariance(sigma, kappa: float, theta) -> np.ndarray:
    """Covariance with entries sigma_i*sigma_j*exp(-d(theta_i, theta_j)/kappa)."""
    sigma = np.asarray(sigma, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    if sigma.size != theta.size:
        raise ModelError("sigma and theta must have equal length")
    if np.any(sigma <= 0.0):
        raise ModelError("sigma entries must be positive")
    if kappa <= 0.0:
        raise ModelError("kappa must be positive")
    d = angular_distance(theta[:, None], theta[None, :])
    cov = np.outer(sigma, sigma) * np.exp(-d / kappa)
    return 0.5 * (cov + cov.T)


def factor_covariance(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding escalating diagonal jitter
    (1e-10 .. 1e-6 times the largest variance) if factorization fails."""
    try:
        return cholesky(cov, lower=True)
    except LinAlgError:
        pass
    base = float(np.max(np.diag(cov)))
    jitter = 1e-10 * base
    while jitter <= 1e-6 * base:
        try:
            return cholesky(cov + jitter * np.eye(cov.shape[0]), lower=True)
        except LinAlgError:
            jitter *= 10.0
    raise ModelError("covariance is not positive definite even with jitter")


@dataclass(frozen=True)
class GscmParams:
    """Gaussian star-shaped contour model: lengths y ~ N(mu, Sigma(sigma,
    kappa, theta)), nonpositive draws floored at eta."""

    lines: LineSet
    mu: np.ndarray
    sigma: np.ndarray
    kappa: float
    eta: float = 1e-4

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        sigma = np.asarray(self.sigma, dtype=float).ravel()
        p = self.lines.p
        if mu.size != p or sigma.size != p:
            raise ModelError("mu and sigma must match the line set size")
        if np.any(sigma <= 0.0):
            raise ModelError("sigma entries must be positive")
        if self.kappa <= 0.0:
            raise ModelError("kappa must be positive")
        if self.eta <= 0.0:
            raise ModelError("eta must be positive")
        # Gaussian mass on nonpositive lengths must stay small (< 5% per
        # line; the eta floor is meant for rare draws only)
        if np.any(norm.cdf(-mu / sigma) >= 0.05):
            raise ModelError(
                "model places non-negligible mass on nonpositive lengths"
            )
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def p(self) -> int:
        return self.lines.p

    def covariance(self) -> np.ndarray:
        return exp_covariance(self.sigma, self.kappa, self.lines.theta)


def sample_lengths(params: GscmParams, K: int, seed) -> np.ndarray:
    """(K, p) length draws; each row uses its own RNG stream spawned from the
    seed, so the set of draws is independent of evaluation order.  Nonpositive
    components are floored at eta."""
    if K < 1:
        raise ModelError("K must be at least 1")
    L = factor_covariance(params.covariance())
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    children = ss.spawn(K)
    Y = np.empty((K, params.p))
    for k, child in enumerate(children):
        z = np.random.default_rng(child).standard_normal(params.p)
        Y[k] = params.mu + L @ z
    Y[Y <= 0.0] = params.eta
    return Y


def sample_contours(params: GscmParams, K: int, seed):
    """K contours drawn from the model (Gaussian lengths, reconnected in
    angle order)."""
    Y = sample_lengths(params, K, seed)
    return [points_from_lengths(params.lines, y) for y in Y]


@dataclass(frozen=True)
class ProbabilityGrid:
    """Per-cell inclusion probabilities estimated from K sampled contours."""

    rows: int
    cols: int
    origin: tuple
    cell: float
    values: np.ndarray = field(repr=False)
    K: int = 1

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.rows, self.cols):
            raise ModelError("probability values do not match grid dimensions")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ModelError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", v)


def gridded_probability(contours, rows: int, cols: int, origin, cell: float) -> ProbabilityGrid:
    """Mean of the per-contour majority-area binary grids."""
    contours = list(contours)
    if not contours:
        raise ModelError("need at least one contour")
    acc = np.zeros((rows, cols), dtype=np.int64)
    for S in contours:
        poly = S if isinstance(S, Polygon) else Polygon(S)
        acc += contour_to_grid(poly, rows, cols, origin, cell).values
    return ProbabilityGrid(rows=rows, cols=cols, origin=tuple(origin),
                           cell=float(cell), values=acc / len(contours),
                           K=len(contours))


def gridded_probability_from_lengths(lines: LineSet, Y: np.ndarray, rows: int,
                                     cols: int, origin, cell: float,
                                     chunk: int = 8) -> ProbabilityGrid:
    """Fast path of :func:`gridded_probability` for contours given as radial
    length vectors on a shared line set.  Applies the identical 4x4
    subsample majority rule via the radial inclusion test (a point is inside
    a radial polygon iff it lies on the interior side of the single edge
    spanning its angular wedge)."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != lines.p:
        raise ModelError("Y must be (K, p) for the line set")
    K = Y.shape[0]
    pts = grid_sample_points(rows, cols, origin, cell)
    rel = pts - lines.C
    phi = np.arctan2(rel[:, 1], rel[:, 0]) % TWO_PI
    phi[phi == 0.0] = TWO_PI
    theta = lines.theta
    # wedge index: edge from vertex k to k+1 spans (theta_k, theta_{k+1}]
    k_idx = np.searchsorted(theta, phi, side="left")
    k0 = (k_idx - 1) % lines.p
    k1 = k_idx % lines.p
    # edge test in polar form: with rs0 = r sin(phi - theta_k0),
    # rs1 = r sin(theta_k1 - phi), s = sin(theta_k1 - theta_k0), a point is
    # on the interior side iff y_k0 rs0 + y_k1 rs1 < y_k0 y_k1 s (same cross
    # product as the general rasterizer, expanded about C)
    rs0 = (rel[:, 1] * np.cos(theta[k0])
           - rel[:, 0] * np.sin(theta[k0])).astype(np.float32)
    rs1 = (rel[:, 0] * np.sin(theta[k1])
           - rel[:, 1] * np.cos(theta[k1])).astype(np.float32)
    s = np.sin(theta[k1] - theta[k0]).astype(np.float32)
    Y32 = Y.astype(np.float32)
    cell_acc = np.zeros(rows * cols, dtype=np.int64)
    for lo in range(0, K, chunk):
        yk0 = Y32[lo:lo + chunk, k0]  # (c, npts)
        yk1 = Y32[lo:lo + chunk, k1]
        inside = yk0 * rs0 + yk1 * rs1 < yk0 * yk1 * s
        per_cell = inside.reshape(inside.shape[0], rows * cols,
                                  _SUBS * _SUBS).sum(axis=2, dtype=np.int16)
        cell_acc += (per_cell > (_SUBS * _SUBS) // 2).sum(axis=0)
    values = (cell_acc / K).reshape(rows, cols)
    return ProbabilityGrid(rows=rows, cols=cols, origin=tuple(origin),
                           cell=float(cell), values=values, K=K)


@dataclass(frozen=True)
class CredibleRegion:
    """Union of grid cells whose inclusion probability lies strictly between
    alpha/2 and 1 - alpha/2."""

    alpha: float
    rows: int
    cols: int
    origin: tuple
    cell: float
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != (self.rows, self.cols):
            raise ModelError("mask does not match grid dimensions")
        if not 0.0 < self.alpha < 1.0:
            raise ModelError("alpha must lie in (0, 1)")
        object.__setattr__(self, "mask", m)

    @property
    def cells(self):
        return {(int(i), int(j)) for i, j in zip(*np.nonzero(self.mask))}


def credible_region(grid: ProbabilityGrid, alpha: float) -> CredibleRegion:
    """Cells with alpha/2 < p_hat < 1 - alpha/2 (both inequalities strict)."""
    if not 0.0 < alpha < 1.0:
        raise ModelError("alpha must lie in (0, 1)")
    mask = (grid.values > alpha / 2.0) & (grid.values < 1.0 - alpha / 2.0)
    return CredibleRegion(alpha=alpha, rows=grid.rows, cols=grid.cols,
                          origin=grid.origin, cell=grid.cell, mask=mask)
