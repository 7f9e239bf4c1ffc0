"""Model fitting: rescaling, starting-point and angle selection, and MCMC
posterior sampling of the Gaussian length model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .geometry import (
    ContourPointSequence,
    GeometryError,
    Polygon,
    kernel_intersection,
    polygon_area,
)
from .model import ModelError, exp_covariance, factor_covariance
from .representation import (
    LineSet,
    MODE_EXACT,
    MODES,
    _candidate_grid,
    differing_area,
    star_lengths,
)


class FitError(ValueError):
    """Raised when fitting preconditions fail or the search cannot finish."""


@dataclass(frozen=True)
class RescaleTransform:
    """Affine map taking observed coordinates into the buffered unit square;
    invertible exactly."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    eps: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        s = 1.0 - 2.0 * self.eps
        out = np.empty_like(pts)
        out[..., 0] = self.eps + s * (pts[..., 0] - self.x_min) / (self.x_max - self.x_min)
        out[..., 1] = self.eps + s * (pts[..., 1] - self.y_min) / (self.y_max - self.y_min)
        return out

    def invert(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        s = 1.0 - 2.0 * self.eps
        out = np.empty_like(pts)
        out[..., 0] = self.x_min + (pts[..., 0] - self.eps) * (self.x_max - self.x_min) / s
        out[..., 1] = self.y_min + (pts[..., 1] - self.eps) * (self.y_max - self.y_min) / s
        return out


def rescale(contours, eps: float = 0.1):
    """Map all contours jointly into [eps, 1-eps]^2; the global coordinate
    extremes land exactly on the buffer edges.  Returns the rescaled contours
    and the transform record."""
    contours = list(contours)
    if not contours:
        raise FitError("need at least one contour")
    if not 0.0 <= eps < 0.5:
        raise FitError("eps must lie in [0, 0.5)")
    allpts = np.vstack([c.points for c in contours])
    x_min, y_min = allpts.min(axis=0)
    x_max, y_max = allpts.max(axis=0)
    if x_max - x_min <= 0.0 or y_max - y_min <= 0.0:
        raise FitError("contours have zero coordinate range")
    tr = RescaleTransform(x_min=float(x_min), x_max=float(x_max),
                          y_min=float(y_min), y_max=float(y_max), eps=float(eps))
    rescaled = [ContourPointSequence(tr.apply(c.points), check_simple=False)
                for c in contours]
    return rescaled, tr


@dataclass(frozen=True)
class FitConfig:
    delta: float = 0.02
    growth: float = 1.25          # p-schedule factor, > 1
    p0: int = 8
    mode: str = MODE_EXACT
    grid_resolution: int = 25     # starting-point candidate lattice
    eps: float = 0.1
    max_p: int = 1000

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise FitError("delta must lie in (0, 1)")
        if self.growth <= 1.0:
            raise FitError("growth factor must exceed 1")
        if self.p0 <= 2:
            raise FitError("p0 must exceed 2")
        if not 0.0 <= self.eps < 0.5:
            raise FitError("eps must lie in [0, 0.5)")
        if self.mode not in MODES:
            raise FitError(f"unknown mode {self.mode!r}")


def _as_polygons(contours):
    return [S if isinstance(S, Polygon) else Polygon(S) for S in contours]


def _admissible_region(polys, mode: str) -> Polygon:
    """Search region for the starting point: intersection of kernels (exact
    mode, where every ray must cross the boundary exactly once) or of the
    polygons themselves (under/over)."""
    if mode == MODE_EXACT:
        region = kernel_intersection(polys)
        if region is None:
            raise FitError(
                "exact mode needs star-shaped contours with a common kernel point"
            )
        return region
    inter = polys[0].shapely
    for poly in polys[1:]:
        inter = inter.intersection(poly.shapely)
    if inter.is_empty or inter.area < 1e-12:
        raise FitError("observed polygons have no common interior point")
    if inter.geom_type == "MultiPolygon":
        inter = max(inter.geoms, key=lambda g: g.area)
    ring = np.asarray(inter.exterior.coords)[:-1]
    return Polygon(ContourPointSequence(ring, check_simple=False))


def _mean_differing_area(polys, lines: LineSet, mode: str) -> float:
    return float(np.mean([differing_area(lines, poly, mode) for poly in polys]))


def find_C_given_theta(contours, theta, config: FitConfig) -> np.ndarray:
    """Candidate-lattice minimizer of the mean differing area for the given
    angles.  Ties break to the lowest (row, col) lattice index."""
    polys = _as_polygons(contours)
    region = _admissible_region(polys, config.mode)
    cands = _candidate_grid(region, config.grid_resolution)
    if cands.shape[0] == 0:
        raise FitError("no candidate starting points inside the admissible region")
    theta = np.asarray(theta, dtype=float)
    best = math.inf
    best_C = None
    for C in cands:
        lines = LineSet(C=C, theta=theta)
        try:
            val = _mean_differing_area(polys, lines, config.mode)
        except GeometryError:
            continue
        if val < best:
            best = val
            best_C = C
    if best_C is None:
        raise FitError("no admissible candidate could be evaluated")
    return np.asarray(best_C, dtype=float)


def _area_budget(polys, delta: float) -> float:
    return delta * float(np.mean([polygon_area(p) for p in polys]))


def _p_schedule(config: FitConfig):
    p = config.p0
    while p <= config.max_p:
        yield p
        p = math.ceil(config.growth * p)


def find_theta_given_C(contours, C, config: FitConfig) -> np.ndarray:
    """Smallest evenly spaced angle count on the geometric growth schedule
    whose mean differing area drops below the delta budget."""
    polys = _as_polygons(contours)
    budget = _area_budget(polys, config.delta)
    C = np.asarray(C, dtype=float)
    for p in _p_schedule(config):
        lines = LineSet.evenly_spaced(C, p)
        if _mean_differing_area(polys, lines, config.mode) < budget:
            return lines.theta
    raise FitError(
        f"no p <= {config.max_p} satisfies the differing-area constraint"
    )


def find_C_and_theta(contours, config: FitConfig):
    """Alternating search: at each schedule size, re-optimize the starting
    point for the current evenly spaced angles, then test the area budget."""
    polys = _as_polygons(contours)
    budget = _area_budget(polys, config.delta)
    for p in _p_schedule(config):
        theta = LineSet.evenly_spaced(np.zeros(2), p).theta
        C = find_C_given_theta(polys, theta, config)
        lines = LineSet(C=C, theta=theta)
        if _mean_differing_area(polys, lines, config.mode) < budget:
            return C, theta
    raise FitError(
        f"no p <= {config.max_p} satisfies the differing-area constraint"
    )


def observed_lengths(contours, C, theta, mode: str = MODE_EXACT) -> np.ndarray:
    """(N, p) matrix of per-contour length vectors at the fitted line set."""
    lines = LineSet(C=np.asarray(C, float), theta=np.asarray(theta, float))
    rows = [star_lengths(lines, S, mode) for S in contours]
    return np.vstack(rows)


@dataclass(frozen=True)
class Hyperparameters:
    """Priors: mu ~ MVN(mu0, lambda0 * I) (or full covariance), kappa and
    each sigma_j uniform on (0, upper bound)."""

    mu0: np.ndarray | float = 0.2
    lambda0: np.ndarray | float = 0.05
    beta_kappa: float = 8.0
    beta_sigma: np.ndarray | float = 0.15

    def mu_mean(self, p: int) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.mu0, float), (p,)).copy() \
            if np.ndim(self.mu0) == 0 else np.asarray(self.mu0, float).ravel()

    def mu_cov(self, p: int) -> np.ndarray:
        lam = np.asarray(self.lambda0, float)
        if lam.ndim == 0:
            return float(lam) * np.eye(p)
        if lam.ndim == 1:
            return np.diag(lam)
        return lam

    def sigma_bounds(self, p: int) -> np.ndarray:
        b = np.asarray(self.beta_sigma, float)
        return np.broadcast_to(b, (p,)).copy() if b.ndim == 0 else b.ravel()


def _mvn_logpdf_rows(Y: np.ndarray, mu: np.ndarray, L: np.ndarray) -> float:
    """Sum of N multivariate normal log-densities with shared Cholesky L."""
    diff = Y - mu
    z = cho_solve((L, True), diff.T)
    quad = float(np.sum(diff.T * z))
    n, p = Y.shape
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * (n * p * np.log(2.0 * np.pi) + n * logdet + quad)


def log_posterior(Y: np.ndarray, mu, sigma, kappa: float, theta,
                  hyper: Hyperparameters) -> float:
    """Log posterior density (up to a constant): Gaussian likelihood over the
    rows of Y plus the mu prior; -inf outside the uniform supports."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    p = theta.size
    sig_hi = hyper.sigma_bounds(p)
    if kappa <= 0.0 or kappa >= hyper.beta_kappa:
        return -np.inf
    if np.any(sigma <= 0.0) or np.any(sigma >= sig_hi):
        return -np.inf
    cov = exp_covariance(sigma, kappa, theta)
    L = factor_covariance(cov)
    out = 0.0
    if Y.shape[0] > 0 and Y.shape[1] > 0:
        out += _mvn_logpdf_rows(Y, mu, L)
    prior_cov = hyper.mu_cov(p)
    Lp = factor_covariance(prior_cov)
    out += _mvn_logpdf_rows(mu[None, :], hyper.mu_mean(p), Lp)
    return out


@dataclass(frozen=True)
class PosteriorSamples:
    """Post-burn-in MCMC draws of (mu, sigma, kappa)."""

    mu: np.ndarray          # (n_draws, p)
    sigma: np.ndarray       # (n_draws, p)
    kappa: np.ndarray       # (n_draws,)
    theta: np.ndarray       # the fitted angles
    acceptance: dict
    seed: int
    burnin: int

    @property
    def n_draws(self) -> int:
        return self.kappa.size

    @property
    def p(self) -> int:
        return self.theta.size


def mcmc_fit(Y: np.ndarray, theta, hyper: Hyperparameters, iters: int = 50_000,
             burnin: int = 15_000, seed: int = 0) -> PosteriorSamples:
    """Random-walk Metropolis-within-Gibbs in three blocks: mu jointly,
    sigma componentwise, kappa as a scalar.  Proposal scales adapt toward
    20-40% acceptance during burn-in and are frozen afterwards."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    theta = np.asarray(theta, dtype=float).ravel()
    n, p = Y.shape
    if theta.size != p:
        raise FitError("theta must match the columns of Y")
    if iters <= burnin:
        raise FitError("iters must exceed burnin")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sig_hi = hyper.sigma_bounds(p)
    mu = Y.mean(axis=0)
    sigma = np.clip(Y.std(axis=0, ddof=1) if n > 1 else np.full(p, 0.05),
                    1e-4, sig_hi * 0.9)
    kappa = 0.5 * hyper.beta_kappa

    mu0 = hyper.mu_mean(p)
    Lp = factor_covariance(hyper.mu_cov(p))

    def loglike(mu_, L_):
        return _mvn_logpdf_rows(Y, mu_, L_) if n > 0 else 0.0

    def prior_mu(mu_):
        return _mvn_logpdf_rows(mu_[None, :], mu0, Lp)

    # Sigma = D R D with D = diag(sigma) and R the correlation part, so
    # chol(Sigma) = D chol(R): sigma updates reuse the correlation factor
    from .model import angular_distance

    dmat = angular_distance(theta[:, None], theta[None, :])

    def corr_factor(kappa_):
        return factor_covariance(np.exp(-dmat / kappa_))

    LR = corr_factor(kappa)
    L = sigma[:, None] * LR
    ll = loglike(mu, L)
    lp_mu = prior_mu(mu)

    # proposal scales (adapted during burn-in)
    s_mu = 0.1 * float(np.mean(sigma)) / np.sqrt(max(n, 1) * p)
    s_sigma = np.full(p, 0.1 * float(np.mean(sigma)))
    s_kappa = 0.25 * hyper.beta_kappa
    acc = {"mu": 0, "sigma": 0, "kappa": 0}
    tries = {"mu": 0, "sigma": 0, "kappa": 0}
    win_acc = {"mu": 0, "sigma": np.zeros(p), "kappa": 0}
    win_try = {"mu": 0, "sigma": np.zeros(p), "kappa": 0}
    ADAPT_EVERY = 50

    keep = iters - burnin
    out_mu = np.empty((keep, p))
    out_sigma = np.empty((keep, p))
    out_kappa = np.empty(keep)

    for it in range(iters):
        # mu block (covariance unchanged: reuse L)
        prop = mu + s_mu * rng.standard_normal(p)
        ll_prop = loglike(prop, L)
        lp_prop = prior_mu(prop)
        tries["mu"] += 1
        win_try["mu"] += 1
        if np.log(rng.uniform()) < (ll_prop + lp_prop) - (ll + lp_mu):
            mu, ll, lp_mu = prop, ll_prop, lp_prop
            acc["mu"] += 1
            win_acc["mu"] += 1

        # sigma block, componentwise
        for j in range(p):
            cand = sigma[j] + s_sigma[j] * rng.standard_normal()
            tries["sigma"] += 1
            win_try["sigma"][j] += 1
            if cand <= 0.0 or cand >= sig_hi[j]:
                continue
            sig_prop = sigma.copy()
            sig_prop[j] = cand
            L_prop = sig_prop[:, None] * LR
            ll_prop = loglike(mu, L_prop)
            if np.log(rng.uniform()) < ll_prop - ll:
                sigma, L, ll = sig_prop, L_prop, ll_prop
                acc["sigma"] += 1
                win_acc["sigma"][j] += 1

        # kappa block
        cand = kappa + s_kappa * rng.standard_normal()
        tries["kappa"] += 1
        win_try["kappa"] += 1
        if 0.0 < cand < hyper.beta_kappa:
            try:
                LR_prop = corr_factor(cand)
                L_prop = sigma[:, None] * LR_prop
                ll_prop = loglike(mu, L_prop)
                if np.log(rng.uniform()) < ll_prop - ll:
                    kappa, LR, L, ll = cand, LR_prop, L_prop, ll_prop
                    acc["kappa"] += 1
                    win_acc["kappa"] += 1
            except ModelError:
                pass

        if it < burnin and (it + 1) % ADAPT_EVERY == 0:
            if win_try["mu"]:
                rate = win_acc["mu"] / win_try["mu"]
                s_mu *= 1.2 if rate > 0.4 else (0.8 if rate < 0.2 else 1.0)
            with np.errstate(invalid="ignore"):
                rates = win_acc["sigma"] / np.maximum(win_try["sigma"], 1)
            s_sigma *= np.where(rates > 0.4, 1.2, np.where(rates < 0.2, 0.8, 1.0))
            if win_try["kappa"]:
                rate = win_acc["kappa"] / win_try["kappa"]
                s_kappa *= 1.2 if rate > 0.4 else (0.8 if rate < 0.2 else 1.0)
            win_acc = {"mu": 0, "sigma": np.zeros(p), "kappa": 0}
            win_try = {"mu": 0, "sigma": np.zeros(p), "kappa": 0}

        if it >= burnin:
            k = it - burnin
            out_mu[k] = mu
            out_sigma[k] = sigma
            out_kappa[k] = kappa

    rates = {k: acc[k] / max(tries[k], 1) for k in acc}
    return PosteriorSamples(mu=out_mu, sigma=out_sigma, kappa=out_kappa,
                            theta=theta, acceptance=rates, seed=int(seed),
                            burnin=int(burnin))


def posterior_predictive_lengths(samples: PosteriorSamples, K: int,
                                 eta: float = 1e-4, seed: int = 0) -> np.ndarray:
    """(K, p) predictive length draws; draw k uses the k-th of K evenly
    thinned posterior draws and its own spawned RNG stream."""
    if samples.n_draws == 0:
        raise FitError("posterior sample set is empty")
    idx = np.linspace(0, samples.n_draws - 1, K).round().astype(int)
    children = np.random.SeedSequence(seed).spawn(K)
    p = samples.p
    Y = np.empty((K, p))
    for k, (i, child) in enumerate(zip(idx, children)):
        cov = exp_covariance(samples.sigma[i], samples.kappa[i], samples.theta)
        L = factor_covariance(cov)
        z = np.random.default_rng(child).standard_normal(p)
        Y[k] = samples.mu[i] + L @ z
    Y[Y <= 0.0] = eta
    return Y


def posterior_predictive(samples: PosteriorSamples, lines: LineSet, K: int,
                         eta: float = 1e-4, seed: int = 0):
    """K contours from the posterior predictive distribution."""
    from .representation import points_from_lengths

    Y = posterior_predictive_lengths(samples, K, eta=eta, seed=seed)
    return [points_from_lengths(lines, y) for y in Y]
