"""Per-direction coverage of credible regions: test lines, ray-region
intervals, containment indicators, and aggregate reports."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GeometryError, INSIDE, Polygon, point_in_polygon, \
    ray_polygon_intersections
from .model import CredibleRegion

TWO_PI = 2.0 * np.pi
_TOL = 1e-9


@dataclass(frozen=True)
class TestLineSet:
    """M evenly spaced evaluation rays from C*, offset half a spacing so the
    first angle is pi/M."""

    C: np.ndarray
    M: int

    def __post_init__(self):
        if self.M <= 2:
            raise ValueError("need more than 2 test lines")
        C = np.asarray(self.C, dtype=float).reshape(2)
        C.setflags(write=False)
        object.__setattr__(self, "C", C)

    @property
    def theta(self) -> np.ndarray:
        return np.pi / self.M + TWO_PI * np.arange(self.M) / self.M


def interval_on_line(region: CredibleRegion, C, angle: float):
    """Disjoint distance intervals where the ray from C at ``angle`` passes
    through member cells of the region.  Cells are closed; touching or
    overlapping intervals are merged."""
    C = np.asarray(C, dtype=float)
    ox, oy = region.origin
    if not (ox - _TOL <= C[0] <= ox + region.cols * region.cell + _TOL
            and oy - _TOL <= C[1] <= oy + region.rows * region.cell + _TOL):
        raise GeometryError("ray origin outside the grid window")
    rows_idx, cols_idx = np.nonzero(region.mask)
    if rows_idx.size == 0:
        return []
    d = np.array([np.cos(angle), np.sin(angle)])
    x0 = ox + cols_idx * region.cell
    y0 = oy + rows_idx * region.cell
    lo = np.column_stack([x0, y0])
    hi = lo + region.cell
    # slab intersection of the ray with each cell box
    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = (lo - C) / d
        t_hi = (hi - C) / d
    near = np.where(np.isfinite(t_lo), np.minimum(t_lo, t_hi), -np.inf)
    far = np.where(np.isfinite(t_hi), np.maximum(t_lo, t_hi), np.inf)
    # axes where the ray is parallel: inside the slab or miss entirely
    for ax in range(2):
        if abs(d[ax]) < 1e-15:
            inside_slab = (lo[:, ax] - _TOL <= C[ax]) & (C[ax] <= hi[:, ax] + _TOL)
            near[:, ax] = np.where(inside_slab, -np.inf, np.inf)
            far[:, ax] = np.where(inside_slab, np.inf, -np.inf)
    t0 = np.max(near, axis=1)
    t1 = np.min(far, axis=1)
    valid = (t1 >= t0 - _TOL) & (t1 > _TOL)
    if not np.any(valid):
        return []
    t0 = np.clip(t0[valid], 0.0, None)
    t1 = t1[valid]
    order = np.argsort(t0, kind="stable")
    merged = []
    for a, b in zip(t0[order], t1[order]):
        if merged and a <= merged[-1][1] + _TOL:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(float(a), float(b)) for a, b in merged]


def _covered(distances, intervals) -> bool:
    if len(distances) == 0:
        return False
    for t in distances:
        if not any(a - _TOL <= t <= b + _TOL for a, b in intervals):
            return False
    return True


def coverage_indicator(S, region: CredibleRegion, C, angle: float) -> bool:
    """True iff every crossing of the ray with the contour lies inside the
    region's interval union on that ray (all-points rule)."""
    poly = S if isinstance(S, Polygon) else Polygon(S)
    hits = ray_polygon_intersections(C, angle, poly)
    intervals = interval_on_line(region, C, angle)
    return _covered([t for t, _ in hits], intervals)


@dataclass(frozen=True)
class CoverageReport:
    """W matrix of per-(contour, line) indicators with its summaries."""

    W: np.ndarray               # (N, M) booleans
    theta: np.ndarray           # the M test-line angles

    @property
    def per_line_mean(self) -> np.ndarray:
        return self.W.mean(axis=0)

    @property
    def grand_mean(self) -> float:
        return float(self.W.mean())

    @property
    def sd_across_lines(self) -> float:
        return float(np.std(self.per_line_mean, ddof=1))


def coverage_report(contours, regions, C, M: int = 100) -> CoverageReport:
    """Coverage of each contour on M evenly spaced test lines.

    ``regions`` is either a single region (shared) or a sequence paired with
    the contours in order (cross-validation style)."""
    contours = list(contours)
    if isinstance(regions, CredibleRegion):
        regions = [regions] * len(contours)
    else:
        regions = list(regions)
    if len(regions) != len(contours):
        raise ValueError("contours and regions must pair up one-to-one")
    lines = TestLineSet(C=np.asarray(C, float), M=M)
    theta = lines.theta
    W = np.zeros((len(contours), M), dtype=bool)
    prev_region = None
    intervals_cache = None
    for i, (S, region) in enumerate(zip(contours, regions)):
        poly = S if isinstance(S, Polygon) else Polygon(S)
        if point_in_polygon(lines.C, poly) != INSIDE:
            raise GeometryError("test-line origin must lie inside every contour")
        if region is not prev_region:
            intervals_cache = [interval_on_line(region, lines.C, a) for a in theta]
            prev_region = region
        for k, angle in enumerate(theta):
            hits = ray_polygon_intersections(lines.C, angle, poly)
            W[i, k] = _covered([t for t, _ in hits], intervals_cache[k])
    return CoverageReport(W=W, theta=theta)
