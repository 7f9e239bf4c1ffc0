"""Star-shaped representations of contours: directional length vectors.

A contour is encoded by the distances from a starting point C to the
boundary along p rays.  For star-shaped polygons with C in the kernel the
representation is exact; otherwise the nearest ("under") or farthest
("over") boundary crossing is used.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    TOL,
    ContourPointSequence,
    GeometryError,
    INSIDE,
    Polygon,
    point_in_polygon,
    polygon_area,
    polygon_kernel,
    symmetric_difference_area,
)

TWO_PI = 2.0 * np.pi

MODE_EXACT = "exact"
MODE_UNDER = "under"
MODE_OVER = "over"
MODES = (MODE_EXACT, MODE_UNDER, MODE_OVER)


def wrap_angle(angle) -> np.ndarray:
    """Map angles into (0, 2*pi]; an angle of exactly 0 is stored as 2*pi."""
    a = np.asarray(angle, dtype=float) % TWO_PI
    return np.where(a <= 0.0, TWO_PI, a)


@dataclass(frozen=True)
class LineSet:
    """p rays from a common starting point C at strictly increasing unique
    angles in (0, 2*pi]."""

    C: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float).reshape(2)
        theta = np.asarray(self.theta, dtype=float).ravel()
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(theta))):
            raise GeometryError("line set values must be finite")
        if theta.size <= 2:
            raise GeometryError("a line set needs more than 2 angles")
        if np.any(theta <= 0.0) or np.any(theta > TWO_PI + TOL):
            raise GeometryError("angles must lie in (0, 2*pi]")
        if np.any(np.diff(theta) <= 0.0):
            raise GeometryError("angles must be strictly increasing and unique")
        C.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "theta", theta)

    @property
    def p(self) -> int:
        return self.theta.size

    @classmethod
    def evenly_spaced(cls, C, p: int) -> "LineSet":
        """p evenly spaced angles with theta_1 = 2*pi/p (so theta_p = 2*pi)."""
        return cls(C=np.asarray(C, float), theta=TWO_PI * np.arange(1, p + 1) / p)

    def directions(self) -> np.ndarray:
        return np.column_stack([np.cos(self.theta), np.sin(self.theta)])


@dataclass(frozen=True)
class StarRepresentation:
    """A contour as p positive lengths along a line set's rays."""

    lines: LineSet
    y: np.ndarray
    mode: str = MODE_EXACT

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if y.size != self.lines.p:
            raise GeometryError("length vector size must match the line set")
        if np.any(y <= 0.0) or not np.all(np.isfinite(y)):
            raise GeometryError("lengths must be positive and finite")
        if self.mode not in MODES:
            raise GeometryError(f"unknown mode {self.mode!r}")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def vertices(self) -> np.ndarray:
        return self.lines.C + self.y[:, None] * self.lines.directions()

    def contour(self) -> ContourPointSequence:
        return points_from_lengths(self.lines, self.y)


def points_from_lengths(lines: LineSet, y) -> ContourPointSequence:
    """The closed contour whose i-th vertex sits at distance y_i from C
    along angle theta_i.  Radial polygons are simple by construction."""
    y = np.asarray(y, dtype=float).ravel()
    if y.size != lines.p:
        raise GeometryError("length vector size must match the line set")
    if np.any(y <= 0.0):
        raise GeometryError("lengths must be positive")
    pts = lines.C + y[:, None] * lines.directions()
    return ContourPointSequence(pts, check_simple=False)


def _all_ray_distances(lines: LineSet, pts: np.ndarray):
    """(p, m) matrix of crossing distances of every ray with every boundary
    edge; NaN where a ray misses an edge.  Collinear grazes contribute their
    endpoint projections (so min/max reductions honour nearest/farthest)."""
    C = lines.C
    d = lines.directions()  # (p, 2)
    a = pts
    b = np.roll(pts, -1, axis=0)
    e = b - a  # (m, 2)
    w = a - C  # (m, 2)
    denom = d[:, 0:1] * e[None, :, 1] - d[:, 1:2] * e[None, :, 0]  # (p, m)
    num_t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0])[None, :]  # (1, m)
    num_u = w[None, :, 0] * d[:, 1:2] - w[None, :, 1] * d[:, 0:1]  # (p, m)
    ok = np.abs(denom) > TOL
    safe = np.where(ok, denom, 1.0)
    t = num_t / safe
    u = num_u / safe
    hit = ok & (t > TOL) & (u >= -TOL) & (u <= 1.0 + TOL)
    t = np.where(hit, t, np.nan)
    # collinear edges: both endpoints project onto the ray
    edge_len = np.linalg.norm(e, axis=1)
    col = (~ok) & (np.abs(num_u) <= TOL * (1.0 + edge_len)[None, :])
    if np.any(col):
        ta = w @ d.T  # (m, p) projections of edge starts
        tb = (b - C) @ d.T
        ta, tb = ta.T, tb.T  # (p, m)
        near = np.where(col, np.minimum(ta, tb), np.nan)
        far = np.where(col, np.maximum(ta, tb), np.nan)
        near = np.where(near > TOL, near, np.nan)
        far = np.where(far > TOL, far, np.nan)
        t = np.where(col & ~np.isnan(near), near, t)
        extra = np.where(col & ~np.isnan(far), far, np.nan)
        t = np.concatenate([t, extra], axis=1)
    return t


def star_lengths(lines: LineSet, S: ContourPointSequence, mode: str = MODE_EXACT) -> np.ndarray:
    """Length vector of S along the line set's rays.

    exact: C must lie in the polygon kernel (single crossing per ray);
    under: nearest crossing; over: farthest crossing.
    """
    if mode not in MODES:
        raise GeometryError(f"unknown mode {mode!r}")
    poly = Polygon(S) if not isinstance(S, Polygon) else S
    if point_in_polygon(lines.C, poly) != INSIDE:
        raise GeometryError("starting point must be strictly inside the polygon")
    if mode == MODE_EXACT:
        kern = polygon_kernel(poly)
        if kern is None or point_in_polygon(lines.C, kern) != INSIDE:
            raise GeometryError(
                "exact mode requires the starting point inside the polygon kernel"
            )
    t = _all_ray_distances(lines, poly.points)
    with np.errstate(all="ignore"):
        if mode == MODE_OVER:
            y = np.nanmax(t, axis=1)
        else:
            y = np.nanmin(t, axis=1)
    if np.any(~np.isfinite(y)):
        raise GeometryError("a ray from an interior point found no boundary hit")
    return y


def reconstruct(lines: LineSet, S: ContourPointSequence, mode: str = MODE_EXACT) -> ContourPointSequence:
    """Star-shaped reconstruction of S: lengths along the rays, reconnected
    in angle order."""
    return points_from_lengths(lines, star_lengths(lines, S, mode))


def differing_area(lines: LineSet, S: ContourPointSequence, mode: str = MODE_EXACT) -> float:
    """Area of the symmetric difference between S's enclosed polygon and its
    star-shaped reconstruction.  Zero for star-shaped S with C in the kernel
    and matched angles; strictly positive for non-star-shaped S."""
    poly = Polygon(S) if not isinstance(S, Polygon) else S
    rec = Polygon(reconstruct(lines, poly.boundary if isinstance(S, Polygon) else S, mode))
    return symmetric_difference_area(poly, rec)


def _candidate_grid(region_poly: Polygon, resolution: int) -> np.ndarray:
    """Regular lattice over the region's bounding box, kept strictly inside
    the region; ordered by (row, col) for deterministic tie-breaking."""
    lo = region_poly.points.min(axis=0)
    hi = region_poly.points.max(axis=0)
    xs = np.linspace(lo[0], hi[0], resolution)
    ys = np.linspace(lo[1], hi[1], resolution)
    from shapely.geometry import Point as _ShapelyPoint
    from shapely.prepared import prep

    prepared = prep(region_poly.shapely)
    cands = []
    for y in ys:  # row-major: row index = y, col index = x
        for x in xs:
            if prepared.contains(_ShapelyPoint(x, y)):
                cands.append((x, y))
    return np.asarray(cands, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class StarShapednessEntry:
    contour_id: int
    mode: str
    pct_differing_area: float
    C: tuple
    differing_area: float = 0.0


def star_shapedness_report(contours, p: int, modes=(MODE_UNDER, MODE_OVER),
                           grid_resolution: int = 50):
    """Per-contour minimized differing areas as percentages of polygon area.

    For each contour and mode, the starting point is optimized over a
    candidate lattice clipped to the polygon interior; the best (smallest)
    differing area is reported as a percentage of the contour's own area.
    """
    contours = list(contours)
    if not contours:
        raise ValueError("empty contour list")
    if p <= 2:
        raise ValueError("p must exceed 2")
    if isinstance(modes, str):
        modes = (modes,)
    entries = []
    for cid, S in enumerate(contours):
        poly = Polygon(S) if not isinstance(S, Polygon) else S
        area = polygon_area(poly)
        cands = _candidate_grid(poly, grid_resolution)
        for mode in modes:
            best = None
            best_C = None
            for C in cands:
                lines = LineSet.evenly_spaced(C, p)
                try:
                    da = differing_area(lines, poly, mode)
                except GeometryError:
                    continue
                if best is None or da < best - 1e-15:
                    best = da
                    best_C = C
            if best is None:
                raise GeometryError(f"no admissible starting point for contour {cid}")
            entries.append(StarShapednessEntry(
                contour_id=cid, mode=mode,
                pct_differing_area=100.0 * best / area,
                C=(float(best_C[0]), float(best_C[1])),
                differing_area=best,
            ))
    return entries
