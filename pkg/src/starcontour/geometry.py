"""Planar geometry primitives for closed boundary contours.

Closed contours are stored as ordered point sequences normalized to
counterclockwise orientation.  All incidence predicates use an absolute
tolerance of 1e-9; coordinates are expected to live in (or near) the unit
square, where absolute and relative scales coincide.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path as _MplPath
from scipy import ndimage
from shapely.geometry import Polygon as _ShapelyPolygon

TOL = 1e-9

INSIDE = "inside"
OUTSIDE = "outside"
ON_BOUNDARY = "on_boundary"


class GeometryError(ValueError):
    """Raised when a geometric precondition is violated."""


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError("expected an (n, 2) array of points")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("points must be finite")
    return pts


def signed_area(points: np.ndarray) -> float:
    """Shoelace signed area of a closed point sequence (positive = CCW)."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class ContourPointSequence:
    """An ordered closed boundary: n > 2 points, CCW, implicitly closed.

    Consecutive duplicate points (and a repeated closing point) are dropped.
    With ``check_simple=True`` the closed polyline is verified to be
    non-self-intersecting.
    """

    __slots__ = ("points",)

    def __init__(self, points, check_simple: bool = True):
        pts = _as_points(points)
        # drop explicit closure and consecutive duplicates
        if pts.shape[0] > 1 and np.allclose(pts[0], pts[-1], atol=TOL):
            pts = pts[:-1]
        if pts.shape[0] > 1:
            keep = np.ones(pts.shape[0], dtype=bool)
            keep[1:] = np.any(np.abs(np.diff(pts, axis=0)) > TOL, axis=1)
            pts = pts[keep]
        if pts.shape[0] <= 2:
            raise GeometryError("a contour needs more than 2 distinct points")
        a = signed_area(pts)
        if abs(a) < TOL**2:
            raise GeometryError("degenerate (zero-area) contour")
        if a < 0:
            pts = pts[::-1].copy()
        if check_simple and not _ShapelyPolygon(pts).is_valid:
            raise GeometryError("contour is self-intersecting")
        pts.setflags(write=False)
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __repr__(self):
        return f"ContourPointSequence(n={self.n})"


class Polygon:
    """The region enclosed by a contour; guaranteed positive area."""

    __slots__ = ("boundary", "_shapely")

    def __init__(self, boundary: ContourPointSequence):
        if not isinstance(boundary, ContourPointSequence):
            boundary = ContourPointSequence(boundary)
        self.boundary = boundary
        self._shapely = None

    @property
    def points(self) -> np.ndarray:
        return self.boundary.points

    @property
    def shapely(self) -> _ShapelyPolygon:
        if self._shapely is None:
            poly = _ShapelyPolygon(self.boundary.points)
            if not poly.is_valid:
                poly = poly.buffer(0)
            self._shapely = poly
        return self._shapely

    @property
    def area(self) -> float:
        return signed_area(self.boundary.points)

    def __repr__(self):
        return f"Polygon(n={self.boundary.n}, area={self.area:.6g})"


def polygon_area(poly: Polygon) -> float:
    """Area of the enclosed region (strictly positive for a valid polygon)."""
    a = signed_area(poly.points)
    if a < TOL**2:
        raise GeometryError("degenerate polygon")
    return a


def point_in_polygon(p, poly: Polygon) -> str:
    """Even-odd classification of a point: inside, outside, or on_boundary."""
    p = np.asarray(p, dtype=float)
    pts = poly.points
    a = pts
    b = np.roll(pts, -1, axis=0)
    e = b - a
    w = p - a
    # distance from p to each closed edge
    ee = np.einsum("ij,ij->i", e, e)
    t = np.clip(np.einsum("ij,ij->i", w, e) / np.where(ee > 0, ee, 1.0), 0.0, 1.0)
    closest = a + t[:, None] * e
    d2 = np.sum((p - closest) ** 2, axis=1)
    if np.min(d2) <= TOL**2:
        return ON_BOUNDARY
    # even-odd ray crossing (horizontal ray towards +x)
    ya, yb = a[:, 1], b[:, 1]
    cond = (ya > p[1]) != (yb > p[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[:, 0] + (p[1] - ya) / (yb - ya) * e[:, 0]
    crossings = np.count_nonzero(cond & (xint > p[0]))
    return INSIDE if crossings % 2 == 1 else OUTSIDE


def _ray_edge_hits(C: np.ndarray, d: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Distances (unsorted, undeduplicated) where the ray C + t*d, t > 0,
    meets the closed boundary given by ``pts``.  Collinear grazes contribute
    both endpoint projections."""
    a = pts
    b = np.roll(pts, -1, axis=0)
    e = b - a
    w = a - C
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    num_t = w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]
    num_u = w[:, 0] * d[1] - w[:, 1] * d[0]
    ok = np.abs(denom) > TOL
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ok, num_t / np.where(ok, denom, 1.0), np.nan)
        u = np.where(ok, num_u / np.where(ok, denom, 1.0), np.nan)
    hit = ok & (t > TOL) & (u >= -TOL) & (u <= 1.0 + TOL)
    hits = t[hit]
    # collinear edges lying on the ray line
    col = ~ok & (np.abs(num_u) <= TOL * (1.0 + np.linalg.norm(e, axis=1)))
    if np.any(col):
        ta = (a[col] - C) @ d
        tb = (b[col] - C) @ d
        extra = np.concatenate([ta, tb])
        hits = np.concatenate([hits, extra[extra > TOL]])
    return hits


def ray_polygon_intersections(C, angle: float, poly: Polygon):
    """All intersections of the ray from C at ``angle`` with the boundary,
    as (distance, point) pairs sorted by ascending distance.

    C must lie strictly inside the polygon, so the result is non-empty.
    Hits within 1e-9 of each other (e.g. at a shared vertex) are merged.
    """
    C = np.asarray(C, dtype=float)
    if point_in_polygon(C, poly) != INSIDE:
        raise GeometryError("ray origin must be strictly inside the polygon")
    d = np.array([np.cos(angle), np.sin(angle)])
    hits = _ray_edge_hits(C, d, poly.points)
    if hits.size == 0:
        raise GeometryError("ray from an interior point found no boundary hit")
    hits = np.sort(hits)
    keep = np.ones(hits.size, dtype=bool)
    keep[1:] = np.diff(hits) > TOL
    hits = hits[keep]
    return [(float(t), C + t * d) for t in hits]


def _clip_convex(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Clip a convex CCW polygon by the half-plane left of the directed line a->b."""
    if points.shape[0] == 0:
        return points
    e = b - a
    side = e[0] * (points[:, 1] - a[1]) - e[1] * (points[:, 0] - a[0])
    inside = side >= -TOL
    if np.all(inside):
        return points
    out = []
    n = points.shape[0]
    for i in range(n):
        j = (i + 1) % n
        pi, pj = points[i], points[j]
        si, sj = side[i], side[j]
        if inside[i]:
            out.append(pi)
        if inside[i] != inside[j]:
            # intersection of edge pi->pj with the clip line
            t = si / (si - sj)
            out.append(pi + t * (pj - pi))
    if len(out) < 3:
        return np.empty((0, 2))
    return np.asarray(out)


def _dedupe_ring(points: np.ndarray) -> np.ndarray:
    if points.shape[0] == 0:
        return points
    keep = [0]
    for i in range(1, points.shape[0]):
        if np.any(np.abs(points[i] - points[keep[-1]]) > TOL):
            keep.append(i)
    pts = points[keep]
    if pts.shape[0] > 1 and np.all(np.abs(pts[0] - pts[-1]) <= TOL):
        pts = pts[:-1]
    return pts


def _halfplane_region(poly: Polygon) -> np.ndarray:
    """Intersection of all interior edge half-planes, clipped within a box
    slightly larger than the polygon's bounding box.  Returns the convex
    region's vertices (possibly empty)."""
    pts = poly.points
    lo = pts.min(axis=0) - 1.0
    hi = pts.max(axis=0) + 1.0
    region = np.array(
        [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]]
    )
    b = np.roll(pts, -1, axis=0)
    for i in range(pts.shape[0]):
        region = _clip_convex(region, pts[i], b[i])
        if region.shape[0] == 0:
            break
    return _dedupe_ring(region)


def polygon_kernel(poly: Polygon):
    """Kernel of a polygon: the convex set of points seeing the whole
    boundary.  Returns a Polygon, or None iff the polygon is not star-shaped
    (the kernel is empty or degenerate)."""
    region = _halfplane_region(poly)
    if region.shape[0] < 3 or abs(signed_area(region)) < 1e-12:
        return None
    return Polygon(ContourPointSequence(region, check_simple=False))


def kernel_intersection(polys):
    """Convex intersection of the kernels of all polygons (the exact-mode search
    region for a common starting point).  None if any kernel is empty or the
    intersection is empty."""
    polys = list(polys)
    if not polys:
        raise GeometryError("need at least one polygon")
    region = None
    for poly in polys:
        k = polygon_kernel(poly)
        if k is None:
            return None
        kpts = k.points
        if region is None:
            region = kpts
            continue
        b = np.roll(kpts, -1, axis=0)
        for i in range(kpts.shape[0]):
            region = _clip_convex(region, kpts[i], b[i])
            if region.shape[0] == 0:
                return None
        region = _dedupe_ring(region)
        if region.shape[0] < 3 or abs(signed_area(region)) < 1e-12:
            return None
    return Polygon(ContourPointSequence(region, check_simple=False))


def symmetric_difference_area(P: Polygon, Q: Polygon) -> float:
    """Area of (P \\ Q) union (Q \\ P); zero iff the regions coincide."""
    return float(P.shapely.symmetric_difference(Q.shapely).area)


@dataclass(frozen=True)
class BinaryGrid:
    """A rows x cols boolean raster.  Cell (i, j) spans
    [origin_x + j*cell, origin_x + (j+1)*cell] x [origin_y + i*cell, ...],
    i.e. row index increases with y."""

    rows: int
    cols: int
    origin: tuple
    cell: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=bool)
        if v.shape != (self.rows, self.cols):
            raise GeometryError("grid values do not match declared dimensions")
        if self.rows < 1 or self.cols < 1 or self.cell <= 0:
            raise GeometryError("invalid grid geometry")
        object.__setattr__(self, "values", v)


_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_EIGHT_CONN = np.ones((3, 3), dtype=bool)


def grid_to_contour(grid: BinaryGrid) -> ContourPointSequence:
    """Trace the boundary of the single 4-connected true-region of a binary
    grid as a CCW corner-point contour.

    The trace starts at the lowest-row, then lowest-column true cell and runs
    counterclockwise; consecutive collinear points are merged.  Grids with
    zero or multiple regions, or regions with interior holes, are rejected.
    """
    mask = grid.values
    labels, nreg = ndimage.label(mask, structure=_FOUR_CONN)
    if nreg == 0:
        raise GeometryError("grid contains no true region")
    if nreg > 1:
        raise GeometryError("grid contains multiple connected regions")
    bg, nbg = ndimage.label(~mask, structure=_EIGHT_CONN)
    for lab in range(1, nbg + 1):
        where = bg == lab
        touches = (
            where[0, :].any() or where[-1, :].any()
            or where[:, 0].any() or where[:, -1].any()
        )
        if not touches:
            raise GeometryError("region has interior holes")

    rows, cols = mask.shape
    padded = np.zeros((rows + 2, cols + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    inside = padded[1:-1, 1:-1]
    # directed boundary edges, interior on the left (CCW overall);
    # vertices in (x, y) cell units
    edges = {}

    def add_edge(v0, v1):
        edges.setdefault(v0, []).append(v1)

    ii, jj = np.nonzero(inside)
    below = ~padded[ii, jj + 1]
    above = ~padded[ii + 2, jj + 1]
    left = ~padded[ii + 1, jj]
    right = ~padded[ii + 1, jj + 2]
    for i, j, s, n, w, e in zip(ii, jj, below, above, left, right):
        x, y = int(j), int(i)
        if s:
            add_edge((x, y), (x + 1, y))
        if e:
            add_edge((x + 1, y), (x + 1, y + 1))
        if n:
            add_edge((x + 1, y + 1), (x, y + 1))
        if w:
            add_edge((x, y + 1), (x, y))

    i0 = int(ii.min())
    j0 = int(jj[ii == i0].min())
    start = (j0, i0)
    path = [start]
    prev_dir = (1, 0)  # bottom edge of the start cell heads east
    cur = (start[0] + 1, start[1])
    edges[start].remove(cur)
    while cur != start:
        path.append(cur)
        nexts = edges.get(cur, [])
        if not nexts:
            raise GeometryError("boundary trace broke; malformed region")
        if len(nexts) == 1:
            nxt = nexts[0]
        else:
            # pinch vertex: prefer the leftmost turn relative to travel
            def turn(v):
                dx, dy = v[0] - cur[0], v[1] - cur[1]
                return prev_dir[0] * dy - prev_dir[1] * dx  # cross product

            nxt = max(nexts, key=turn)
        nexts.remove(nxt)
        prev_dir = (nxt[0] - cur[0], nxt[1] - cur[1])
        cur = nxt

    pts = np.asarray(path, dtype=float)
    # merge collinear runs (all edges are axis-aligned unit steps)
    d = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    prev = np.roll(d, 1, axis=0)
    corner = np.any(d != prev, axis=1)
    pts = pts[corner]
    pts = pts * grid.cell + np.asarray(grid.origin, dtype=float)
    return ContourPointSequence(pts, check_simple=False)


# interior subsample offsets for the majority-area rule (4x4 per cell)
_SUBS = 4
_sub = (np.arange(_SUBS) + 0.5) / _SUBS
_SUB_X, _SUB_Y = np.meshgrid(_sub, _sub)
_SUB_OFFSETS = np.column_stack([_SUB_X.ravel(), _SUB_Y.ravel()])


def grid_sample_points(rows: int, cols: int, origin, cell: float) -> np.ndarray:
    """The (rows*cols*16, 2) interior subsample points used by the
    majority-area rule, ordered cell-major (row, then column)."""
    ox, oy = origin
    jj, ii = np.meshgrid(np.arange(cols), np.arange(rows))
    base = np.column_stack([jj.ravel(), ii.ravel()]).astype(float)
    pts = (base[:, None, :] + _SUB_OFFSETS[None, :, :]) * cell
    pts[..., 0] += ox
    pts[..., 1] += oy
    return pts.reshape(-1, 2)


def _check_window(poly: Polygon, rows, cols, origin, cell):
    lo = poly.points.min(axis=0)
    hi = poly.points.max(axis=0)
    ox, oy = origin
    if (
        lo[0] < ox - TOL or lo[1] < oy - TOL
        or hi[0] > ox + cols * cell + TOL or hi[1] > oy + rows * cell + TOL
    ):
        raise GeometryError("grid window does not cover the polygon")


def contour_to_grid(poly: Polygon, rows: int, cols: int, origin, cell: float) -> BinaryGrid:
    """Rasterize a polygon by the majority-area rule: a cell is true iff
    strictly more than half of its 4x4 interior subsample points fall inside
    the polygon (ties count as outside)."""
    _check_window(poly, rows, cols, origin, cell)
    pts = grid_sample_points(rows, cols, origin, cell)
    # closed=True consumes the final vertex as the close-poly marker
    path = _MplPath(np.vstack([poly.points, poly.points[:1]]), closed=True)
    inside = path.contains_points(pts)
    counts = inside.reshape(rows * cols, _SUBS * _SUBS).sum(axis=1)
    values = (counts > (_SUBS * _SUBS) // 2).reshape(rows, cols)
    return BinaryGrid(rows=rows, cols=cols, origin=tuple(origin), cell=float(cell),
                      values=values)
