"""Built-in simulation shape parameter sets and the generator that appends
non-star-shaped sections to star-shaped contours."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon

from .geometry import ContourPointSequence, GeometryError
from .model import GscmParams
from .representation import LineSet

TWO_PI = 2.0 * np.pi

# Shared simulation settings: 50 lines from (0.5, 0.5), range parameter 2.
_SHAPE_C_POINT = (0.5, 0.5)
_SHAPE_KAPPA = 2.0

_THETA = np.array([
    0.063, 0.188, 0.314, 0.440, 0.565, 0.691, 0.817, 0.942, 1.068, 1.194,
    1.319, 1.445, 1.571, 1.696, 1.822, 1.948, 2.073, 2.199, 2.325, 2.450,
    2.576, 2.702, 2.827, 2.953, 3.079, 3.204, 3.330, 3.456, 3.581, 3.707,
    3.833, 3.958, 4.084, 4.210, 4.335, 4.461, 4.587, 4.712, 4.838, 4.964,
    5.089, 5.215, 5.341, 5.466, 5.592, 5.718, 5.843, 5.969, 6.095, 6.220,
])

_SIGMA = np.array([
    0.035, 0.044, 0.053, 0.062, 0.071, 0.080, 0.080, 0.073, 0.065, 0.058,
    0.050, 0.042, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035,
    0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.044, 0.053, 0.062, 0.071,
    0.080, 0.080, 0.073, 0.065, 0.058, 0.050, 0.042, 0.035, 0.035, 0.035,
    0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035, 0.035,
])

_MU_A = np.array([
    0.294, 0.304, 0.306, 0.290, 0.264, 0.241, 0.220, 0.213, 0.219, 0.239,
    0.259, 0.282, 0.298, 0.300, 0.276, 0.254, 0.236, 0.216, 0.211, 0.217,
    0.212, 0.206, 0.200, 0.192, 0.195, 0.239, 0.287, 0.313, 0.318, 0.321,
    0.322, 0.321, 0.319, 0.316, 0.312, 0.308, 0.280, 0.240, 0.197, 0.197,
    0.214, 0.231, 0.247, 0.264, 0.263, 0.256, 0.249, 0.244, 0.270, 0.283,
])

_MU_B = np.full(50, 0.3)

_MU_C = np.array([
    0.300, 0.263, 0.225, 0.188, 0.150, 0.150, 0.187, 0.225, 0.262, 0.300,
    0.290, 0.243, 0.197, 0.150, 0.150, 0.200, 0.250, 0.300, 0.300, 0.274,
    0.248, 0.222, 0.196, 0.170, 0.170, 0.200, 0.230, 0.260, 0.290, 0.320,
    0.320, 0.298, 0.275, 0.253, 0.230, 0.150, 0.200, 0.250, 0.300, 0.350,
    0.360, 0.312, 0.265, 0.218, 0.170, 0.170, 0.203, 0.235, 0.268, 0.300,
])

_SHAPE_MU = {"A": _MU_A, "B": _MU_B, "C": _MU_C}


def builtin_shape(name: str, kappa: float = None, eta: float = 1e-4) -> GscmParams:
    """One of the built-in 50-line shape parameter sets (A, B, or C).

    ``kappa`` overrides the shared default range parameter of 2.
    """
    key = str(name).upper()
    if key not in _SHAPE_MU:
        raise ValueError(f"unknown shape {name!r}; expected one of A, B, C")
    lines = LineSet(C=np.asarray(_SHAPE_C_POINT), theta=_THETA.copy())
    return GscmParams(lines=lines, mu=_SHAPE_MU[key].copy(), sigma=_SIGMA.copy(),
                      kappa=_SHAPE_KAPPA if kappa is None else float(kappa),
                      eta=eta)


@dataclass(frozen=True)
class AppendSpec:
    """Controls for the appended-section generator.

    The appended strip loops back over u ~ Uniform(loop_min, loop_max) of the
    initial lines, at a radial offset and with a width drawn uniformly from
    the given ranges.  ``location`` picks the attachment line at random or
    pins it (default p // 4 when ``fixed_index`` is None).
    """

    loop_min: float = 4.0
    loop_max: float = 5.0
    offset_range: tuple = (0.01, 0.03)
    width_range: tuple = (0.01, 0.02)
    location: str = "random"
    fixed_index: int | None = None

    def __post_init__(self):
        if self.loop_min > self.loop_max or self.loop_min < 0:
            raise ValueError("need 0 <= loop_min <= loop_max")
        if self.location not in ("random", "fixed"):
            raise ValueError("location must be 'random' or 'fixed'")
        for lo, hi in (self.offset_range, self.width_range):
            if not (0 < lo <= hi):
                raise ValueError("offset/width ranges must be positive")


def _radial_boundary(C: np.ndarray, theta: np.ndarray, verts: np.ndarray, phi):
    """Boundary radius of a radial polygon at arbitrary angles ``phi``."""
    phi = np.asarray(phi, dtype=float) % TWO_PI
    phi = np.where(phi == 0.0, TWO_PI, phi)
    k = np.searchsorted(theta, phi, side="left")
    k0 = (k - 1) % theta.size
    k1 = k % theta.size
    v1 = verts[k0]
    v2 = verts[k1]
    e = v2 - v1
    d = np.column_stack([np.cos(phi), np.sin(phi)])
    denom = d[:, 0] * e[:, 1] - d[:, 1] * e[:, 0]
    w = v1 - C
    r = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
    return r


def append_section(contour: ContourPointSequence, lines: LineSet,
                   spec: AppendSpec, seed, max_retries: int = 20) -> ContourPointSequence:
    """Attach a strip that hugs the outside of a star-shaped contour over a
    drawn number of its lines, producing a simple but non-star-shaped
    polygon (for any positive loop count).

    The strip runs at a constant radial offset above the boundary, entered
    through a radial connector at the attachment line; a zero loop-count
    draw returns the input unchanged.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) \
        else np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    pts = contour.points
    theta = lines.theta
    C = lines.C
    p = theta.size
    if pts.shape[0] != p:
        raise GeometryError("contour must be the line set's radial polygon")
    spacing = TWO_PI / p
    for _ in range(max_retries):
        u = rng.uniform(spec.loop_min, spec.loop_max)
        if u == 0.0:
            return contour
        offset = rng.uniform(*spec.offset_range)
        width = rng.uniform(*spec.width_range)
        if spec.location == "fixed":
            j = spec.fixed_index if spec.fixed_index is not None else p // 4
        else:
            j = int(rng.integers(p))
        span = u * spacing
        # arc sample angles from theta_j down to theta_j - span
        nsteps = max(int(np.ceil(span / (spacing / 4.0))), 2)
        phis = theta[j] - np.linspace(0.0, span, nsteps + 1)
        r_arc = _radial_boundary(C, theta, pts, phis)
        inner = C + (r_arc + offset)[:, None] * np.column_stack(
            [np.cos(phis), np.sin(phis)])
        outer = C + (r_arc + offset + width)[:, None] * np.column_stack(
            [np.cos(phis), np.sin(phis)])
        # traversal: vertices j+1 .. j (all p, CCW), then the flap
        order = [(j + 1 + k) % p for k in range(p)]
        new_pts = np.vstack([
            pts[order],          # ends at vertex j (attachment point)
            inner,               # radial step out, then inner arc (angle dec)
            outer[::-1],         # outer arc back (angle inc)
        ])
        if np.any(new_pts < 0.0) or np.any(new_pts > 1.0):
            continue
        if not _ShapelyPolygon(new_pts).is_valid:
            continue
        return ContourPointSequence(new_pts, check_simple=False)
    raise GeometryError("could not construct a valid appended section")
