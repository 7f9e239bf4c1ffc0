import numpy as np
import pytest

from starcontour import ContourPointSequence, LineSet, points_from_lengths


def random_radial_polygon(rng, p=None, C=None, lo=0.5, hi=1.5):
    """Random star-shaped polygon: radial vertices around C.  Returns
    (contour, line set, y)."""
    if p is None:
        p = int(rng.integers(6, 20))
    if C is None:
        C = rng.uniform(-1.0, 1.0, size=2)
    lines = LineSet.evenly_spaced(np.asarray(C, float), p)
    y = rng.uniform(lo, hi, size=p)
    return points_from_lengths(lines, y), lines, y


def unit_square():
    return ContourPointSequence([(0, 0), (1, 0), (1, 1), (0, 1)])


def l_shape():
    """Unit square minus its upper-right 0.5 x 0.5 quadrant (non-convex,
    star-shaped)."""
    return ContourPointSequence(
        [(0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1)])


def u_shape():
    """Two arms joined at the bottom; rays across the notch cross the
    boundary more than once."""
    return ContourPointSequence(
        [(0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)])


def plus_shape():
    """Plus sign; kernel is the central square [1,2]^2."""
    return ContourPointSequence(
        [(1, 0), (2, 0), (2, 1), (3, 1), (3, 2), (2, 2),
         (2, 3), (1, 3), (1, 2), (0, 2), (0, 1), (1, 1)])


def spiral_shape():
    """A spiral arm; not star-shaped."""
    return ContourPointSequence(
        [(0, 0), (5, 0), (5, 5), (1, 5), (1, 2), (2, 2), (2, 4),
         (4, 4), (4, 1), (0, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
