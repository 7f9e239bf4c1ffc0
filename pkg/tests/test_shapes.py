import numpy as np
import pytest

from starcontour import (
    AppendSpec,
    GeometryError,
    Polygon,
    append_section,
    builtin_shape,
    points_from_lengths,
    polygon_area,
    polygon_kernel,
    sample_contours,
)

import oracles


class TestBuiltinShapes:
    def test_shape_b_mu_constant(self):
        params = builtin_shape("B")
        assert np.all(params.mu == 0.3)

    def test_shape_a_first_mu(self):
        assert builtin_shape("A").mu[0] == 0.294

    def test_shared_settings(self):
        for name in ("A", "B", "C"):
            params = builtin_shape(name)
            assert params.p == 50
            assert params.sigma[0] == 0.035
            assert params.kappa == 2.0
            assert np.allclose(params.lines.C, (0.5, 0.5))

    def test_kappa_override(self):
        assert builtin_shape("A", kappa=4.0).kappa == 4.0

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            builtin_shape("D")

    def test_case_insensitive(self):
        assert np.array_equal(builtin_shape("a").mu, builtin_shape("A").mu)


class TestAppendSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            AppendSpec(loop_min=3.0, loop_max=2.0)
        with pytest.raises(ValueError):
            AppendSpec(location="everywhere")
        with pytest.raises(ValueError):
            AppendSpec(offset_range=(0.0, 0.1))


class TestAppendSection:
    def _sample(self, seed=0):
        params = builtin_shape("A")
        return sample_contours(params, 1, seed=seed)[0], params.lines

    def test_zero_loop_returns_input(self):
        S, lines = self._sample()
        spec = AppendSpec(loop_min=0.0, loop_max=0.0)
        out = append_section(S, lines, spec, seed=1)
        assert out is S

    def test_output_not_star_shaped(self):
        S, lines = self._sample()
        out = append_section(S, lines, AppendSpec(), seed=2)
        assert polygon_kernel(Polygon(out)) is None
        # confirmed by the brute-force grid oracle
        mask, _, _, _ = oracles.kernel_oracle(out.points, res=150)
        assert not mask.any()

    def test_output_simple_and_in_unit_square(self):
        S, lines = self._sample(seed=3)
        for seed in range(6):
            out = append_section(S, lines, AppendSpec(), seed=seed)
            assert np.all(out.points >= 0) and np.all(out.points <= 1)
            from shapely.geometry import Polygon as ShapelyPolygon
            assert ShapelyPolygon(out.points).is_valid

    def test_area_gain_matches_strip(self):
        S, lines = self._sample(seed=4)
        out = append_section(S, lines, AppendSpec(), seed=5)
        gain = polygon_area(Polygon(out)) - polygon_area(Polygon(S))
        assert gain > 0
        # raster oracle agrees on the output area
        want = oracles.raster_area(out.points)
        assert abs(polygon_area(Polygon(out)) - want) < 5e-4
        # strip area is bounded by (max width) x (outer arc length bound)
        assert gain < 0.02 * (2 * np.pi * 0.5)

    def test_fixed_location_deterministic_index(self):
        S, lines = self._sample(seed=6)
        spec = AppendSpec(location="fixed")
        a = append_section(S, lines, spec, seed=7)
        b = append_section(S, lines, spec, seed=7)
        assert np.array_equal(a.points, b.points)

    def test_impossible_width_errors(self):
        S, lines = self._sample(seed=8)
        spec = AppendSpec(offset_range=(0.5, 0.6), width_range=(0.5, 0.6))
        with pytest.raises(GeometryError):
            append_section(S, lines, spec, seed=9, max_retries=5)

    def test_requires_matching_radial_contour(self):
        S, lines = self._sample()
        from starcontour import LineSet
        other = LineSet.evenly_spaced(np.array([0.5, 0.5]), 20)
        with pytest.raises(GeometryError):
            append_section(S, other, AppendSpec(), seed=0)
