"""Grid construction and quadrature.

Covers the Gauss-Lobatto CV partition inside each SV, global CV indexing in
1D and 2D, and the Gauss-Legendre rules used for face integrals and averages.
"""

import numpy as np
import pytest

from svweno.errors import ConfigurationError
from svweno.mesh import (
    MAX_GAUSS_POINTS,
    build_grid_1d,
    build_grid_2d,
    gauss_lobatto_fractions,
    gauss_rule,
)


class TestGaussLobattoFractions:
    def test_order_two_splits_in_half(self):
        np.testing.assert_allclose(gauss_lobatto_fractions(2), [0.0, 0.5, 1.0])

    def test_order_three(self):
        np.testing.assert_allclose(gauss_lobatto_fractions(3), [0.0, 0.25, 0.75, 1.0], atol=1e-15)

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_pattern_is_exactly_symmetric(self, k):
        f = gauss_lobatto_fractions(k)
        widths = np.diff(f)
        assert f[0] == 0.0 and f[-1] == 1.0
        assert np.all(widths > 0)
        np.testing.assert_allclose(widths, widths[::-1], rtol=1e-14)


class TestGrid1D:
    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_cv_counts_and_widths(self, k):
        grid = build_grid_1d(-1.0, 1.0, 5, k)
        assert grid.n_cv == 5 * k
        assert grid.cv_widths.shape == (5 * k,)
        assert grid.cv_widths.sum() == pytest.approx(2.0, abs=1e-14)
        assert np.all(grid.cv_widths > 0)

    def test_sv_edges_coincide_with_cv_edges(self):
        grid = build_grid_1d(0.0, 2.0, 4, 3)
        assert np.array_equal(grid.cv_edges[::3], grid.sv_edges)
        assert grid.cv_edges[0] == 0.0 and grid.cv_edges[-1] == 2.0

    def test_every_sv_has_the_same_pattern(self):
        grid = build_grid_1d(-5.0, 5.0, 10, 4)
        per_sv = grid.cv_widths.reshape(10, 4) / grid.sv_width
        np.testing.assert_allclose(per_sv, np.broadcast_to(grid.width_pattern, per_sv.shape), rtol=1e-12)

    def test_index_round_trip(self):
        grid = build_grid_1d(0.0, 1.0, 7, 3)
        for g in range(grid.n_cv):
            i, m = grid.split_index(g)
            assert grid.cv_index(i, m) == g

    def test_reference_edges_span_unit_interval(self):
        grid = build_grid_1d(0.0, 1.0, 3, 5)
        assert grid.reference_edges[0] == -0.5
        assert grid.reference_edges[-1] == 0.5

    def test_arrays_are_read_only(self):
        grid = build_grid_1d(0.0, 1.0, 3, 3)
        with pytest.raises(ValueError):
            grid.cv_widths[0] = 1.0

    @pytest.mark.parametrize("k", [1, 6, 0])
    def test_order_outside_range(self, k):
        with pytest.raises(ConfigurationError):
            build_grid_1d(0.0, 1.0, 4, k)

    def test_empty_grid(self):
        with pytest.raises(ConfigurationError):
            build_grid_1d(0.0, 1.0, 0, 3)

    def test_reversed_interval(self):
        with pytest.raises(ConfigurationError):
            build_grid_1d(1.0, 0.0, 4, 3)


class TestGrid2D:
    def test_shape_and_volumes(self):
        grid = build_grid_2d((0.0, 4.0, 0.0, 1.0), 8, 2, 3)
        assert grid.shape == (24, 6)
        assert grid.n_cv == 144
        assert grid.n_sv == 16
        assert grid.cv_volumes().sum() == pytest.approx(4.0, rel=1e-13)

    def test_flat_index_round_trip(self):
        grid = build_grid_2d((0.0, 1.0, 0.0, 1.0), 3, 2, 3)
        seen = set()
        for i in range(3):
            for m in range(3):
                for j in range(2):
                    for n in range(3):
                        flat = grid.flat_index(i, m, j, n)
                        assert grid.split_index(flat) == (i, m, j, n)
                        seen.add(flat)
        assert seen == set(range(grid.n_cv))

    def test_bad_domain_length(self):
        with pytest.raises(ConfigurationError):
            build_grid_2d((0.0, 1.0, 0.0), 2, 2, 3)


class TestGaussRule:
    @pytest.mark.parametrize("n_q", range(1, MAX_GAUSS_POINTS + 1))
    def test_unit_weights_sum_to_one(self, n_q):
        assert gauss_rule(n_q).unit_weights().sum() == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("n_q", range(1, MAX_GAUSS_POINTS + 1))
    def test_exact_to_degree_2n_minus_1(self, n_q):
        rule = gauss_rule(n_q)
        t = rule.unit_nodes()
        w = rule.unit_weights()
        for d in range(2 * n_q):
            exact = 0.0 if d % 2 else (0.5 ** d) / (d + 1)
            assert np.dot(w, t ** d) == pytest.approx(exact, abs=1e-14)

    def test_mapped_interval(self):
        x, w = gauss_rule(3).mapped(0.0, 2.0)
        assert w.sum() == pytest.approx(2.0)
        assert np.dot(w, x ** 2) == pytest.approx(8.0 / 3.0)

    @pytest.mark.parametrize("n_q", [0, MAX_GAUSS_POINTS + 1])
    def test_unsupported_point_count(self, n_q):
        with pytest.raises(ConfigurationError):
            gauss_rule(n_q)
