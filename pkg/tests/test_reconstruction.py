"""SV reconstruction, CV-frame restriction and the limiter's stencil polynomials.

Reconstruction must reproduce every CV average of its SV and be exact for
polynomials of degree k - 1; the least-squares polynomial must match the
target average exactly; the batched per-position operators must agree with
the single-cell functions.
"""

import numpy as np
import pytest

from svweno.errors import EvaluationDomainError, SolverError
from svweno.mesh import build_grid_1d, build_grid_2d
from svweno.reconstruction import (
    CVPolynomial,
    basis_for_grid,
    build_basis,
    build_stencil_operators_1d,
    build_stencil_operators_2d,
    evaluate,
    evaluate_face_states,
    interval_moments,
    least_squares_p0,
    least_squares_p0_2d,
    linear_candidates,
    linear_candidates_2d,
    reconstruct_all_1d,
    reconstruct_all_2d,
    reconstruct_sv,
    restrict_to_cv,
)


def cubic(x):
    return 1.0 + 2.0 * x - 0.5 * x ** 2 + 0.25 * x ** 3


def cubic_average(lo, hi):
    def primitive(x):
        return x + x ** 2 - x ** 3 / 6.0 + x ** 4 / 16.0
    return (primitive(hi) - primitive(lo)) / (hi - lo)


def test_interval_moments():
    np.testing.assert_allclose(interval_moments(0.0, 1.0, 3), [1.0, 0.5, 1.0 / 3.0, 0.25])
    np.testing.assert_allclose(interval_moments(-0.5, 0.5, 2), [1.0, 0.0, 1.0 / 12.0])


class TestSVReconstruction:
    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_reproduces_cv_averages(self, k):
        grid = build_grid_1d(0.0, 1.0, 1, k)
        basis = basis_for_grid(grid)
        averages = np.random.default_rng(k).normal(size=k)
        poly = reconstruct_sv(basis, averages)
        back = basis.A @ poly.coeffs
        np.testing.assert_allclose(back, averages, atol=1e-12)

    def test_exact_for_cubic_at_order_four(self):
        grid = build_grid_1d(-1.0, 1.0, 1, 4)
        basis = basis_for_grid(grid)
        e = grid.cv_edges
        poly = reconstruct_sv(basis, cubic_average(e[:-1], e[1:]), center=(0.0,), width=(2.0,))
        x = np.linspace(-1.0, 1.0, 9)
        np.testing.assert_allclose(evaluate(poly, x), cubic(x), atol=1e-12)

    def test_evaluation_outside_owning_sv(self):
        basis = build_basis(3, [0.25, 0.5, 0.25])
        poly = reconstruct_sv(basis, np.ones(3), center=(0.0,), width=(1.0,))
        with pytest.raises(EvaluationDomainError):
            evaluate(poly, np.array([0.6]))

    def test_non_finite_input(self):
        basis = build_basis(3, [0.25, 0.5, 0.25])
        with pytest.raises(SolverError):
            reconstruct_sv(basis, np.array([1.0, np.nan, 1.0]))

    def test_bad_cv_pattern(self):
        with pytest.raises(SolverError):
            build_basis(3, [0.5, 0.5])

    def test_batched_matches_single(self):
        grid = build_grid_1d(0.0, 1.0, 4, 3)
        basis = basis_for_grid(grid)
        u = np.random.default_rng(1).normal(size=(2, grid.n_cv))
        W = reconstruct_all_1d(basis, u)
        for i in range(4):
            single = reconstruct_sv(basis, u[:, 3 * i:3 * i + 3])
            np.testing.assert_allclose(W[:, i], single.coeffs, atol=1e-13)

    def test_tensor_product_reproduces_2d_averages(self):
        grid = build_grid_2d((0.0, 1.0, 0.0, 1.0), 2, 3, 3)
        basis = basis_for_grid(grid.x)
        u = np.random.default_rng(2).normal(size=(1,) + grid.shape)
        W = reconstruct_all_2d(basis, u)
        assert W.shape == (1, 2, 3, 3, 3)
        back = np.einsum("ml,nr,vijlr->vimjn", basis.A, basis.A, W).reshape(u.shape)
        np.testing.assert_allclose(back, u, atol=1e-12)


class TestFaceStates:
    def test_traces_continuous_inside_sv(self):
        grid = build_grid_1d(0.0, 1.0, 3, 4)
        basis = basis_for_grid(grid)
        u = np.random.default_rng(3).normal(size=(1, grid.n_cv))
        tr = evaluate_face_states(grid, basis, reconstruct_all_1d(basis, u))
        for face in range(1, grid.n_cv):
            if face % 4:
                assert tr.hi[0, face - 1] == pytest.approx(tr.lo[0, face], abs=1e-12)

    def test_2d_traces_of_linear_field(self):
        grid = build_grid_2d((0.0, 1.0, 0.0, 1.0), 2, 2, 3)
        basis = basis_for_grid(grid.x)
        # CV averages of f = x + 2y are the CV-center values
        X, Y = np.meshgrid(grid.x.cv_centers, grid.y.cv_centers, indexing="ij")
        tr = evaluate_face_states(grid, basis, reconstruct_all_2d(basis, (X + 2 * Y)[None]))
        x_lo = grid.x.cv_edges[:-1][:, None, None]
        y_gauss = (grid.y.cv_centers[:, None] + grid.y.cv_widths[:, None] * basis.rule.unit_nodes())[None]
        np.testing.assert_allclose(tr.west[0], x_lo + 2 * y_gauss, atol=1e-12)


class TestRestriction:
    def test_restricted_polynomial_has_cv_average(self):
        grid = build_grid_1d(0.0, 1.0, 1, 5)
        basis = basis_for_grid(grid)
        u = np.random.default_rng(4).normal(size=5)
        poly = reconstruct_sv(basis, u, center=(0.5,), width=(1.0,))
        e = grid.cv_edges
        for m in range(5):
            cv = restrict_to_cv(poly, (e[m],), (e[m + 1],))
            assert cv.average() == pytest.approx(u[m], abs=1e-12)
            x = np.linspace(e[m], e[m + 1], 4)
            np.testing.assert_allclose(evaluate(cv, x), evaluate(poly, x), atol=1e-12)


class TestStencilPolynomials:
    def test_least_squares_matches_target_average(self):
        edges = np.array([0.0, 0.1, 0.35, 0.65, 0.9, 1.0])
        averages = np.array([0.3, -0.2, 1.5, 0.7, 0.0])
        p0 = least_squares_p0(edges, averages, 2, 3)
        assert p0.average() == pytest.approx(1.5, abs=1e-13)

    def test_least_squares_exact_for_quadratics(self):
        edges = np.array([-0.4, -0.1, 0.0, 0.2, 0.5, 0.9])

        def avg(lo, hi):
            return ((hi ** 3 - lo ** 3) / 3.0 - (hi ** 2 - lo ** 2)) / (hi - lo) + 2.0

        p0 = least_squares_p0(edges, avg(edges[:-1], edges[1:]), 2, 3)
        x = np.linspace(0.0, 0.2, 5)
        np.testing.assert_allclose(evaluate(p0, x), x ** 2 - 2 * x + 2.0, atol=1e-12)

    @staticmethod
    def _dense_constrained_fit(A, u, target):
        """Augmented KKT system of min ||A_o c - u_o|| subject to a_t c = u_t."""
        S, P = A.shape
        others = [s for s in range(S) if s != target]
        n_r = S - 1
        M = np.zeros((n_r + P + 1, n_r + P + 1))
        M[:n_r, :n_r] = np.eye(n_r)
        M[:n_r, n_r:n_r + P] = A[others]
        M[n_r:n_r + P, :n_r] = A[others].T
        M[n_r:n_r + P, -1] = -A[target]
        M[-1, n_r:n_r + P] = A[target]
        rhs = np.concatenate([u[others], np.zeros(P), [u[target]]])
        return np.linalg.solve(M, rhs)[n_r:n_r + P]

    @staticmethod
    def _gauss_moments(edges, c, h, k):
        nodes, weights = np.polynomial.legendre.leggauss(k + 2)
        lo, hi = (edges[:-1] - c) / h, (edges[1:] - c) / h
        pts = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * nodes[None, :]
        return 0.5 * np.einsum("q,sqj->sj", weights, pts[..., None] ** np.arange(k))

    @pytest.mark.parametrize("k,n_cells", [(3, 5), (4, 5), (5, 5), (3, 7)])
    def test_least_squares_matches_dense_constrained_solve(self, k, n_cells):
        rng = np.random.default_rng(k * 10 + n_cells)
        for _ in range(5):
            edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.8, 1.2, n_cells))])
            averages = rng.normal(size=n_cells)
            target = int(rng.integers(1, n_cells - 1))
            p0 = least_squares_p0(edges, averages, target, k)
            A = self._gauss_moments(edges, p0.center[0], p0.width[0], k)
            expected = self._dense_constrained_fit(A, averages, target)
            np.testing.assert_allclose(p0.coeffs, expected, rtol=1e-10, atol=1e-10)

    def test_least_squares_2d_matches_dense_constrained_solve(self):
        k = 3
        rng = np.random.default_rng(21)
        x_edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.8, 1.2, 5))])
        y_edges = np.concatenate([[0.0], np.cumsum(rng.uniform(0.8, 1.2, 5))])
        averages = rng.normal(size=(5, 5))
        p0 = least_squares_p0_2d(x_edges, y_edges, averages, (2, 2), k)
        mx = self._gauss_moments(x_edges, p0.center[0], p0.width[0], k)
        my = self._gauss_moments(y_edges, p0.center[1], p0.width[1], k)
        A = np.einsum("al,br->ablr", mx, my).reshape(25, k * k)
        expected = self._dense_constrained_fit(A, averages.ravel(), 2 * 5 + 2).reshape(k, k)
        np.testing.assert_allclose(p0.coeffs, expected, rtol=1e-10, atol=1e-10)

    def test_linear_candidates_match_their_averages(self):
        edges = np.array([0.0, 1.0, 2.0, 3.0])
        averages = np.array([0.0, 0.0, 1.0])
        left, right = linear_candidates(edges, averages, 1, 3)
        np.testing.assert_allclose(left.coeffs, [0.0, 0.0, 0.0])
        np.testing.assert_allclose(right.coeffs, [0.0, 1.0, 0.0])
        assert right.average() == pytest.approx(0.0)

    def test_planar_candidates_are_exact_for_planes(self):
        xe = np.array([0.0, 0.2, 0.5, 1.0])
        ye = np.array([0.0, 0.3, 0.4, 1.0])
        xc = 0.5 * (xe[:-1] + xe[1:])
        yc = 0.5 * (ye[:-1] + ye[1:])
        U = 1.0 + 2.0 * xc[:, None] - 3.0 * yc[None, :]
        target = (1, 1)
        p0 = least_squares_p0_2d(xe, ye, U, target, 2)
        for cand in linear_candidates_2d(xe, ye, U, target, 2) + [p0]:
            value = evaluate(cand, np.array([0.45]), np.array([0.32]))
            assert value[0] == pytest.approx(1.0 + 0.9 - 0.96, abs=1e-12)


class TestStencilOperators:
    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_1d_operators_match_single_cell_functions(self, k):
        grid = build_grid_1d(0.0, 3.0, 3, k)
        ops = build_stencil_operators_1d(grid)
        H = ops.half_width
        u = np.random.default_rng(k).normal(size=grid.n_cv)
        for m in range(k):
            g = k + m  # middle SV
            sel = slice(g - H, g + H + 1)
            edges = grid.cv_edges[g - H:g + H + 2]
            p0 = least_squares_p0(edges, u[sel], H, k)
            np.testing.assert_allclose(ops.p0[m] @ u[sel], p0.coeffs, atol=1e-10)
            cands = linear_candidates(edges, u[sel], H, k)
            for c in range(2):
                np.testing.assert_allclose(ops.cand[m, c] @ u[sel], cands[c].coeffs, atol=1e-10)

    def test_2d_operators_match_single_cell_functions(self):
        k = 3
        grid = build_grid_2d((0.0, 3.0, 0.0, 3.0), 3, 3, k)
        ops = build_stencil_operators_2d(grid)
        H = ops.half_width
        S = 2 * H + 1
        u = np.random.default_rng(7).normal(size=grid.shape)
        m, n = 2, 0
        gx, gy = k + m, k + n
        box = u[gx - H:gx + H + 1, gy - H:gy + H + 1]
        xe = grid.x.cv_edges[gx - H:gx + H + 2]
        ye = grid.y.cv_edges[gy - H:gy + H + 2]
        p0 = least_squares_p0_2d(xe, ye, box, (H, H), k)
        np.testing.assert_allclose(ops.p0[m, n] @ box.reshape(S * S), p0.coeffs.ravel(), atol=1e-10)
        cands = linear_candidates_2d(xe, ye, box, (H, H), k)
        for c in range(4):
            np.testing.assert_allclose(ops.cand[m, n, c] @ box.reshape(S * S), cands[c].coeffs.ravel(),
                                       atol=1e-10)

    def test_constant_data_gives_constant_polynomials(self):
        grid = build_grid_1d(0.0, 1.0, 3, 4)
        ops = build_stencil_operators_1d(grid)
        ones = np.ones(2 * ops.half_width + 1)
        for m in range(4):
            expected = np.zeros(4)
            expected[0] = 1.0
            np.testing.assert_allclose(ops.p0[m] @ ones, expected, atol=1e-12)
            np.testing.assert_allclose(ops.cand[m] @ ones, np.broadcast_to(expected, (2, 4)), atol=1e-12)

    def test_cv_polynomial_dim(self):
        assert CVPolynomial(coeffs=np.zeros(3), center=(0.0,), width=(1.0,)).dim == 1
