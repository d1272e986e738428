"""Exact Riemann solver and the reference-solution helpers."""

import numpy as np
import pytest

from svweno.errors import ConfigurationError, SolverError
from svweno.harness.exact import (
    RIEMANN_PROBLEMS,
    exact_cell_averages,
    exact_riemann,
    project_averages,
    reference_solution,
    riemann_cell_averages,
)
from svweno.harness.presets import preset
from svweno.mesh import build_grid_1d
from svweno.models import ModelDescriptor
from svweno.solver import build_grid

EULER_1D = ModelDescriptor(kind="euler", dim=1)


class TestExactRiemann:
    def test_sod_star_state(self):
        left, right, _ = RIEMANN_PROBLEMS["sod"]
        sol = exact_riemann(left, right)
        assert sol.p_star == pytest.approx(0.30313, abs=1e-5)
        assert sol.u_star == pytest.approx(0.92745, abs=1e-5)

    def test_identical_states(self):
        sol = exact_riemann((1.0, 0.5, 2.0), (1.0, 0.5, 2.0))
        assert sol.p_star == pytest.approx(2.0, rel=1e-10)
        assert sol.u_star == pytest.approx(0.5, rel=1e-10)
        xi = np.linspace(-3.0, 3.0, 13)
        np.testing.assert_allclose(sol.sample(xi), np.broadcast_to([[1.0], [0.5], [2.0]], (3, 13)), rtol=1e-10)

    def test_symmetric_rarefactions(self):
        sol = exact_riemann((1.0, -1.0, 1.0), (1.0, 1.0, 1.0))
        assert sol.u_star == pytest.approx(0.0, abs=1e-12)
        assert sol.p_star < 1.0
        xi = np.array([-0.7, 0.7])
        out = sol.sample(xi)
        assert out[0, 0] == pytest.approx(out[0, 1])
        assert out[1, 0] == pytest.approx(-out[1, 1])

    def test_random_pairs_satisfy_jump_conditions(self):
        g = 1.4
        rng = np.random.default_rng(5)
        checked = 0
        for _ in range(60):
            left = (rng.uniform(0.2, 3.0), rng.uniform(-1.0, 1.0), rng.uniform(0.2, 5.0))
            right = (rng.uniform(0.2, 3.0), rng.uniform(-1.0, 1.0), rng.uniform(0.2, 5.0))
            sol = exact_riemann(left, right, g)
            # star states on either side of the contact
            star = sol.sample(np.array([sol.u_star - 1e-9, sol.u_star + 1e-9]))
            assert star[1] == pytest.approx([sol.u_star] * 2, rel=1e-9, abs=1e-12)
            assert star[2] == pytest.approx([sol.p_star] * 2, rel=1e-9)
            for side, (rho, u, p), sign in ((0, left, -1.0), (1, right, 1.0)):
                rho_s, u_s, p_s = star[:, side]
                if abs(sol.p_star / p - 1.0) < 0.05:
                    continue
                if sol.p_star > p:
                    E = p / (g - 1.0) + 0.5 * rho * u ** 2
                    E_s = p_s / (g - 1.0) + 0.5 * rho_s * u_s ** 2
                    jump_u = np.array([rho_s - rho, rho_s * u_s - rho * u, E_s - E])
                    jump_f = np.array([rho_s * u_s - rho * u,
                                       rho_s * u_s ** 2 + p_s - rho * u ** 2 - p,
                                       u_s * (E_s + p_s) - u * (E + p)])
                    s = jump_f[0] / jump_u[0]
                    np.testing.assert_allclose(s * jump_u, jump_f, rtol=1e-8, atol=1e-10)
                else:
                    a, a_s = np.sqrt(g * p / rho), np.sqrt(g * p_s / rho_s)
                    assert p_s / rho_s ** g == pytest.approx(p / rho ** g, rel=1e-10)
                    assert u_s - sign * 2.0 * a_s / (g - 1.0) == pytest.approx(
                        u - sign * 2.0 * a / (g - 1.0), rel=1e-8, abs=1e-10)
                checked += 1
        assert checked > 40

    def test_vacuum_is_rejected(self):
        with pytest.raises(SolverError):
            exact_riemann((1.0, -10.0, 1.0), (1.0, 10.0, 1.0))

    def test_nonpositive_state_is_rejected(self):
        with pytest.raises(ConfigurationError):
            exact_riemann((0.0, 0.0, 1.0), (1.0, 0.0, 1.0))

    def test_far_field_keeps_initial_states(self):
        left, right, _ = RIEMANN_PROBLEMS["sod"]
        out = exact_riemann(left, right).sample(np.array([-10.0, 10.0]))
        np.testing.assert_allclose(out[:, 0], left)
        np.testing.assert_allclose(out[:, 1], right)


class TestCellAverages:
    def test_initial_step(self):
        grid = build_grid_1d(-1.0, 1.0, 2, 2)
        left, right, _ = RIEMANN_PROBLEMS["sod"]
        U = riemann_cell_averages(grid, EULER_1D, exact_riemann(left, right), 0.0)
        np.testing.assert_allclose(U[0], [1.0, 1.0, 0.125, 0.125])

    def test_sod_mass_is_conserved(self):
        problem = preset("sod1d", n_sv=50)
        grid = build_grid(problem)
        U = exact_cell_averages(problem, grid, problem.t_final)
        # no wave reaches the boundary by t = 2
        assert float(U[0] @ grid.cv_widths) == pytest.approx(5.625, rel=1e-3)

    def test_smooth_exact_reference(self):
        problem = preset("advection1d", n_sv=10)
        grid = build_grid(problem)
        U = exact_cell_averages(problem, grid, 2.0)
        np.testing.assert_allclose(U, exact_cell_averages(problem, grid, 0.0), atol=1e-13)

    def test_no_exact_reference(self):
        problem = preset("shuosher", n_sv=10)
        assert exact_cell_averages(problem, build_grid(problem), 1.0) is None


class TestProjection:
    def test_constant_data(self):
        fine = np.full((2, 8), 3.0)
        out = project_averages(np.linspace(0.0, 1.0, 9), fine, np.array([0.0, 0.3, 1.0]))
        np.testing.assert_allclose(out, 3.0)

    def test_total_is_preserved(self):
        fine_edges = np.linspace(0.0, 2.0, 41)
        fine = np.random.default_rng(0).uniform(size=(1, 40))
        coarse_edges = np.array([0.0, 0.33, 1.01, 2.0])
        out = project_averages(fine_edges, fine, coarse_edges)
        assert float(out[0] @ np.diff(coarse_edges)) == pytest.approx(float(fine[0] @ np.diff(fine_edges)))

    def test_reference_needs_1d(self):
        with pytest.raises(ConfigurationError):
            reference_solution(preset("riemann2d_1", n_sv=2))

    def test_small_reference_run(self):
        problem = preset("sod1d", t_final=0.1)
        result = reference_solution(problem, n_cv=60, order=3)
        assert result.grid.n_cv == 60
        assert result.problem.order == 3
        assert result.field.t == pytest.approx(0.1)
