"""Reference solutions: exact Riemann problem, smooth exact solutions and fine-grid runs."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import newton

from ..errors import ConfigurationError, SolverError
from ..mesh import SVGrid1D, gauss_rule
from ..models import ModelDescriptor, ProblemConfig
from ..physics import primitive_to_conserved
from ..problems import averaging_points, cell_averages, get_exact_solution
from ..solver import RunResult, advance

logger = logging.getLogger(__name__)

Primitive = Tuple[float, float, float]

# initial condition name -> (left primitive, right primitive, interface position)
RIEMANN_PROBLEMS: Dict[str, Tuple[Primitive, Primitive, float]] = {
    "sod": ((1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.0),
    "lax": ((0.445, 0.698, 3.528), (0.5, 0.0, 0.571), 0.0),
}

NEWTON_TOL = 1e-12


def _pressure_function(p, rho, p_k, a_k, gamma):
    """Velocity jump across one wave and its derivative in p (shock or rarefaction)."""
    if p > p_k:
        A = 2.0 / ((gamma + 1.0) * rho)
        B = (gamma - 1.0) / (gamma + 1.0) * p_k
        root = np.sqrt(A / (p + B))
        return (p - p_k) * root, root * (1.0 - 0.5 * (p - p_k) / (B + p))
    ratio = p / p_k
    f = 2.0 * a_k / (gamma - 1.0) * (ratio ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = 1.0 / (rho * a_k) * ratio ** (-(gamma + 1.0) / (2.0 * gamma))
    return f, df


@dataclass(frozen=True)
class RiemannSolution:
    """Star state of a 1D Euler Riemann problem, sampled in ``xi = (x - x0) / t``."""

    left: Primitive
    right: Primitive
    gamma: float
    p_star: float
    u_star: float

    def sample(self, xi) -> np.ndarray:
        """Primitive ``(rho, U, P)`` at self-similar coordinates ``xi``, shape ``(3,) + xi.shape``."""
        xi = np.asarray(xi, dtype=float)
        g = self.gamma
        out = np.empty((3,) + xi.shape)
        left_side = xi <= self.u_star
        for side, state, sign in ((left_side, self.left, -1.0), (~left_side, self.right, 1.0)):
            if not np.any(side):
                continue
            rho, u, p = state
            a = np.sqrt(g * p / rho)
            s = xi[side]
            if self.p_star > p:
                # shock
                rho_star = rho * ((self.p_star / p + (g - 1.0) / (g + 1.0))
                                  / ((g - 1.0) / (g + 1.0) * self.p_star / p + 1.0))
                speed = u + sign * a * np.sqrt((g + 1.0) / (2.0 * g) * self.p_star / p
                                               + (g - 1.0) / (2.0 * g))
                outside = sign * (s - speed) > 0
                vals = np.where(outside, [[rho], [u], [p]], [[rho_star], [self.u_star], [self.p_star]])
            else:
                # rarefaction
                rho_star = rho * (self.p_star / p) ** (1.0 / g)
                a_star = a * (self.p_star / p) ** ((g - 1.0) / (2.0 * g))
                head = u + sign * a
                tail = self.u_star + sign * a_star
                outside = sign * (s - head) > 0
                inside_fan = (sign * (s - tail) > 0) & ~outside
                fan_u = 2.0 / (g + 1.0) * (-sign * a + (g - 1.0) / 2.0 * u + s)
                fan_c = 2.0 / (g + 1.0) * (a - sign * (g - 1.0) / 2.0 * (u - s))
                fan_rho = rho * (fan_c / a) ** (2.0 / (g - 1.0))
                fan_p = p * (fan_c / a) ** (2.0 * g / (g - 1.0))
                vals = np.empty((3, s.size))
                vals[0] = np.where(outside, rho, np.where(inside_fan, fan_rho, rho_star))
                vals[1] = np.where(outside, u, np.where(inside_fan, fan_u, self.u_star))
                vals[2] = np.where(outside, p, np.where(inside_fan, fan_p, self.p_star))
            out[:, side] = vals
        return out


def exact_riemann(left: Sequence[float], right: Sequence[float], gamma: float = 1.4) -> RiemannSolution:
    """Solve the star region by Newton iteration on the pressure function.

    Raises :class:`SolverError` when the data would create a vacuum.
    """
    rho_l, u_l, p_l = (float(v) for v in left)
    rho_r, u_r, p_r = (float(v) for v in right)
    if min(rho_l, rho_r, p_l, p_r) <= 0.0:
        raise ConfigurationError(f"Riemann states must have positive density and pressure: {left}, {right}")
    a_l = np.sqrt(gamma * p_l / rho_l)
    a_r = np.sqrt(gamma * p_r / rho_r)
    du = u_r - u_l
    if 2.0 / (gamma - 1.0) * (a_l + a_r) <= du:
        raise SolverError("Riemann data generate a vacuum", details={"left": left, "right": right})

    def func(p):
        fl, _ = _pressure_function(p, rho_l, p_l, a_l, gamma)
        fr, _ = _pressure_function(p, rho_r, p_r, a_r, gamma)
        return fl + fr + du

    def fprime(p):
        return _pressure_function(p, rho_l, p_l, a_l, gamma)[1] + _pressure_function(p, rho_r, p_r, a_r, gamma)[1]

    # two-rarefaction guess
    z = (gamma - 1.0) / (2.0 * gamma)
    guess = ((a_l + a_r - 0.5 * (gamma - 1.0) * du) / (a_l / p_l ** z + a_r / p_r ** z)) ** (1.0 / z)
    p_star = float(newton(func, max(guess, 1e-10), fprime=fprime, tol=NEWTON_TOL, maxiter=100))
    if p_star <= 0.0:
        raise SolverError(f"Riemann pressure iteration produced p* = {p_star}")
    fl, _ = _pressure_function(p_star, rho_l, p_l, a_l, gamma)
    fr, _ = _pressure_function(p_star, rho_r, p_r, a_r, gamma)
    u_star = 0.5 * (u_l + u_r) + 0.5 * (fr - fl)
    logger.debug(f"Exact Riemann star state: p*={p_star:.12g}, u*={u_star:.12g}")
    return RiemannSolution(left=(rho_l, u_l, p_l), right=(rho_r, u_r, p_r), gamma=gamma,
                           p_star=p_star, u_star=u_star)


def riemann_cell_averages(grid: SVGrid1D, model: ModelDescriptor, solution: RiemannSolution,
                          t: float, x0: float = 0.0, subcells: int = 8) -> np.ndarray:
    """Conserved CV averages of the exact solution at time ``t``.

    Each CV is split into ``subcells`` pieces with a 6-point Gauss rule, since
    the solution is only piecewise smooth.
    """
    rule = gauss_rule(6)
    nodes = rule.unit_nodes()
    weights = rule.unit_weights()
    offsets = (np.arange(subcells) + 0.5) / subcells - 0.5
    local = (offsets[:, None] + nodes[None, :] / subcells).ravel()
    w = np.tile(weights, subcells) / subcells
    x = grid.cv_centers[:, None] + grid.cv_widths[:, None] * local[None, :]
    if t > 0:
        prim = solution.sample((x - x0) / t)
    else:
        prim = np.where(x[None] < x0, np.reshape(solution.left, (3, 1, 1)),
                        np.reshape(solution.right, (3, 1, 1)))
    return primitive_to_conserved(model, prim) @ w


def exact_cell_averages(problem: ProblemConfig, grid, t: float) -> Optional[np.ndarray]:
    """Exact CV averages for ``exact``/``riemann`` references, ``None`` otherwise."""
    model = problem.model
    if problem.reference == "exact":
        solution = get_exact_solution(problem.initial_condition)
        if solution is None:
            raise ConfigurationError(f"No exact solution registered for '{problem.initial_condition}'")
        return cell_averages(grid, lambda *xs: solution(model, t, *xs), averaging_points(grid.order))
    if problem.reference == "riemann":
        entry = RIEMANN_PROBLEMS.get(problem.initial_condition)
        if entry is None:
            raise ConfigurationError(f"No Riemann data registered for '{problem.initial_condition}'")
        left, right, x0 = entry
        return riemann_cell_averages(grid, model, exact_riemann(left, right, model.gamma), t, x0)
    return None


# ---------------------------------------------------------------------------
# Fine-grid references
# ---------------------------------------------------------------------------


def project_averages(fine_edges: np.ndarray, fine: np.ndarray, coarse_edges: np.ndarray) -> np.ndarray:
    """Conservatively average piecewise-constant fine data onto coarse cells."""
    widths = np.diff(fine_edges)
    cumulative = np.concatenate([np.zeros((fine.shape[0], 1)), np.cumsum(fine * widths, axis=1)], axis=1)
    integral = np.stack([np.interp(coarse_edges, fine_edges, row) for row in cumulative])
    return np.diff(integral, axis=1) / np.diff(coarse_edges)


def reference_solution(problem: ProblemConfig, n_cv: int = 4000, order: int = 5,
                       tvb_m: float = 0.01) -> RunResult:
    """Run ``problem`` on a fine 1D grid of ``n_cv`` CVs."""
    if problem.model.dim != 1:
        raise ConfigurationError("Fine-grid references are only provided for 1D problems")
    n_sv = max(1, n_cv // order)
    fine = problem.model_copy(deep=True, update={
        "name": f"{problem.name}-reference",
        "n_sv": n_sv,
        "order": order,
        "limiter": problem.limiter.model_copy(update={"tvb_m": tvb_m}),
    })
    logger.info(f"Computing fine-grid reference for '{problem.name}': {n_sv * order} CVs, k={order}")
    return advance(fine, keep_history=False)


def reference_cell_averages(problem: ProblemConfig, grid: SVGrid1D, reference=None, **kwargs) -> np.ndarray:
    """Fine-grid reference projected onto ``grid``; computes it when not given."""
    result = reference if reference is not None else reference_solution(problem, **kwargs)
    return project_averages(result.grid.cv_edges, result.field.averages, grid.cv_edges)
