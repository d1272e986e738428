"""Initial conditions, smooth exact solutions and time-dependent boundary profiles.

Each table maps a name (the value stored in ``ProblemConfig.initial_condition``
or ``BoundaryCondition.profile``) to a function returning conserved states
with the component on axis 0. Initial conditions take the coordinate arrays;
exact solutions additionally take the time; boundary profiles take the time,
the coordinate along the side and the interior states next to it.
"""

import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .mesh import MAX_GAUSS_POINTS, SVGrid1D, gauss_rule
from .models import ModelDescriptor
from .physics import primitive_to_conserved, reflect

logger = logging.getLogger(__name__)

InitialCondition = Callable[..., np.ndarray]
ExactSolution = Callable[..., np.ndarray]
BoundaryProfile = Callable[[ModelDescriptor, float, np.ndarray, np.ndarray, int], np.ndarray]

INITIAL_CONDITIONS: Dict[str, InitialCondition] = {}
EXACT_SOLUTIONS: Dict[str, ExactSolution] = {}
BOUNDARY_PROFILES: Dict[str, BoundaryProfile] = {}

# double Mach reflection states, conserved (rho, rho U, rho V, E)
DOUBLE_MACH_LEFT = (8.0, 57.1597, -33.0012, 563.544)
DOUBLE_MACH_RIGHT = (1.4, 0.0, 0.0, 2.5)
DOUBLE_MACH_CORNER = 1.0 / 6.0


def _register(table: Dict[str, Callable], name: str):
    def decorator(func):
        table[name] = func
        return func
    return decorator


def _piecewise(model: ModelDescriptor, x: np.ndarray, cuts: Sequence[float],
               states: Sequence[Tuple[float, ...]]) -> np.ndarray:
    """Primitive states separated at increasing ``cuts``, converted to conserved."""
    prim = np.empty((len(states[0]),) + x.shape)
    region = np.searchsorted(np.asarray(cuts), x, side="right")
    for r, state in enumerate(states):
        sel = region == r
        for c, value in enumerate(state):
            prim[c][sel] = value
    return primitive_to_conserved(model, prim)


def _require(model: ModelDescriptor, kind: str, dim: int, name: str) -> None:
    if model.kind != kind or model.dim != dim:
        raise ConfigurationError(
            f"Initial condition '{name}' needs a {dim}D {kind} model, got {model.dim}D {model.kind}"
        )


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------


@_register(INITIAL_CONDITIONS, "sine_wave")
def sine_wave(model: ModelDescriptor, x, y=None) -> np.ndarray:
    """sin(pi x) in 1D, sin(pi (x + y)) in 2D (scalar advection)."""
    return sine_wave_exact(model, 0.0, x, y)


@_register(INITIAL_CONDITIONS, "euler_sine")
def euler_sine(model: ModelDescriptor, x) -> np.ndarray:
    return euler_sine_exact(model, 0.0, x)


@_register(INITIAL_CONDITIONS, "uniform")
def uniform(model: ModelDescriptor, x, y=None) -> np.ndarray:
    """Fluid at rest with rho = p = 1, or u = 1 for advection."""
    shape = np.shape(x)
    if model.kind == "advection":
        return np.ones((1,) + shape)
    prim = np.zeros((model.n_components,) + shape)
    prim[0] = 1.0
    prim[-1] = 1.0
    return primitive_to_conserved(model, prim)


@_register(INITIAL_CONDITIONS, "sod")
def sod(model: ModelDescriptor, x) -> np.ndarray:
    _require(model, "euler", 1, "sod")
    return _piecewise(model, np.asarray(x, dtype=float), [0.0], [(1.0, 0.0, 1.0), (0.125, 0.0, 0.1)])


@_register(INITIAL_CONDITIONS, "lax")
def lax(model: ModelDescriptor, x) -> np.ndarray:
    _require(model, "euler", 1, "lax")
    return _piecewise(model, np.asarray(x, dtype=float), [0.0],
                      [(0.445, 0.698, 3.528), (0.5, 0.0, 0.571)])


@_register(INITIAL_CONDITIONS, "shu_osher")
def shu_osher(model: ModelDescriptor, x) -> np.ndarray:
    _require(model, "euler", 1, "shu_osher")
    x = np.asarray(x, dtype=float)
    left = x < -4.0
    prim = np.empty((3,) + x.shape)
    prim[0] = np.where(left, 3.857134, 1.0 + 0.2 * np.sin(5.0 * x))
    prim[1] = np.where(left, 2.629369, 0.0)
    prim[2] = np.where(left, 10.33333, 1.0)
    return primitive_to_conserved(model, prim)


@_register(INITIAL_CONDITIONS, "blast")
def blast(model: ModelDescriptor, x) -> np.ndarray:
    _require(model, "euler", 1, "blast")
    return _piecewise(model, np.asarray(x, dtype=float), [0.1, 0.9],
                      [(1.0, 0.0, 1000.0), (1.0, 0.0, 0.01), (1.0, 0.0, 100.0)])


def _quadrants(model: ModelDescriptor, x, y, states) -> np.ndarray:
    """States ordered (x>.5,y>.5), (x<.5,y>.5), (x<.5,y<.5), (x>.5,y<.5)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    east = x > 0.5
    north = y > 0.5
    masks = (east & north, ~east & north, ~east & ~north, east & ~north)
    prim = np.empty((4,) + x.shape)
    for sel, state in zip(masks, states):
        for c, value in enumerate(state):
            prim[c][sel] = value
    return primitive_to_conserved(model, prim)


@_register(INITIAL_CONDITIONS, "riemann2d_1")
def riemann2d_1(model: ModelDescriptor, x, y) -> np.ndarray:
    _require(model, "euler", 2, "riemann2d_1")
    return _quadrants(model, x, y, [
        (0.5313, 0.0, 0.0, 0.4),
        (1.0, 0.7276, 0.0, 1.0),
        (0.8, 0.0, 0.0, 1.0),
        (1.0, 0.0, 0.7276, 1.0),
    ])


@_register(INITIAL_CONDITIONS, "riemann2d_2")
def riemann2d_2(model: ModelDescriptor, x, y) -> np.ndarray:
    _require(model, "euler", 2, "riemann2d_2")
    return _quadrants(model, x, y, [
        (1.0, 0.1, -0.3, 1.0),
        (0.5197, -0.6259, -0.3, 0.4),
        (0.8, 0.1, -0.3, 0.4),
        (0.5313, 0.1, 0.4276, 0.4),
    ])


def double_mach_shock_height(x, t: float):
    """Shock line y = sqrt(3) (x - 1/6) - 20 t."""
    return np.sqrt(3.0) * (np.asarray(x, dtype=float) - DOUBLE_MACH_CORNER) - 20.0 * t


@_register(INITIAL_CONDITIONS, "double_mach")
def double_mach(model: ModelDescriptor, x, y) -> np.ndarray:
    _require(model, "euler", 2, "double_mach")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    post = y > double_mach_shock_height(x, 0.0)
    left = np.asarray(DOUBLE_MACH_LEFT).reshape((4,) + (1,) * x.ndim)
    right = np.asarray(DOUBLE_MACH_RIGHT).reshape((4,) + (1,) * x.ndim)
    return np.where(post[None], left, right)


# ---------------------------------------------------------------------------
# Exact smooth solutions
# ---------------------------------------------------------------------------


@_register(EXACT_SOLUTIONS, "sine_wave")
def sine_wave_exact(model: ModelDescriptor, t: float, x, y=None) -> np.ndarray:
    cx, cy = model.velocity
    x = np.asarray(x, dtype=float)
    if y is None:
        return np.sin(np.pi * (x - cx * t))[None]
    return np.sin(np.pi * (x + np.asarray(y, dtype=float) - (cx + cy) * t))[None]


@_register(EXACT_SOLUTIONS, "euler_sine")
def euler_sine_exact(model: ModelDescriptor, t: float, x) -> np.ndarray:
    """Density wave 1 + 0.2 sin(pi (x - 0.7 t)) carried at U = 0.7 with P = 1."""
    _require(model, "euler", 1, "euler_sine")
    x = np.asarray(x, dtype=float)
    prim = np.empty((3,) + x.shape)
    prim[0] = 1.0 + 0.2 * np.sin(np.pi * (x - 0.7 * t))
    prim[1] = 0.7
    prim[2] = 1.0
    return primitive_to_conserved(model, prim)


@_register(EXACT_SOLUTIONS, "uniform")
def uniform_exact(model: ModelDescriptor, t: float, x, y=None) -> np.ndarray:
    return uniform(model, x, y)


# ---------------------------------------------------------------------------
# Boundary profiles
# ---------------------------------------------------------------------------


def _state_like(state: Sequence[float], like: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(state, dtype=float).reshape((-1,) + (1,) * (like.ndim - 1)),
                           like.shape).copy()


@_register(BOUNDARY_PROFILES, "double_mach_top")
def double_mach_top(model: ModelDescriptor, t: float, s: np.ndarray, interior: np.ndarray,
                    axis: int) -> np.ndarray:
    """Post-shock state left of ``x_s(t) = 1/6 + (1 + 20 t)/sqrt(3)``, pre-shock right of it."""
    x_s = DOUBLE_MACH_CORNER + (1.0 + 20.0 * t) / np.sqrt(3.0)
    post = np.broadcast_to(np.asarray(s) < x_s, interior.shape[1:])
    return np.where(post[None], _state_like(DOUBLE_MACH_LEFT, interior),
                    _state_like(DOUBLE_MACH_RIGHT, interior))


@_register(BOUNDARY_PROFILES, "double_mach_bottom")
def double_mach_bottom(model: ModelDescriptor, t: float, s: np.ndarray, interior: np.ndarray,
                       axis: int) -> np.ndarray:
    """Post-shock inflow for x < 1/6, reflecting wall beyond."""
    inflow = np.broadcast_to(np.asarray(s) < DOUBLE_MACH_CORNER, interior.shape[1:])
    return np.where(inflow[None], _state_like(DOUBLE_MACH_LEFT, interior),
                    reflect(model, interior, axis))


def get_initial_condition(name: str) -> InitialCondition:
    try:
        return INITIAL_CONDITIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown initial condition '{name}'; known: {', '.join(sorted(INITIAL_CONDITIONS))}"
        ) from None


def get_exact_solution(name: str) -> Optional[ExactSolution]:
    return EXACT_SOLUTIONS.get(name)


def get_boundary_profile(name: str) -> BoundaryProfile:
    try:
        return BOUNDARY_PROFILES[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown boundary profile '{name}'; known: {', '.join(sorted(BOUNDARY_PROFILES))}"
        ) from None


# ---------------------------------------------------------------------------
# CV averages by quadrature
# ---------------------------------------------------------------------------


def averaging_points(order: int) -> int:
    """Gauss points per axis for CV averages of analytic data (k + 2, capped)."""
    return min(order + 2, MAX_GAUSS_POINTS)


def cell_averages(grid, func: Callable[..., np.ndarray], n_q: Optional[int] = None) -> np.ndarray:
    """CV averages of ``func(x)`` / ``func(x, y)`` by tensor Gauss quadrature.

    Returns ``(n_var, n_cv)`` in 1D and ``(n_var, NX, NY)`` in 2D.
    """
    rule = gauss_rule(n_q or averaging_points(grid.order))
    nodes = rule.unit_nodes()
    weights = rule.unit_weights()
    if isinstance(grid, SVGrid1D):
        x = grid.cv_centers[:, None] + grid.cv_widths[:, None] * nodes[None, :]
        values = func(x)
        return np.einsum("vcq,q->vc", values, weights)
    x = grid.x.cv_centers[:, None] + grid.x.cv_widths[:, None] * nodes[None, :]
    y = grid.y.cv_centers[:, None] + grid.y.cv_widths[:, None] * nodes[None, :]
    X = x[:, :, None, None]
    Y = y[None, None, :, :]
    X, Y = np.broadcast_arrays(X, Y)
    values = func(X, Y)
    return np.einsum("vapbq,p,q->vab", values, weights, weights)
