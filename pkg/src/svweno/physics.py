"""Conservation-law models: linear advection and the Euler equations in 1D/2D.

All functions take conserved states as arrays with the component on axis 0,
``U.shape == (n_components, ...)``, and work element-wise over the trailing
axes. ``axis`` is 0 (x) or 1 (y); the strings ``"x"``/``"y"`` are accepted too.

Euler components are ``(rho, rho*U, E)`` in 1D and ``(rho, rho*U, rho*V, E)``
in 2D with the ideal-gas pressure ``p = (gamma - 1) * (E - rho * |u|^2 / 2)``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import NonPhysicalStateError
from .models import ModelDescriptor

logger = logging.getLogger(__name__)

AxisLike = Union[int, str]


def _axis(axis: AxisLike) -> int:
    if axis in (0, "x"):
        return 0
    if axis in (1, "y"):
        return 1
    raise ValueError(f"axis must be 0/'x' or 1/'y', got {axis!r}")


def _swap_xy(model: ModelDescriptor, U: np.ndarray) -> np.ndarray:
    """Exchange the x/y momentum components of a 2D Euler state."""
    return U[[0, 2, 1, 3]]


@dataclass(frozen=True)
class CharacteristicBasis:
    """Left/right eigenvectors of the flux Jacobian, batched as ``(T, n, n)``."""

    left: np.ndarray
    right: np.ndarray

    def to_characteristic(self, W: np.ndarray) -> np.ndarray:
        """Project conserved values ``(T, ..., n)`` onto characteristic variables."""
        return np.einsum("tij,t...j->t...i", self.left, W)

    def from_characteristic(self, C: np.ndarray) -> np.ndarray:
        return np.einsum("tij,t...j->t...i", self.right, C)


def pressure(model: ModelDescriptor, U: np.ndarray) -> np.ndarray:
    rho = U[0]
    kinetic = 0.5 * np.sum(U[1:-1] ** 2, axis=0) / rho
    return (model.gamma - 1.0) * (U[-1] - kinetic)


def check_physical(model: ModelDescriptor, U: np.ndarray, where: str = "state") -> None:
    """Raise :class:`NonPhysicalStateError` unless every state is finite and, for
    Euler, has positive density and pressure."""
    U = np.asarray(U, dtype=float)
    bad = ~np.all(np.isfinite(U), axis=0)
    if model.kind == "euler":
        with np.errstate(all="ignore"):
            bad |= ~(U[0] > 0.0)
            bad |= ~(pressure(model, U) > 0.0)
    if np.any(bad):
        locations = np.flatnonzero(np.atleast_1d(bad)).tolist()
        raise NonPhysicalStateError(
            f"Nonphysical {where} at {len(locations)} location(s), first {locations[:5]}",
            details={"locations": locations},
        )


def primitive_to_conserved(model: ModelDescriptor, prim) -> np.ndarray:
    """(rho, U[, V], P) -> (rho, rho U[, rho V], E); identity for advection."""
    W = np.asarray(prim, dtype=float)
    if model.kind == "advection":
        return W.copy()
    rho = W[0]
    vel = W[1:-1]
    p = W[-1]
    U = np.empty_like(W)
    U[0] = rho
    U[1:-1] = rho * vel
    U[-1] = p / (model.gamma - 1.0) + 0.5 * rho * np.sum(vel ** 2, axis=0)
    check_physical(model, U, "primitive state")
    return U


def conserved_to_primitive(model: ModelDescriptor, U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if model.kind == "advection":
        return U.copy()
    check_physical(model, U, "conserved state")
    W = np.empty_like(U)
    W[0] = U[0]
    W[1:-1] = U[1:-1] / U[0]
    W[-1] = pressure(model, U)
    return W


def sound_speed(model: ModelDescriptor, U: np.ndarray) -> np.ndarray:
    return np.sqrt(model.gamma * pressure(model, U) / U[0])


def analytic_flux(model: ModelDescriptor, U: np.ndarray, axis: AxisLike = 0,
                  check: bool = True) -> np.ndarray:
    """Exact flux f(U) (axis 0) or g(U) (axis 1)."""
    ax = _axis(axis)
    U = np.asarray(U, dtype=float)
    if model.kind == "advection":
        return model.velocity[ax] * U
    if check:
        check_physical(model, U, "flux state")
    p = pressure(model, U)
    vn = U[1 + ax] / U[0]
    F = vn * U
    F[1 + ax] += p
    F[-1] += vn * p
    return F


def max_wavespeed(model: ModelDescriptor, U: np.ndarray, axis: AxisLike = 0,
                  check: bool = True) -> np.ndarray:
    """|c| for advection, |u_axis| + sqrt(gamma p / rho) for Euler."""
    ax = _axis(axis)
    U = np.asarray(U, dtype=float)
    if model.kind == "advection":
        return np.full(U.shape[1:], abs(model.velocity[ax]))
    if check:
        check_physical(model, U, "wave-speed state")
    return np.abs(U[1 + ax] / U[0]) + sound_speed(model, U)


def lax_friedrichs(model: ModelDescriptor, UL: np.ndarray, UR: np.ndarray,
                   axis: AxisLike = 0, alpha: Optional[Union[float, np.ndarray]] = None,
                   check: bool = True) -> np.ndarray:
    """Lax-Friedrichs flux 0.5 (f(UL) + f(UR)) - 0.5 alpha (UR - UL).

    ``alpha`` defaults to the local two-state maximum wave speed (Rusanov);
    pass a scalar for the global variant.
    """
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    fL = analytic_flux(model, UL, axis, check=check)
    fR = analytic_flux(model, UR, axis, check=check)
    if alpha is None:
        alpha = np.maximum(max_wavespeed(model, UL, axis, check=False),
                           max_wavespeed(model, UR, axis, check=False))
    return 0.5 * (fL + fR) - 0.5 * alpha * (UR - UL)


def _euler_x_vectors(gamma: float, U: np.ndarray):
    """Right/left eigenvectors of the x-flux Jacobian, batched over U[:, t]."""
    n, T = U.shape
    rho = U[0]
    u = U[1] / rho
    v = U[2] / rho if n == 4 else np.zeros_like(u)
    q2 = u * u + v * v
    p = (gamma - 1.0) * (U[-1] - 0.5 * rho * q2)
    a = np.sqrt(gamma * p / rho)
    H = (U[-1] + p) / rho
    b1 = (gamma - 1.0) / (a * a)
    b2 = 0.5 * q2 * b1

    R = np.zeros((T, n, n))
    L = np.zeros((T, n, n))
    e = n - 1
    # acoustic u - a
    R[:, 0, 0] = 1.0
    R[:, 1, 0] = u - a
    R[:, e, 0] = H - u * a
    L[:, 0, 0] = 0.5 * (b2 + u / a)
    L[:, 0, 1] = -0.5 * (b1 * u + 1.0 / a)
    L[:, 0, e] = 0.5 * b1
    # entropy
    R[:, 0, 1] = 1.0
    R[:, 1, 1] = u
    R[:, e, 1] = 0.5 * q2
    L[:, 1, 0] = 1.0 - b2
    L[:, 1, 1] = b1 * u
    L[:, 1, e] = -b1
    # acoustic u + a
    R[:, 0, e] = 1.0
    R[:, 1, e] = u + a
    R[:, e, e] = H + u * a
    L[:, e, 0] = 0.5 * (b2 - u / a)
    L[:, e, 1] = -0.5 * (b1 * u - 1.0 / a)
    L[:, e, e] = 0.5 * b1
    if n == 4:
        R[:, 2, 0] = v
        R[:, 2, 1] = v
        R[:, 2, 3] = v
        L[:, 0, 2] = -0.5 * b1 * v
        L[:, 1, 2] = b1 * v
        L[:, 3, 2] = -0.5 * b1 * v
        # shear
        R[:, 2, 2] = 1.0
        R[:, 3, 2] = v
        L[:, 2, 0] = -v
        L[:, 2, 2] = 1.0
    return L, R


def characteristic_basis(model: ModelDescriptor, U_ref: np.ndarray,
                         axis: AxisLike = 0) -> CharacteristicBasis:
    """Eigenvector pair of the flux Jacobian frozen at ``U_ref``.

    ``U_ref`` may be one state ``(n,)`` or a batch ``(n, T)``; the result is
    always batched ``(T, n, n)``. Right eigenvectors use the conventional
    ``(1, u -+ a, H -+ u a)`` scaling.
    """
    ax = _axis(axis)
    U = np.asarray(U_ref, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    n, T = U.shape
    if model.kind == "advection":
        eye = np.ones((T, 1, 1))
        return CharacteristicBasis(left=eye, right=eye.copy())
    check_physical(model, U, "characteristic reference state")
    if ax == 0:
        L, R = _euler_x_vectors(model.gamma, U)
        return CharacteristicBasis(left=L, right=R)
    perm = [0, 2, 1, 3]
    L, R = _euler_x_vectors(model.gamma, _swap_xy(model, U))
    return CharacteristicBasis(left=L[:, :, perm], right=R[:, perm, :])


def eigenvalues(model: ModelDescriptor, U: np.ndarray, axis: AxisLike = 0) -> np.ndarray:
    """Eigenvalues ordered like the columns of ``characteristic_basis().right``."""
    ax = _axis(axis)
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if model.kind == "advection":
        return np.full((U.shape[1], 1), model.velocity[ax])
    un = U[1 + ax] / U[0]
    a = sound_speed(model, U)
    if model.dim == 1:
        return np.stack([un - a, un, un + a], axis=-1)
    return np.stack([un - a, un, un, un + a], axis=-1)


def flux_jacobian(model: ModelDescriptor, U: np.ndarray, axis: AxisLike = 0) -> np.ndarray:
    """Analytic Jacobian dF/dU, batched ``(T, n, n)``."""
    ax = _axis(axis)
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    n, T = U.shape
    if model.kind == "advection":
        return np.full((T, 1, 1), model.velocity[ax])
    if ax == 1:
        perm = [0, 2, 1, 3]
        J = flux_jacobian(model, _swap_xy(model, U), 0)
        return J[:, perm][:, :, perm]
    g = model.gamma
    rho = U[0]
    u = U[1] / rho
    v = U[2] / rho if n == 4 else np.zeros_like(u)
    q2 = u * u + v * v
    p = (g - 1.0) * (U[-1] - 0.5 * rho * q2)
    H = (U[-1] + p) / rho
    e = n - 1
    J = np.zeros((T, n, n))
    J[:, 0, 1] = 1.0
    J[:, 1, 0] = 0.5 * (g - 1.0) * q2 - u * u
    J[:, 1, 1] = (3.0 - g) * u
    J[:, 1, e] = g - 1.0
    J[:, e, 0] = u * (0.5 * (g - 1.0) * q2 - H)
    J[:, e, 1] = H - (g - 1.0) * u * u
    J[:, e, e] = g * u
    if n == 4:
        J[:, 1, 2] = -(g - 1.0) * v
        J[:, 2, 0] = -u * v
        J[:, 2, 1] = v
        J[:, 2, 2] = u
        J[:, 3, 2] = -(g - 1.0) * u * v
    return J


def reflect(model: ModelDescriptor, U: np.ndarray, axis: AxisLike = 0) -> np.ndarray:
    """Mirror a state across a wall normal to ``axis`` (normal momentum negated)."""
    ax = _axis(axis)
    out = np.array(U, dtype=float, copy=True)
    if model.kind == "euler":
        out[1 + ax] = -out[1 + ax]
    return out
