"""TVB minmod troubled-cell detection and the CV-wise simplified WENO limiter.

Detection compares each CV's edge deviations ``delta_+-`` (SV polynomial minus
CV average) with the neighbouring average differences ``Delta_+-`` through the
modified minmod function; a CV is troubled when any component's minmod branch
alters either deviation.

A troubled CV's polynomial is replaced by a nonlinear blend of a least-squares
polynomial ``p0`` on a large stencil and 2 (1D) or 4 (2D) linear candidates:

    p~0   = (p0 - sum_l gamma_l p_l) / gamma_0
    beta  = smoothness indicators of p~0, p_1, ...
    tau   = (mean_l |beta_0 - beta_l|)**2
    w~_l  = gamma_l (1 + tau / (beta_l + eps)),  w = w~ / sum(w~)
    p_new = w_0 p~0 + sum_l w_l p_l
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .mesh import SVGrid1D, SVGrid2D
from .models import LimiterParams, ModelDescriptor
from .physics import characteristic_basis
from .reconstruction import (
    BasisSet,
    CVPolynomial,
    CVTraces1D,
    CVTraces2D,
    StencilOperators,
    interval_moments,
    least_squares_p0,
    least_squares_p0_2d,
    linear_candidates,
    linear_candidates_2d,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# minmod
# ---------------------------------------------------------------------------


def minmod(a, b, c):
    """s * min(|a|, |b|, |c|) when all three share the sign s, else 0.

    A zero argument has no sign, so it only agrees with other zeros.
    """
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    s = np.sign(a)
    same = (s == np.sign(b)) & (s == np.sign(c))
    out = np.where(same, s * np.minimum(np.abs(a), np.minimum(np.abs(b), np.abs(c))), 0.0)
    return out if out.ndim else float(out)


def modified_minmod(a1, a2, a3, M: float, h) -> Tuple[np.ndarray, np.ndarray]:
    """TVB-modified minmod: ``a1`` if ``|a1| <= M h**2``, else ``minmod(a1, a2, a3)``.

    Returns ``(value, modified)`` where ``modified`` is True exactly when the
    minmod branch was taken and its result differs from ``a1``. The flag is
    derived from the branch logic, not from comparing floats.
    """
    a1, a2, a3, h = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a1, a2, a3, h)))
    small = np.abs(a1) <= M * h * h
    s = np.sign(a1)
    keeps_a1 = (
        (s != 0)
        & (s == np.sign(a2))
        & (s == np.sign(a3))
        & (np.abs(a1) <= np.abs(a2))
        & (np.abs(a1) <= np.abs(a3))
    )
    modified = ~small & ~keeps_a1
    value = np.where(small, a1, minmod(a1, a2, a3))
    if value.ndim == 0:
        return float(value), bool(modified)
    return value, modified


# ---------------------------------------------------------------------------
# Troubled-cell mask and face classification
# ---------------------------------------------------------------------------


@dataclass
class TroubledMask:
    """Per-CV troubled flags on the interior grid shape plus the SV order.

    A face is a Riemann face when it lies on an SV boundary or touches a
    troubled CV; every other face is continuous.
    """

    cells: np.ndarray
    order: int

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    @property
    def percent(self) -> float:
        return 100.0 * self.count / self.cells.size

    def riemann_faces_1d(self) -> np.ndarray:
        """``(n_cv + 1,)``; face f separates CV f-1 and CV f."""
        n = self.cells.size
        faces = np.zeros(n + 1, dtype=bool)
        faces[::self.order] = True
        faces[:-1] |= self.cells
        faces[1:] |= self.cells
        return faces

    def riemann_faces_2d(self) -> Tuple[np.ndarray, np.ndarray]:
        """x-faces ``(NX + 1, NY)`` and y-faces ``(NX, NY + 1)``."""
        nx, ny = self.cells.shape
        fx = np.zeros((nx + 1, ny), dtype=bool)
        fx[::self.order, :] = True
        fx[:-1] |= self.cells
        fx[1:] |= self.cells
        fy = np.zeros((nx, ny + 1), dtype=bool)
        fy[:, ::self.order] = True
        fy[:, :-1] |= self.cells
        fy[:, 1:] |= self.cells
        return fx, fy

    @classmethod
    def uniform(cls, shape, order: int, value: bool) -> "TroubledMask":
        return cls(cells=np.full(shape, value, dtype=bool), order=order)


def _tvb_flags(ubar, lo, hi, left, right, M, h) -> np.ndarray:
    """Troubled flags for one direction; arrays are ``(n_var, ...)``."""
    d_plus = hi - ubar
    d_minus = ubar - lo
    D_plus = right - ubar
    D_minus = ubar - left
    _, mod_p = modified_minmod(d_plus, D_plus, D_minus, M, h)
    _, mod_m = modified_minmod(d_minus, D_plus, D_minus, M, h)
    return np.any(np.atleast_1d(mod_p) | np.atleast_1d(mod_m), axis=0)


def detect_troubled(grid, ext: np.ndarray, ghost: int, basis: BasisSet, W: np.ndarray,
                    params: LimiterParams) -> TroubledMask:
    """Flag troubled CVs from the SV reconstruction and ghosted averages.

    ``ext`` holds the CV averages padded by ``ghost`` CVs on every side; ``W``
    are the interior SV coefficients. ``h`` in the TVB threshold is the CV
    width along the tested direction.
    """
    k = grid.order
    if isinstance(grid, SVGrid1D):
        shape = (grid.n_cv,)
    else:
        shape = grid.shape
    if params.mode == "off":
        return TroubledMask.uniform(shape, k, False)
    if params.mode == "full":
        return TroubledMask.uniform(shape, k, True)

    M = params.tvb_m
    if isinstance(grid, SVGrid1D):
        n = grid.n_cv
        V = np.einsum("vil,al->via", W, basis.face_table)
        lo = V[:, :, :k].reshape(W.shape[0], n)
        hi = V[:, :, 1:].reshape(W.shape[0], n)
        g = ghost
        flags = _tvb_flags(ext[:, g:g + n], lo, hi, ext[:, g - 1:g + n - 1],
                           ext[:, g + 1:g + n + 1], M, grid.cv_widths)
        return TroubledMask(cells=flags, order=k)

    n_var, nx_sv, ny_sv = W.shape[:3]
    NX, NY = grid.shape
    g = ghost
    # edge values at the CV face midpoints of the SV tensor polynomial
    Vx = np.einsum("vijlr,al,nr->viajn", W, basis.face_table, basis.center_table)
    Vy = np.einsum("vijlr,ml,ar->vimja", W, basis.center_table, basis.face_table)
    west = Vx[:, :, :k].reshape(n_var, NX, NY)
    east = Vx[:, :, 1:].reshape(n_var, NX, NY)
    south = Vy[..., :k].reshape(n_var, NX, NY)
    north = Vy[..., 1:].reshape(n_var, NX, NY)
    ubar = ext[:, g:g + NX, g:g + NY]
    hx = grid.x.cv_widths[:, None]
    hy = grid.y.cv_widths[None, :]
    flags_x = _tvb_flags(ubar, west, east, ext[:, g - 1:g + NX - 1, g:g + NY],
                         ext[:, g + 1:g + NX + 1, g:g + NY], M, hx)
    flags_y = _tvb_flags(ubar, south, north, ext[:, g:g + NX, g - 1:g + NY - 1],
                         ext[:, g:g + NX, g + 1:g + NY + 1], M, hy)
    return TroubledMask(cells=flags_x | flags_y, order=k)


# ---------------------------------------------------------------------------
# Smoothness indicators and nonlinear weights
# ---------------------------------------------------------------------------


def _falling(j: int, q: int) -> float:
    return factorial(j) / factorial(j - q) if j >= q else 0.0


@lru_cache(maxsize=None)
def _derivative_gram(k: int, q: int) -> np.ndarray:
    """``G[i, j] = int_{-1/2}^{1/2} (d^q xi^i)(d^q xi^j) dxi`` for i, j < k."""
    mom = interval_moments(-0.5, 0.5, 2 * k)
    G = np.zeros((k, k))
    for i in range(q, k):
        for j in range(q, k):
            G[i, j] = _falling(i, q) * _falling(j, q) * mom[i + j - 2 * q]
    return G


@lru_cache(maxsize=None)
def indicator_matrix(k: int, dim: int) -> np.ndarray:
    """Quadratic form of the smoothness indicator in CV-frame coefficients.

    In the CV frame the ``h**(2q-1)`` scaling cancels the chain-rule factors,
    so the matrix depends only on k: 1D sums q = 1..k, 2D sums all
    ``(q1, q2)`` with ``1 <= q1 + q2 <= k``.
    """
    if dim == 1:
        B = sum(_derivative_gram(k, q) for q in range(1, k + 1))
    else:
        B = np.zeros((k * k, k * k))
        for q1 in range(0, k + 1):
            for q2 in range(0, k + 1 - q1):
                if q1 + q2 == 0:
                    continue
                B += np.kron(_derivative_gram(k, q1), _derivative_gram(k, q2))
    B.setflags(write=False)
    return B


def _quadratic(coeffs: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum("...p,pq,...q->...", coeffs, B, coeffs)


def smoothness_indicator(poly: CVPolynomial) -> np.ndarray:
    """beta = sum_q int_CV h^(2q-1) (d^q p / dx^q)^2 dx for a CV-frame polynomial."""
    k = poly.coeffs.shape[-1]
    if poly.dim == 1:
        return _quadratic(poly.coeffs, indicator_matrix(k, 1))
    flat = poly.coeffs.reshape(poly.coeffs.shape[:-2] + (k * k,))
    return _quadratic(flat, indicator_matrix(k, 2))


def nonlinear_weights(betas: np.ndarray, gammas: Sequence[float], epsilon: float) -> np.ndarray:
    """Normalized weights from indicators ``betas[..., l]`` (l = 0 is p~0)."""
    gammas = np.asarray(gammas, dtype=float)
    b0 = betas[..., :1]
    tau = np.mean(np.abs(b0 - betas[..., 1:]), axis=-1, keepdims=True) ** 2
    denom = betas + epsilon
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tau == 0.0, 0.0, tau / denom)
    w = gammas * (1.0 + ratio)
    return w / np.sum(w, axis=-1, keepdims=True)


def sweno_combine(p0: np.ndarray, cands: np.ndarray, gammas: Sequence[float], epsilon: float,
                  B: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Blend flattened CV-frame coefficients.

    ``p0`` is ``(..., P)``, ``cands`` is ``(..., C, P)``. Returns the new
    coefficients and the weights ``(..., C + 1)``.
    """
    gammas = np.asarray(gammas, dtype=float)
    p_tilde = (p0 - np.einsum("c,...cp->...p", gammas[1:], cands)) / gammas[0]
    polys = np.concatenate([p_tilde[..., None, :], cands], axis=-2)
    betas = _quadratic(polys, B)
    omega = nonlinear_weights(betas, gammas, epsilon)
    return np.einsum("...c,...cp->...p", omega, polys), omega


def sweno_limit_cell(edges, averages, target: int, k: int, params: LimiterParams) -> CVPolynomial:
    """Limited polynomial for one 1D troubled CV from its contiguous stencil.

    ``edges``/``averages`` describe the stencil CVs; it must reach ``k // 2``
    CVs to each side of ``target``.
    """
    p0 = least_squares_p0(edges, averages, target, k)
    cands = linear_candidates(edges, averages, target, k)
    stacked = np.stack([c.coeffs for c in cands], axis=-2)
    coeffs, _ = sweno_combine(p0.coeffs, stacked, params.linear_weights_1d, params.epsilon,
                              indicator_matrix(k, 1))
    return CVPolynomial(coeffs=coeffs, center=p0.center, width=p0.width)


def sweno_limit_cell_2d(x_edges, y_edges, averages, target: Tuple[int, int], k: int,
                        params: LimiterParams) -> CVPolynomial:
    """2D analogue on a box stencil with four planar candidates."""
    p0 = least_squares_p0_2d(x_edges, y_edges, averages, target, k)
    cands = linear_candidates_2d(x_edges, y_edges, averages, target, k)
    lead = p0.coeffs.shape[:-2]
    flat_p0 = p0.coeffs.reshape(lead + (k * k,))
    stacked = np.stack([c.coeffs.reshape(lead + (k * k,)) for c in cands], axis=-2)
    coeffs, _ = sweno_combine(flat_p0, stacked, params.linear_weights_2d, params.epsilon,
                              indicator_matrix(k, 2))
    return CVPolynomial(coeffs=coeffs.reshape(lead + (k, k)), center=p0.center, width=p0.width)


# ---------------------------------------------------------------------------
# Field-level limiting
# ---------------------------------------------------------------------------


@dataclass
class LimitedField:
    """Face traces after limiting, the mask, and the troubled CVs' new polynomials.

    ``coeffs`` is ``(n_var, T, P)`` in CV-frame monomials for the interior CV
    indices ``cells`` (flat indices into the interior grid).
    """

    traces: object
    mask: TroubledMask
    cells: np.ndarray
    coeffs: np.ndarray


def _limit_batch(stencils: np.ndarray, ops: StencilOperators, positions: Tuple[np.ndarray, ...],
                 gammas: Sequence[float], epsilon: float) -> np.ndarray:
    """Scalar-wise limiting of ``stencils`` ``(n_var, T, S_total)`` -> ``(n_var, T, P)``."""
    p0_ops = ops.p0[positions]
    cand_ops = ops.cand[positions]
    p0 = np.einsum("tps,vts->vtp", p0_ops, stencils)
    cands = np.einsum("tcps,vts->vtcp", cand_ops, stencils)
    coeffs, _ = sweno_combine(p0, cands, gammas, epsilon, indicator_matrix(ops.k, ops.dim))
    return coeffs


def _limit_with_basis(stencils, ubar, model, axis, ops, positions, gammas, epsilon, characteristic):
    if not characteristic or model.n_components == 1:
        return _limit_batch(stencils, ops, positions, gammas, epsilon)
    basis = characteristic_basis(model, ubar, axis)
    W = np.einsum("tij,jts->its", basis.left, stencils)
    limited = _limit_batch(W, ops, positions, gammas, epsilon)
    return np.einsum("tij,jtp->itp", basis.right, limited)


def limit_field(grid, ext: np.ndarray, ghost: int, traces, mask: TroubledMask, ops: StencilOperators,
                params: LimiterParams, model: ModelDescriptor, basis: Optional[BasisSet] = None
                ) -> LimitedField:
    """Replace the troubled CVs' face traces by their SWENO polynomials.

    Untroubled CVs keep the SV-polynomial traces. With characteristic
    limiting the stencil averages are projected onto the eigenvectors frozen at
    the troubled CV's own average; in 2D the x- and y-projected results are
    averaged.
    """
    k = grid.order
    characteristic = params.use_characteristic(model)
    g = ghost
    cells = np.flatnonzero(mask.cells)
    n_var = ext.shape[0]
    if cells.size == 0:
        P = k if isinstance(grid, SVGrid1D) else k * k
        return LimitedField(traces=traces, mask=mask, cells=cells, coeffs=np.zeros((n_var, 0, P)))

    offsets = ops.offsets
    if isinstance(grid, SVGrid1D):
        stencils = ext[:, g + cells[:, None] + offsets[None, :]]
        ubar = ext[:, g + cells]
        positions = (cells % k,)
        coeffs = _limit_with_basis(stencils, ubar, model, 0, ops, positions,
                                   params.linear_weights_1d, params.epsilon, characteristic)
        edge = np.array([-0.5, 0.5]) ** np.arange(k)[:, None]  # (k, 2)
        values = np.einsum("vtp,pe->vte", coeffs, edge)
        lo = traces.lo.copy()
        hi = traces.hi.copy()
        lo[:, cells] = values[..., 0]
        hi[:, cells] = values[..., 1]
        return LimitedField(traces=CVTraces1D(lo=lo, hi=hi), mask=mask, cells=cells, coeffs=coeffs)

    NX, NY = grid.shape
    gx, gy = np.divmod(cells, NY)
    S = offsets.size
    stencils = ext[:, g + gx[:, None, None] + offsets[None, :, None],
                   g + gy[:, None, None] + offsets[None, None, :]].reshape(n_var, cells.size, S * S)
    ubar = ext[:, g + gx, g + gy]
    positions = (gx % k, gy % k)
    gammas = params.linear_weights_2d
    if characteristic and model.n_components > 1:
        cx = _limit_with_basis(stencils, ubar, model, 0, ops, positions, gammas, params.epsilon, True)
        cy = _limit_with_basis(stencils, ubar, model, 1, ops, positions, gammas, params.epsilon, True)
        coeffs = 0.5 * (cx + cy)
    else:
        coeffs = _limit_batch(stencils, ops, positions, gammas, params.epsilon)

    eta = basis.rule.unit_nodes() if basis is not None else np.zeros(1)
    pk = np.arange(k)
    half = 0.5 ** pk
    sgn = (-1.0) ** pk
    gauss_pow = eta[:, None] ** pk[None, :]  # (q, k)
    C = coeffs.reshape(n_var, cells.size, k, k)
    west = np.einsum("vtlr,l,qr->vtq", C, sgn * half, gauss_pow)
    east = np.einsum("vtlr,l,qr->vtq", C, half, gauss_pow)
    south = np.einsum("vtlr,ql,r->vtq", C, gauss_pow, sgn * half)
    north = np.einsum("vtlr,ql,r->vtq", C, gauss_pow, half)
    out = CVTraces2D(west=traces.west.copy(), east=traces.east.copy(),
                     south=traces.south.copy(), north=traces.north.copy())
    out.west[:, gx, gy] = west
    out.east[:, gx, gy] = east
    out.south[:, gx, gy] = south
    out.north[:, gx, gy] = north
    return LimitedField(traces=out, mask=mask, cells=cells, coeffs=coeffs)


def limited_polynomials(grid, limited: LimitedField) -> List[CVPolynomial]:
    """The troubled CVs' limited polynomials as :class:`CVPolynomial` objects."""
    k = grid.order
    polys = []
    if isinstance(grid, SVGrid1D):
        centers = grid.cv_centers
        for t, c in enumerate(limited.cells):
            polys.append(CVPolynomial(coeffs=limited.coeffs[:, t], center=(float(centers[c]),),
                                      width=(float(grid.cv_widths[c]),)))
        return polys
    NX, NY = grid.shape
    for t, c in enumerate(limited.cells):
        gx, gy = divmod(int(c), NY)
        polys.append(CVPolynomial(
            coeffs=limited.coeffs[:, t].reshape(-1, k, k),
            center=(float(grid.x.cv_centers[gx]), float(grid.y.cv_centers[gy])),
            width=(float(grid.x.cv_widths[gx]), float(grid.y.cv_widths[gy])),
        ))
    return polys
