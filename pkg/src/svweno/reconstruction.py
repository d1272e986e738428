"""SV polynomial reconstruction and the limiter's CV-frame stencil polynomials.

Two coordinate frames are used throughout:

* SV frame ``s = (x - X_c) / H`` with ``X_c``/``H`` the SV center and width,
  so the SV is ``[-1/2, 1/2]``. SV polynomials are monomials in ``s``
  (tensor products in 2D), and the CV-integral matrix ``A[m, l]`` (average of
  ``s**l`` over CV ``m``) is factorized once per grid.
* CV frame ``xi = (x - x_c) / h`` centered on one CV. Limiter polynomials live
  here, which makes the smoothness indicator independent of ``h``.

All stencil polynomials are linear maps of the stencil averages; on a uniform
grid they depend only on the CV's position inside its SV, so the operators are
assembled once per position and applied to every cell in a batch.
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import EvaluationDomainError, SolverError
from .mesh import QuadratureRule, SVGrid1D, SVGrid2D, gauss_rule

logger = logging.getLogger(__name__)

# relative slack when checking that a point lies inside its owning element
DOMAIN_TOL = 1e-12


def interval_moments(lo, hi, degree: int) -> np.ndarray:
    """Averages of ``t**j`` over ``[lo, hi]`` for ``j = 0..degree``.

    ``lo``/``hi`` may be arrays; the power index is the trailing axis.
    """
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    j = np.arange(degree + 1)
    return (hi ** (j + 1) - lo ** (j + 1)) / ((j + 1) * (hi - lo))


def _powers(t, degree: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)[..., None]
    return t ** np.arange(degree + 1)


# ---------------------------------------------------------------------------
# SV basis and reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasisSet:
    """Monomial basis on the SV reference element of one axis.

    ``edges`` are the k + 1 CV edges in the SV frame; ``A`` is the CV-integral
    matrix; ``face_table[a, l] = s_a**l`` at the CV edges and
    ``quad_table[m, q, l] = s**l`` at the Gauss nodes of CV ``m``.
    """

    k: int
    edges: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    lu: Tuple[np.ndarray, np.ndarray] = field(repr=False)
    condition: float
    face_table: np.ndarray = field(repr=False)
    quad_table: np.ndarray = field(repr=False)
    center_table: np.ndarray = field(repr=False)
    rule: QuadratureRule = field(repr=False)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def solve(self, averages: np.ndarray) -> np.ndarray:
        """Coefficients from CV averages along the leading axis (k, ...)."""
        return scipy.linalg.lu_solve(self.lu, averages)


def build_basis(k: int, cv_pattern: Sequence[float], n_q: Optional[int] = None) -> BasisSet:
    """Build the basis for an SV split into CVs of relative widths ``cv_pattern``.

    ``cv_pattern`` holds the k CV widths in units of the SV width.
    """
    widths = np.asarray(cv_pattern, dtype=float)
    if widths.shape != (k,) or np.any(widths <= 0):
        raise SolverError(f"CV pattern must hold {k} positive widths, got {cv_pattern!r}")
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    edges = edges / edges[-1] - 0.5
    A = interval_moments(edges[:-1], edges[1:], k - 1)
    condition = float(np.linalg.cond(A))
    if not np.isfinite(condition) or condition > 1e14:
        raise SolverError(f"Singular CV-integral matrix for k={k} (cond={condition:.3e})")
    logger.debug(f"Basis k={k}: CV-integral matrix condition number {condition:.3e}")
    rule = gauss_rule(n_q or k)
    local = rule.unit_nodes() + 0.5
    quad_points = edges[:-1, None] + np.diff(edges)[:, None] * local[None, :]
    centers = 0.5 * (edges[:-1] + edges[1:])
    return BasisSet(
        k=k,
        edges=edges,
        A=A,
        A_inv=np.linalg.inv(A),
        lu=scipy.linalg.lu_factor(A),
        condition=condition,
        face_table=_powers(edges, k - 1),
        quad_table=_powers(quad_points, k - 1),
        center_table=_powers(centers, k - 1),
        rule=rule,
    )


def basis_for_grid(grid: SVGrid1D, n_q: Optional[int] = None) -> BasisSet:
    return build_basis(grid.order, grid.width_pattern, n_q)


@dataclass(frozen=True)
class SVPolynomial:
    """Reconstruction inside one SV: ``coeffs[..., l]`` (1D) or ``coeffs[..., l, r]`` (2D)
    on monomials of the SV frame. Leading axes (if any) are components."""

    coeffs: np.ndarray
    center: Tuple[float, ...]
    width: Tuple[float, ...]
    sv_index: Tuple[int, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class CVPolynomial:
    """Polynomial attached to one CV in its own frame (same coefficient layout)."""

    coeffs: np.ndarray
    center: Tuple[float, ...]
    width: Tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.center)

    def average(self) -> np.ndarray:
        """Exact average over the owning CV."""
        deg = self.coeffs.shape[-1] - 1
        mom = interval_moments(-0.5, 0.5, deg)
        if self.dim == 1:
            return self.coeffs @ mom
        return np.einsum("...lr,l,r->...", self.coeffs, mom, mom)


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise SolverError("Non-finite CV averages passed to reconstruction")


def reconstruct_sv(basis: BasisSet, averages, center: Tuple[float, ...] = (0.0,),
                   width: Tuple[float, ...] = (1.0,), sv_index: Tuple[int, ...] = ()) -> SVPolynomial:
    """Reconstruct the SV polynomial from its k (1D) or k x k (2D) CV averages.

    2D averages are indexed ``[..., m, n]`` (x-position, y-position) and are
    solved as a tensor product ``W = A^-1 U A^-T``.
    """
    U = np.asarray(averages, dtype=float)
    _check_finite(U)
    if len(center) == 1:
        W = np.einsum("lm,...m->...l", basis.A_inv, U)
    else:
        W = np.einsum("lm,rn,...mn->...lr", basis.A_inv, basis.A_inv, U)
    return SVPolynomial(coeffs=W, center=tuple(center), width=tuple(width), sv_index=tuple(sv_index))


def reconstruct_all_1d(basis: BasisSet, averages: np.ndarray) -> np.ndarray:
    """Batched SV reconstruction: ``(n_var, N*k) -> (n_var, N, k)`` coefficients."""
    n_var, n_cv = averages.shape
    U = averages.reshape(n_var, n_cv // basis.k, basis.k)
    return np.einsum("lm,vim->vil", basis.A_inv, U)


def reconstruct_all_2d(basis: BasisSet, averages: np.ndarray) -> np.ndarray:
    """``(n_var, Nx*k, Ny*k) -> (n_var, Nx, Ny, k, k)`` tensor coefficients."""
    n_var, nx, ny = averages.shape
    k = basis.k
    U = averages.reshape(n_var, nx // k, k, ny // k, k).transpose(0, 1, 3, 2, 4)
    return np.einsum("lm,rn,vijmn->vijlr", basis.A_inv, basis.A_inv, U)


def _to_frame(poly, points: Sequence[np.ndarray]) -> List[np.ndarray]:
    local = []
    for axis, x in enumerate(points):
        t = (np.asarray(x, dtype=float) - poly.center[axis]) / poly.width[axis]
        if np.any(np.abs(t) > 0.5 + DOMAIN_TOL):
            raise EvaluationDomainError(
                f"Point outside owning element along axis {axis}: "
                f"element center {poly.center[axis]}, width {poly.width[axis]}",
                details={"axis": axis},
            )
        local.append(t)
    return local


def evaluate(poly, *points) -> np.ndarray:
    """Evaluate an SV or CV polynomial at physical point(s) inside its element.

    Returns values with the component axes first, then the point shape.
    """
    if len(points) != poly.dim:
        raise EvaluationDomainError(f"Expected {poly.dim} coordinate array(s), got {len(points)}")
    local = _to_frame(poly, points)
    deg = poly.coeffs.shape[-1] - 1
    if poly.dim == 1:
        return np.einsum("...l,pl->...p", poly.coeffs, _powers(np.ravel(local[0]), deg)).reshape(
            poly.coeffs.shape[:-1] + np.shape(local[0]))
    sx = _powers(np.ravel(local[0]), deg)
    sy = _powers(np.ravel(local[1]), deg)
    out = np.einsum("...lr,pl,pr->...p", poly.coeffs, sx, sy)
    return out.reshape(poly.coeffs.shape[:-2] + np.shape(local[0]))


def _shift_matrix(shift: float, ratio: float, k: int) -> np.ndarray:
    """T with ``(shift + ratio*xi)**l = sum_j T[j, l] xi**j``."""
    T = np.zeros((k, k))
    for l in range(k):
        for j in range(l + 1):
            T[j, l] = comb(l, j) * shift ** (l - j) * ratio ** j
    return T


def restrict_to_cv(poly: SVPolynomial, cv_lo: Sequence[float], cv_hi: Sequence[float]) -> CVPolynomial:
    """Re-express an SV polynomial in the frame of one of its CVs."""
    k = poly.coeffs.shape[-1]
    mats = []
    centers = []
    widths = []
    for axis in range(poly.dim):
        h = cv_hi[axis] - cv_lo[axis]
        xc = 0.5 * (cv_lo[axis] + cv_hi[axis])
        mats.append(_shift_matrix((xc - poly.center[axis]) / poly.width[axis], h / poly.width[axis], k))
        centers.append(xc)
        widths.append(h)
    if poly.dim == 1:
        C = np.einsum("jl,...l->...j", mats[0], poly.coeffs)
    else:
        C = np.einsum("jl,sr,...lr->...js", mats[0], mats[1], poly.coeffs)
    return CVPolynomial(coeffs=C, center=tuple(centers), width=tuple(widths))


# ---------------------------------------------------------------------------
# Face traces
# ---------------------------------------------------------------------------


@dataclass
class CVTraces1D:
    """Each CV's own polynomial at its left (``lo``) and right (``hi``) edge, ``(n_var, n_cv)``."""

    lo: np.ndarray
    hi: np.ndarray


@dataclass
class CVTraces2D:
    """Each CV's own polynomial at the Gauss points of its four faces, ``(n_var, NX, NY, n_q)``."""

    west: np.ndarray
    east: np.ndarray
    south: np.ndarray
    north: np.ndarray


def evaluate_face_states(grid, basis: BasisSet, W: np.ndarray):
    """CV-edge traces of the (unlimited) SV polynomials.

    Inside an SV both CVs sharing a face report the same value; only SV faces
    carry jumps.
    """
    k = basis.k
    if isinstance(grid, SVGrid1D):
        V = np.einsum("vil,al->via", W, basis.face_table)
        n_var = W.shape[0]
        lo = V[:, :, :k].reshape(n_var, -1)
        hi = V[:, :, 1:].reshape(n_var, -1)
        return CVTraces1D(lo=lo, hi=hi)
    if isinstance(grid, SVGrid2D):
        n_var, nx, ny = W.shape[:3]
        nq = basis.rule.n_q
        # x-faces: edge a along x, Gauss point q of CV n along y
        Vx = np.einsum("vijlr,al,nqr->vijanq", W, basis.face_table, basis.quad_table)
        Vy = np.einsum("vijlr,mql,ar->vijmqa", W, basis.quad_table, basis.face_table)

        def pack_x(arr):  # (v, i, j, m, n, q) -> (v, i*k+m, j*k+n, q)
            return arr.transpose(0, 1, 3, 2, 4, 5).reshape(n_var, nx * k, ny * k, nq)

        def pack_y(arr):  # (v, i, j, m, q, n) -> (v, i*k+m, j*k+n, q)
            return arr.transpose(0, 1, 3, 2, 5, 4).reshape(n_var, nx * k, ny * k, nq)

        return CVTraces2D(
            west=pack_x(Vx[:, :, :, :k]),
            east=pack_x(Vx[:, :, :, 1:]),
            south=pack_y(Vy[..., :k]),
            north=pack_y(Vy[..., 1:]),
        )
    raise TypeError(f"Unsupported grid type {type(grid).__name__}")


# ---------------------------------------------------------------------------
# Constrained least squares and linear candidates (CV frame)
# ---------------------------------------------------------------------------


def _p0_operator(rows: np.ndarray, target: int) -> np.ndarray:
    """Linear map (P x S) from stencil averages to p0 coefficients.

    ``rows[s, :]`` holds the averages of the basis over stencil CV ``s``. The
    target-average equality is eliminated through the null space of its row
    (basis function 0 is the constant, whose target average is 1), then the
    reduced problem is solved via its normal equations.
    """
    S, P = rows.shape
    a_t = rows[target]
    others = [s for s in range(S) if s != target]
    B = rows[others, 1:] - a_t[None, 1:]
    if np.linalg.matrix_rank(B) < P - 1:
        raise SolverError(f"Rank-deficient least-squares stencil ({S} CVs, {P} unknowns)")
    D = np.zeros((S - 1, S))
    D[np.arange(S - 1), others] = 1.0
    D[:, target] -= 1.0
    K = np.linalg.solve(B.T @ B, B.T @ D)
    G = np.zeros((P, S))
    G[1:] = K
    G[0] = -a_t[1:] @ K
    G[0, target] += 1.0
    return G


def least_squares_p0(edges, averages, target: int, k: int) -> CVPolynomial:
    """Degree-(k-1) polynomial matching the target CV average exactly and the
    other stencil averages in the least-squares sense (1D).

    ``edges`` are the S + 1 physical edges of the contiguous stencil.
    """
    edges = np.asarray(edges, dtype=float)
    averages = np.asarray(averages, dtype=float)
    xc = 0.5 * (edges[target] + edges[target + 1])
    h = edges[target + 1] - edges[target]
    xi = (edges - xc) / h
    rows = interval_moments(xi[:-1], xi[1:], k - 1)
    G = _p0_operator(rows, target)
    return CVPolynomial(coeffs=np.einsum("ps,...s->...p", G, averages), center=(xc,), width=(h,))


def least_squares_p0_2d(x_edges, y_edges, averages, target: Tuple[int, int], k: int) -> CVPolynomial:
    """2D analogue on a box stencil; ``averages[..., sx, sy]``."""
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    tx, ty = target
    xc = 0.5 * (x_edges[tx] + x_edges[tx + 1])
    yc = 0.5 * (y_edges[ty] + y_edges[ty + 1])
    hx = x_edges[tx + 1] - x_edges[tx]
    hy = y_edges[ty + 1] - y_edges[ty]
    mx = interval_moments((x_edges[:-1] - xc) / hx, (x_edges[1:] - xc) / hx, k - 1)
    my = interval_moments((y_edges[:-1] - yc) / hy, (y_edges[1:] - yc) / hy, k - 1)
    sx, sy = mx.shape[0], my.shape[0]
    rows = np.einsum("al,br->ablr", mx, my).reshape(sx * sy, k * k)
    G = _p0_operator(rows, tx * sy + ty)
    U = np.asarray(averages, dtype=float)
    flat = U.reshape(U.shape[:-2] + (sx * sy,))
    C = np.einsum("ps,...s->...p", G, flat).reshape(U.shape[:-2] + (k, k))
    return CVPolynomial(coeffs=C, center=(xc, yc), width=(hx, hy))


def linear_candidates(edges, averages, target: int, k: int) -> List[CVPolynomial]:
    """1D linear polynomials from {target-1, target} and {target, target+1}.

    Each matches both defining averages exactly; coefficients are padded to k.
    """
    edges = np.asarray(edges, dtype=float)
    U = np.asarray(averages, dtype=float)
    xc = 0.5 * (edges[target] + edges[target + 1])
    h = edges[target + 1] - edges[target]
    out = []
    for nb in (target - 1, target + 1):
        center_nb = (0.5 * (edges[nb] + edges[nb + 1]) - xc) / h
        C = np.zeros(U.shape[:-1] + (k,))
        C[..., 0] = U[..., target]
        C[..., 1] = (U[..., nb] - U[..., target]) / center_nb
        out.append(CVPolynomial(coeffs=C, center=(xc,), width=(h,)))
    return out


# neighbour pairs (x-side, y-side) for the four planar candidates
PLANAR_STENCILS = ((-1, -1), (1, -1), (-1, 1), (1, 1))


def linear_candidates_2d(x_edges, y_edges, averages, target: Tuple[int, int], k: int) -> List[CVPolynomial]:
    """Four planes ``c0 + c1 xi + c2 eta`` from the target and one x- and one
    y-neighbour each (west/south, east/south, west/north, east/north)."""
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    U = np.asarray(averages, dtype=float)
    tx, ty = target
    xc = 0.5 * (x_edges[tx] + x_edges[tx + 1])
    yc = 0.5 * (y_edges[ty] + y_edges[ty + 1])
    hx = x_edges[tx + 1] - x_edges[tx]
    hy = y_edges[ty + 1] - y_edges[ty]
    out = []
    for ox, oy in PLANAR_STENCILS:
        cx = (0.5 * (x_edges[tx + ox] + x_edges[tx + ox + 1]) - xc) / hx
        cy = (0.5 * (y_edges[ty + oy] + y_edges[ty + oy + 1]) - yc) / hy
        C = np.zeros(U.shape[:-2] + (k, k))
        u0 = U[..., tx, ty]
        C[..., 0, 0] = u0
        C[..., 1, 0] = (U[..., tx + ox, ty] - u0) / cx
        C[..., 0, 1] = (U[..., tx, ty + oy] - u0) / cy
        out.append(CVPolynomial(coeffs=C, center=(xc, yc), width=(hx, hy)))
    return out


# ---------------------------------------------------------------------------
# Per-position operators for batched limiting
# ---------------------------------------------------------------------------


def stencil_half_width(k: int) -> int:
    return k // 2


def _strip_edges(grid_axis: SVGrid1D) -> np.ndarray:
    """CV edges of three consecutive SVs in SV-width units, middle SV at [0, 1]."""
    f = grid_axis.fractions
    return np.concatenate([f[:-1] - 1.0, f[:-1], f + 1.0])


@dataclass(frozen=True)
class StencilOperators:
    """Linear maps from stencil averages to CV-frame coefficients, per CV position.

    1D: ``p0[m]`` is ``(k, S)`` over offsets ``-H..H`` and ``cand[m]`` is
    ``(2, k, S)``. 2D: ``p0[m, n]`` is ``(k*k, S*S)`` over the box
    ``(-H..H)^2`` (x-major) and ``cand[m, n]`` is ``(4, k*k, S*S)``.
    """

    dim: int
    k: int
    half_width: int
    p0: np.ndarray
    cand: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)


def _axis_stencil_moments(axis: SVGrid1D, m: int, H: int) -> Tuple[np.ndarray, np.ndarray]:
    """Averages of xi**j over the stencil CVs of local position m, plus their centers."""
    k = axis.order
    strip = _strip_edges(axis)
    g = k + m
    lo = strip[g - H:g + H + 1]
    hi = strip[g - H + 1:g + H + 2]
    xc = 0.5 * (strip[g] + strip[g + 1])
    h = strip[g + 1] - strip[g]
    return interval_moments((lo - xc) / h, (hi - xc) / h, k - 1), (0.5 * (lo + hi) - xc) / h


def build_stencil_operators_1d(grid: SVGrid1D) -> StencilOperators:
    k = grid.order
    H = stencil_half_width(k)
    S = 2 * H + 1
    p0 = np.zeros((k, k, S))
    cand = np.zeros((k, 2, k, S))
    for m in range(k):
        rows, centers = _axis_stencil_moments(grid, m, H)
        p0[m] = _p0_operator(rows, H)
        for c, nb in enumerate((H - 1, H + 1)):
            cand[m, c, 0, H] = 1.0
            cand[m, c, 1, nb] = 1.0 / centers[nb]
            cand[m, c, 1, H] = -1.0 / centers[nb]
    return StencilOperators(dim=1, k=k, half_width=H, p0=p0, cand=cand)


def build_stencil_operators_2d(grid: SVGrid2D) -> StencilOperators:
    k = grid.order
    H = stencil_half_width(k)
    S = 2 * H + 1
    P = k * k
    p0 = np.zeros((k, k, P, S * S))
    cand = np.zeros((k, k, 4, P, S * S))

    def flat(ox, oy):
        return (H + ox) * S + (H + oy)

    for m in range(k):
        mx, cx = _axis_stencil_moments(grid.x, m, H)
        for n in range(k):
            my, cy = _axis_stencil_moments(grid.y, n, H)
            rows = np.einsum("al,br->ablr", mx, my).reshape(S * S, P)
            p0[m, n] = _p0_operator(rows, flat(0, 0))
            for c, (ox, oy) in enumerate(PLANAR_STENCILS):
                t = flat(0, 0)
                sx_nb = flat(ox, 0)
                sy_nb = flat(0, oy)
                cand[m, n, c, 0, t] = 1.0
                cand[m, n, c, k, sx_nb] = 1.0 / cx[H + ox]  # coefficient (1, 0)
                cand[m, n, c, k, t] = -1.0 / cx[H + ox]
                cand[m, n, c, 1, sy_nb] = 1.0 / cy[H + oy]  # coefficient (0, 1)
                cand[m, n, c, 1, t] = -1.0 / cy[H + oy]
    return StencilOperators(dim=2, k=k, half_width=H, p0=p0, cand=cand)
