"""Two-level SV/CV partitions in 1D and 2D, plus Gauss-Legendre quadrature.

Every spectral volume (SV) of a k-th order grid is split into k control volumes
(CVs) per axis at the Gauss-Lobatto points

    x_{i,m+1/2} = x_{i-1/2} + (h_i / 2) * (1 - cos(m * pi / k)),  m = 0..k.

Grids are uniform in SV width, so the CV pattern is identical in every SV and
all per-position operators downstream can be built once per grid.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

MIN_ORDER = 2
MAX_ORDER = 5
MAX_GAUSS_POINTS = 6


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference interval [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_q(self) -> int:
        return int(self.nodes.size)

    def mapped(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for the physical interval [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights

    def unit_nodes(self) -> np.ndarray:
        """Nodes mapped to [-1/2, 1/2], the CV-local scaled frame."""
        return 0.5 * self.nodes

    def unit_weights(self) -> np.ndarray:
        """Weights for [-1/2, 1/2]; they sum to one, so sums are averages."""
        return 0.5 * self.weights


def gauss_rule(n_q: int) -> QuadratureRule:
    """Return the n_q-point Gauss-Legendre rule (exact to degree 2*n_q - 1)."""
    if not isinstance(n_q, (int, np.integer)) or not 1 <= n_q <= MAX_GAUSS_POINTS:
        raise ConfigurationError(
            f"Unsupported quadrature point count {n_q!r}; expected 1..{MAX_GAUSS_POINTS}"
        )
    nodes, weights = leggauss(int(n_q))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(nodes=nodes, weights=weights)


def gauss_lobatto_fractions(k: int) -> np.ndarray:
    """CV edge positions inside one SV as fractions of the SV width (k + 1 values).

    The pattern is mirrored from its first half so the CV widths are exactly
    symmetric about the SV center.
    """
    m = np.arange(k + 1)
    frac = 0.5 * (1.0 - np.cos(m * np.pi / k))
    frac[0] = 0.0
    frac[k] = 1.0
    for j in range(1, (k + 1) // 2):
        frac[k - j] = 1.0 - frac[j]
    if k % 2 == 0:
        frac[k // 2] = 0.5
    return frac


def _check_axis(a: float, b: float, n_sv: int, k: int, axis: str = "x") -> None:
    if not isinstance(k, (int, np.integer)) or not MIN_ORDER <= k <= MAX_ORDER:
        raise ConfigurationError(f"Scheme order k={k!r} outside {MIN_ORDER}..{MAX_ORDER}")
    if not isinstance(n_sv, (int, np.integer)) or n_sv < 1:
        raise ConfigurationError(f"SV count along {axis} must be >= 1, got {n_sv!r}")
    if not np.isfinite(a) or not np.isfinite(b) or b <= a:
        raise ConfigurationError(f"Invalid {axis}-interval [{a}, {b}]: need finite b > a")


@dataclass(frozen=True)
class SVGrid1D:
    """Uniform SV partition of [a, b] with k Gauss-Lobatto CVs per SV.

    CVs are indexed globally, ``g = i * k + m`` for SV ``i`` and local CV ``m``.
    """

    a: float
    b: float
    n_sv: int
    order: int
    sv_edges: np.ndarray
    cv_edges: np.ndarray
    cv_widths: np.ndarray
    fractions: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return self.order

    @property
    def n_cv(self) -> int:
        return self.n_sv * self.order

    @property
    def sv_width(self) -> float:
        return (self.b - self.a) / self.n_sv

    @property
    def cv_centers(self) -> np.ndarray:
        return 0.5 * (self.cv_edges[:-1] + self.cv_edges[1:])

    @property
    def width_pattern(self) -> np.ndarray:
        """CV widths of one SV, in units of the SV width."""
        return np.diff(self.fractions)

    @property
    def reference_edges(self) -> np.ndarray:
        """CV edges of one SV in the SV-centered, SV-width-scaled frame [-1/2, 1/2]."""
        return self.fractions - 0.5

    @property
    def sv_width_array(self) -> np.ndarray:
        return np.diff(self.sv_edges)

    @property
    def min_cv_width(self) -> float:
        return float(self.cv_widths.min())

    def sv_cv_edges(self, i: int) -> np.ndarray:
        """The k + 1 CV edges of SV ``i``."""
        k = self.order
        return self.cv_edges[i * k:(i + 1) * k + 1]

    def split_index(self, g: int) -> Tuple[int, int]:
        """Global CV index -> (SV index, local CV index)."""
        return divmod(int(g), self.order)

    def cv_index(self, i: int, m: int) -> int:
        return i * self.order + m


def build_grid_1d(a: float, b: float, n_sv: int, k: int) -> SVGrid1D:
    """Build the uniform SV grid on [a, b] with k Gauss-Lobatto CVs per SV."""
    _check_axis(a, b, n_sv, k)
    a = float(a)
    b = float(b)
    sv_edges = a + (b - a) * np.arange(n_sv + 1) / n_sv
    sv_edges[-1] = b
    fractions = gauss_lobatto_fractions(k)
    h = np.diff(sv_edges)
    cv_edges = (sv_edges[:-1, None] + h[:, None] * fractions[None, :-1]).ravel()
    cv_edges = np.append(cv_edges, b)
    # snap SV-coincident CV edges exactly onto the SV edges
    cv_edges[::k] = sv_edges
    cv_widths = np.diff(cv_edges)
    for arr in (sv_edges, cv_edges, cv_widths, fractions):
        arr.setflags(write=False)
    grid = SVGrid1D(
        a=a, b=b, n_sv=int(n_sv), order=int(k),
        sv_edges=sv_edges, cv_edges=cv_edges, cv_widths=cv_widths, fractions=fractions,
    )
    logger.debug(f"Built 1D grid: [{a}, {b}], N={n_sv}, k={k}, min CV width {grid.min_cv_width:.3e}")
    return grid


@dataclass(frozen=True)
class SVGrid2D:
    """Tensor product of two 1D axis partitions sharing the order k.

    Field arrays are laid out ``(component, gx, gy)`` with global CV indices
    ``gx = i * k + m`` and ``gy = j * k + n``; the flat CV index is
    ``gx * (Ny * k) + gy``.
    """

    x: SVGrid1D
    y: SVGrid1D

    @property
    def order(self) -> int:
        return self.x.order

    @property
    def k(self) -> int:
        return self.x.order

    @property
    def nx_sv(self) -> int:
        return self.x.n_sv

    @property
    def ny_sv(self) -> int:
        return self.y.n_sv

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.x.n_cv, self.y.n_cv)

    @property
    def n_cv(self) -> int:
        return self.x.n_cv * self.y.n_cv

    @property
    def n_sv(self) -> int:
        return self.x.n_sv * self.y.n_sv

    def cv_volumes(self) -> np.ndarray:
        return np.outer(self.x.cv_widths, self.y.cv_widths)

    def flat_index(self, i: int, m: int, j: int, n: int) -> int:
        k = self.order
        return (i * k + m) * self.y.n_cv + (j * k + n)

    def split_index(self, flat: int) -> Tuple[int, int, int, int]:
        gx, gy = divmod(int(flat), self.y.n_cv)
        i, m = divmod(gx, self.order)
        j, n = divmod(gy, self.order)
        return i, m, j, n


def build_grid_2d(
    domain: Tuple[float, float, float, float], nx: int, ny: int, k: int
) -> SVGrid2D:
    """Build the SV grid on the rectangle ``(ax, bx, ay, by)``."""
    if len(domain) != 4:
        raise ConfigurationError(f"2D domain must be (ax, bx, ay, by), got {domain!r}")
    ax, bx, ay, by = domain
    _check_axis(ax, bx, nx, k, axis="x")
    _check_axis(ay, by, ny, k, axis="y")
    return SVGrid2D(x=build_grid_1d(ax, bx, nx, k), y=build_grid_1d(ay, by, ny, k))
