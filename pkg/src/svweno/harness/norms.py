"""Discrete error norms over CV averages and observed convergence rates."""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError
from ..models import ConvergenceRow


def error_norms(numerical, exact) -> Tuple[float, float, float]:
    """(mean |e|, sqrt(mean e^2), max |e|) over all CVs."""
    a = np.asarray(numerical, dtype=float)
    b = np.asarray(exact, dtype=float)
    if a.shape != b.shape:
        raise ConfigurationError(f"Mismatched grids for error norms: {a.shape} vs {b.shape}")
    e = np.abs(a - b).ravel()
    return float(np.mean(e)), float(np.sqrt(np.mean(e * e))), float(np.max(e))


def field_error_norms(numerical: np.ndarray, exact: np.ndarray) -> Tuple[float, float, float]:
    """Norms of component 0 (the density for Euler, the scalar for advection)."""
    return error_norms(numerical[0], exact[0])


def rate(coarse_error: float, fine_error: float, n_coarse: int, n_fine: int) -> Tuple[Optional[float], str]:
    """Observed order between two grids.

    Doubling steps use ``log2(e_coarse / e_fine)``; other steps the generalized
    ``log(e_coarse / e_fine) / log(N_fine / N_coarse)``.
    """
    if coarse_error <= 0.0 or fine_error <= 0.0 or n_fine == n_coarse:
        return None, "none"
    if n_fine == 2 * n_coarse:
        return math.log2(coarse_error / fine_error), "log2"
    return math.log(coarse_error / fine_error) / math.log(n_fine / n_coarse), "generalized"


def fill_rates(rows: List[ConvergenceRow]) -> List[ConvergenceRow]:
    """Set r1/r2/rinf on each successful row from the previous successful row."""
    previous: Optional[ConvergenceRow] = None
    for row in sorted(rows, key=lambda r: r.n_sv):
        if row.failed:
            continue
        if previous is not None:
            row.r1, kind = rate(previous.l1, row.l1, previous.n_sv, row.n_sv)
            row.r2, _ = rate(previous.l2, row.l2, previous.n_sv, row.n_sv)
            row.rinf, _ = rate(previous.linf, row.linf, previous.n_sv, row.n_sv)
            row.rate_kind = kind
        previous = row
    return rows


def rates_for(n_values: Sequence[int], errors: Sequence[float]) -> List[Optional[float]]:
    """Rates along a sequence; the first entry is ``None``."""
    out: List[Optional[float]] = [None]
    for i in range(1, len(n_values)):
        out.append(rate(errors[i - 1], errors[i], n_values[i - 1], n_values[i])[0])
    return out
