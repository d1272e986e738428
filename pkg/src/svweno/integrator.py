"""Explicit multi-stage Runge-Kutta stepping and CFL time-step control.

The stage recursion is

    u(0) = u^n
    u(i) = sum_{l < i} ( alpha[i][l] u(l) + beta[i][l] dt L(u(l)) ),  i = 1..s
    u^{n+1} = u(s)
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, NonPhysicalStateError, SolverAbort
from .mesh import SVGrid1D
from .models import ModelDescriptor
from .physics import max_wavespeed

logger = logging.getLogger(__name__)

F = Fraction
Rows = Tuple[Tuple[Fraction, ...], ...]

# (alpha rows, beta rows); row i holds the coefficients of u(0..i-1)
_TABLEAUX: Dict[int, Tuple[Rows, Rows]] = {
    2: (
        ((F(1),), (F(1, 2), F(1, 2))),
        ((F(1),), (F(0), F(1, 2))),
    ),
    3: (
        ((F(1),), (F(3, 4), F(1, 4)), (F(1, 3), F(0), F(2, 3))),
        ((F(1),), (F(0), F(1, 4)), (F(0), F(0), F(2, 3))),
    ),
    4: (
        ((F(1),), (F(1), F(0)), (F(1), F(0), F(0)), (F(-1, 3), F(1, 3), F(2, 3), F(1, 3))),
        ((F(1, 2),), (F(0), F(1, 2)), (F(0), F(0), F(1)), (F(0), F(0), F(0), F(1, 6))),
    ),
    5: (
        tuple((F(1),) + (F(0),) * i for i in range(5)),
        tuple((F(0),) * i + (F(1, 5 - i),) for i in range(5)),
    ),
}


@dataclass(frozen=True)
class RKTableau:
    """Lower-triangular alpha/beta rows with exact rational entries."""

    order: int
    alpha: Rows
    beta: Rows

    @property
    def stages(self) -> int:
        return len(self.alpha)

    def stage_times(self) -> Tuple[Fraction, ...]:
        """Fraction of the step reached by each stage: ``c_i = sum_l alpha_il c_l + beta_il``."""
        c = [F(0)]
        for a_row, b_row in zip(self.alpha, self.beta):
            c.append(sum((a * cl + b for a, b, cl in zip(a_row, b_row, c)), F(0)))
        return tuple(c)


def tableau(order: int) -> RKTableau:
    if order not in _TABLEAUX:
        raise ConfigurationError(f"No Runge-Kutta tableau for order {order!r}; expected 2..5")
    alpha, beta = _TABLEAUX[order]
    return RKTableau(order=order, alpha=alpha, beta=beta)


# residual(u, t, stage, limit) -> du/dt
Residual = Callable[[np.ndarray, float, int, bool], np.ndarray]


def rk_step(residual: Residual, u: np.ndarray, dt: float, tab: RKTableau, t: float = 0.0,
            step: int = 0, limit_every_stage: bool = True) -> np.ndarray:
    """Advance ``u`` by one step.

    The residual is asked to limit on every stage, or only on stage 0 when
    ``limit_every_stage`` is false. Non-finite or nonphysical stages raise
    :class:`SolverAbort` carrying ``u`` as the last good state.
    """
    if not dt > 0:
        raise SolverAbort(f"Non-positive time step {dt!r}", step=step, stage=0, t=t, last_good=u)
    times = tab.stage_times()
    stages = [u]
    rates = []
    for i in range(tab.stages):
        l = len(stages) - 1
        try:
            rates.append(residual(stages[l], t + float(times[l]) * dt, l, limit_every_stage or l == 0))
        except NonPhysicalStateError as e:
            raise SolverAbort(
                f"Nonphysical state in stage {l} of step {step}: {e.message}",
                step=step, stage=l, t=t, last_good=u, details=e.details,
            ) from e
        new = np.zeros_like(u)
        for a, b, ul, Ll in zip(tab.alpha[i], tab.beta[i], stages, rates):
            if a:
                new += float(a) * ul
            if b:
                new += (float(b) * dt) * Ll
        if not np.all(np.isfinite(new)):
            raise SolverAbort(
                f"Non-finite values after stage {i + 1} of step {step}",
                step=step, stage=i + 1, t=t, last_good=u,
            )
        stages.append(new)
    return stages[-1]


@dataclass(frozen=True)
class StepSize:
    dt: float
    clipped: bool = False
    capped: bool = False


def compute_dt(grid, u: np.ndarray, model: ModelDescriptor, cfl: float, t: float, t_final: float,
               dt_max: Optional[float] = None) -> StepSize:
    """CFL step from CV widths and per-CV wave speeds, clipped to land on ``t_final``.

    1D: ``cfl * min h / lambda``; 2D: ``cfl * min 1 / (lambda_x / h_x + lambda_y / h_y)``.
    Vanishing wave speeds fall back to ``dt_max`` (default ``t_final``).
    """
    cap = dt_max if dt_max is not None else t_final
    if isinstance(grid, SVGrid1D):
        rate = max_wavespeed(model, u, 0) / grid.cv_widths
    else:
        rate = (max_wavespeed(model, u, 0) / grid.x.cv_widths[:, None]
                + max_wavespeed(model, u, 1) / grid.y.cv_widths[None, :])
    peak = float(np.max(rate))
    capped = False
    if peak > 0.0:
        dt = cfl / peak
    else:
        dt = np.inf
    if dt > cap:
        dt = cap
        capped = True
    remaining = t_final - t
    clipped = False
    if dt >= remaining * (1.0 - 1e-12):
        dt = remaining
        clipped = True
    return StepSize(dt=float(dt), clipped=clipped, capped=capped)
