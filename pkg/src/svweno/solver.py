"""Semi-discrete SV residual, boundary conditions and the time loop.

Per residual evaluation the pipeline is: pad the CV averages with one ghost SV
on every side, reconstruct the SV polynomials, detect troubled CVs, limit them,
evaluate face traces, close the boundary faces, and integrate the face fluxes.
A face carries the two-state Lax-Friedrichs flux when it lies on an SV boundary
or touches a troubled CV, and the analytic flux of its single trace otherwise.
"""

import logging
import time
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from typing import List, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, NonPhysicalStateError, SolverAbort
from .integrator import compute_dt, rk_step, tableau
from .limiter import TroubledMask, detect_troubled, limit_field
from .mesh import SVGrid1D, build_grid_1d, build_grid_2d
from .models import BoundaryCondition, BoundarySpec, ModelDescriptor, ProblemConfig, RunLog, StepRecord
from .physics import analytic_flux, check_physical, lax_friedrichs, max_wavespeed, reflect
from .problems import cell_averages, get_boundary_profile, get_initial_condition
from .reconstruction import (
    basis_for_grid,
    build_stencil_operators_1d,
    build_stencil_operators_2d,
    evaluate_face_states,
    reconstruct_all_1d,
    reconstruct_all_2d,
)

logger = logging.getLogger(__name__)


@dataclass
class SolutionField:
    """Conserved CV averages, ``(n_var, n_cv)`` or ``(n_var, NX, NY)``, at time ``t``."""

    averages: np.ndarray
    t: float = 0.0

    def copy(self) -> "SolutionField":
        return SolutionField(averages=self.averages.copy(), t=self.t)

    def totals(self, grid) -> np.ndarray:
        """Per-component integral ``sum V u`` over the domain."""
        if isinstance(grid, SVGrid1D):
            return self.averages @ grid.cv_widths
        return np.einsum("vab,ab->v", self.averages, grid.cv_volumes())


def build_grid(problem: ProblemConfig):
    d = problem.domain
    if problem.model.dim == 1:
        return build_grid_1d(d[0], d[1], problem.n_sv, problem.order)
    return build_grid_2d(tuple(d), problem.n_sv, problem.ny, problem.order)


# ---------------------------------------------------------------------------
# Boundary conditions
# ---------------------------------------------------------------------------


def _side_states(bc: BoundaryCondition, model: ModelDescriptor, t: float, s, inner: np.ndarray,
                 wrap: np.ndarray, axis: int) -> np.ndarray:
    """Exterior states for one side, ``(n_var, depth, ...)`` ordered outward.

    ``inner`` are the interior states mirrored about the side, ``wrap`` the
    states periodic continuation puts there and ``s`` the coordinate along
    the side.
    """
    if bc.kind == "periodic":
        return wrap.copy()
    if bc.kind == "reflective":
        return reflect(model, inner, axis)
    if bc.kind == "outflow":
        return np.broadcast_to(inner[:, :1], inner.shape).copy()
    if bc.profile is not None:
        return get_boundary_profile(bc.profile)(model, t, s, inner, axis)
    state = np.asarray(bc.state, dtype=float)
    if state.shape != (inner.shape[0],):
        raise ConfigurationError(
            f"Prescribed boundary state needs {inner.shape[0]} components, got {bc.state}"
        )
    return np.broadcast_to(state.reshape((-1,) + (1,) * (inner.ndim - 1)), inner.shape).copy()


def _fill_axis(target: np.ndarray, u: np.ndarray, lo: BoundaryCondition, hi: BoundaryCondition,
               model: ModelDescriptor, t: float, ghost: int, axis: int, s_lo, s_hi) -> None:
    """Write ``u`` and its ghosts into ``target``; the padded axis is array axis 1 of both."""
    g = ghost
    n = u.shape[1]
    target[:, g:g + n] = u
    reverse = u[:, ::-1]
    left = _side_states(lo, model, t, s_lo, u[:, :g], reverse[:, :g], axis)
    right = _side_states(hi, model, t, s_hi, reverse[:, :g], u[:, :g], axis)
    target[:, :g] = left[:, ::-1]
    target[:, g + n:] = right


def _ghost_centers(axis: SVGrid1D, ghost: int) -> np.ndarray:
    """CV centers of the axis extended by ``ghost`` CVs on each side."""
    c = axis.cv_centers
    L = axis.b - axis.a
    return np.concatenate([c[-ghost:] - L, c, c[:ghost] + L])


def fill_ghosts(grid, u: np.ndarray, boundary: BoundarySpec, model: ModelDescriptor,
                t: float = 0.0, ghost: Optional[int] = None) -> np.ndarray:
    """Pad the CV averages by ``ghost`` CVs per side (default one SV).

    Periodic sides wrap, reflective sides mirror with the normal momentum
    negated, outflow sides repeat the boundary CV, prescribed sides evaluate
    their state or profile. In 2D the x-ghosts are filled first, so the
    y-pass also covers the corners.
    """
    g = grid.order if ghost is None else ghost
    n_var = u.shape[0]
    if isinstance(grid, SVGrid1D):
        if g > grid.n_cv:
            raise ConfigurationError(f"Grid of {grid.n_cv} CVs is too small for {g} ghost CVs")
        ext = np.empty((n_var, u.shape[1] + 2 * g))
        _fill_axis(ext, u, boundary.left, boundary.right, model, t, g, 0,
                   np.full(g, grid.a), np.full(g, grid.b))
        return ext
    NX, NY = grid.shape
    if g > min(NX, NY):
        raise ConfigurationError(f"Grid of {NX}x{NY} CVs is too small for {g} ghost CVs")
    ext = np.empty((n_var, NX + 2 * g, NY + 2 * g))
    s_y = np.broadcast_to(grid.y.cv_centers, (g, NY))
    _fill_axis(ext[:, :, g:g + NY], u, boundary.left, boundary.right, model, t, g, 0, s_y, s_y)
    s_x = np.broadcast_to(_ghost_centers(grid.x, g), (g, NX + 2 * g))
    columns = np.moveaxis(ext[:, :, g:g + NY], 2, 1).copy()
    _fill_axis(np.moveaxis(ext, 2, 1), columns, boundary.bottom, boundary.top, model, t, g, 1, s_x, s_x)
    return ext


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


@dataclass
class StageState:
    """Everything one residual evaluation derived from the stage averages."""

    ext: np.ndarray
    traces: object
    mask: TroubledMask


@dataclass
class RunResult:
    """Outcome of :func:`advance`."""

    problem: ProblemConfig
    grid: object
    field: SolutionField
    log: RunLog
    final_mask: TroubledMask
    troubled_history: List[Tuple[int, float, np.ndarray]] = dataclass_field(default_factory=list)
    initial_totals: Optional[np.ndarray] = None
    wall_time: float = 0.0


class SVSolver:
    """SV discretization of one :class:`ProblemConfig`.

    Builds the grid, the reconstruction basis, the limiter's stencil operators
    and the Runge-Kutta tableau once; :meth:`residual` is the operator ``L(u)``
    of the stage recursion.
    """

    def __init__(self, problem: ProblemConfig):
        self.problem = problem
        self.model = problem.model
        self.params = problem.limiter
        self.boundary = problem.boundary
        self.grid = build_grid(problem)
        self.order = problem.order
        self.ghost = problem.order
        n_q = problem.quadrature_points or problem.order
        if self.model.dim == 1:
            self.basis = basis_for_grid(self.grid, n_q)
            self.ops = build_stencil_operators_1d(self.grid)
        else:
            self.basis = basis_for_grid(self.grid.x, n_q)
            self.ops = build_stencil_operators_2d(self.grid)
        self.tableau = tableau(problem.order)
        self.stage_masks: List[TroubledMask] = []

    @property
    def is_1d(self) -> bool:
        return self.model.dim == 1

    def initial_field(self) -> SolutionField:
        ic = get_initial_condition(self.problem.initial_condition)
        model = self.model
        u = cell_averages(self.grid, lambda *xs: ic(model, *xs))
        if u.shape[0] != model.n_components:
            raise ConfigurationError(
                f"Initial condition '{self.problem.initial_condition}' has {u.shape[0]} components, "
                f"model needs {model.n_components}"
            )
        return SolutionField(averages=u, t=0.0)

    def extend(self, u: np.ndarray, t: float) -> np.ndarray:
        return fill_ghosts(self.grid, u, self.boundary, self.model, t, self.ghost)

    def _reconstruct(self, u: np.ndarray) -> np.ndarray:
        if self.is_1d:
            return reconstruct_all_1d(self.basis, u)
        return reconstruct_all_2d(self.basis, u)

    def stage_state(self, u: np.ndarray, t: float, limit: bool = True) -> StageState:
        """Ghosts, SV traces, troubled mask and limited traces for stage averages ``u``."""
        ext = self.extend(u, t)
        W = self._reconstruct(u)
        traces = evaluate_face_states(self.grid, self.basis, W)
        shape = (self.grid.n_cv,) if self.is_1d else self.grid.shape
        if not limit:
            return StageState(ext=ext, traces=traces, mask=TroubledMask.uniform(shape, self.order, False))
        mask = detect_troubled(self.grid, ext, self.ghost, self.basis, W, self.params)
        limited = limit_field(self.grid, ext, self.ghost, traces, mask, self.ops, self.params,
                              self.model, self.basis)
        return StageState(ext=ext, traces=limited.traces, mask=mask)

    def troubled_mask(self, u: np.ndarray, t: float) -> TroubledMask:
        ext = self.extend(u, t)
        W = self._reconstruct(u)
        return detect_troubled(self.grid, ext, self.ghost, self.basis, W, self.params)

    def _face_flux(self, UL: np.ndarray, UR: np.ndarray, riemann: np.ndarray, axis: int,
                   alpha) -> np.ndarray:
        F = np.empty_like(UL)
        cont = ~riemann
        F[:, cont] = analytic_flux(self.model, UL[:, cont], axis)
        F[:, riemann] = lax_friedrichs(self.model, UL[:, riemann], UR[:, riemann], axis, alpha)
        return F

    def _global_alpha(self, axis: int, *states: np.ndarray) -> Optional[float]:
        if self.problem.flux_dissipation != "global":
            return None
        return max(float(np.max(max_wavespeed(self.model, U, axis))) for U in states)

    def residual(self, u: np.ndarray, t: float, stage: int = 0, limit: bool = True) -> np.ndarray:
        """``du/dt`` for the CV averages ``u`` at time ``t``."""
        state = self.stage_state(u, t, limit)
        if limit:
            self.stage_masks.append(state.mask)
            logger.debug(f"t={t:.6g} stage {stage}: {state.mask.count} troubled CVs")
        if self.is_1d:
            return self._residual_1d(state, t)
        return self._residual_2d(state, t)

    def _residual_1d(self, state: StageState, t: float) -> np.ndarray:
        grid = self.grid
        tr = state.traces
        s_lo = np.array([grid.a])
        s_hi = np.array([grid.b])
        west = _side_states(self.boundary.left, self.model, t, s_lo, tr.lo[:, :1], tr.hi[:, -1:], 0)
        east = _side_states(self.boundary.right, self.model, t, s_hi, tr.hi[:, -1:], tr.lo[:, :1], 0)
        UL = np.concatenate([west, tr.hi], axis=1)
        UR = np.concatenate([tr.lo, east], axis=1)
        alpha = self._global_alpha(0, UL, UR)
        F = self._face_flux(UL, UR, state.mask.riemann_faces_1d(), 0, alpha)
        return -(F[:, 1:] - F[:, :-1]) / grid.cv_widths

    def _residual_2d(self, state: StageState, t: float) -> np.ndarray:
        grid = self.grid
        tr = state.traces
        model = self.model
        nodes = self.basis.rule.unit_nodes()
        weights = self.basis.rule.unit_weights()
        gy = (grid.y.cv_centers[:, None] + grid.y.cv_widths[:, None] * nodes[None, :])[None]
        gx = (grid.x.cv_centers[:, None] + grid.x.cv_widths[:, None] * nodes[None, :])[None]
        fx, fy = state.mask.riemann_faces_2d()
        nq = nodes.size

        west = _side_states(self.boundary.left, model, t, gy, tr.west[:, :1], tr.east[:, -1:], 0)
        east = _side_states(self.boundary.right, model, t, gy, tr.east[:, -1:], tr.west[:, :1], 0)
        ULx = np.concatenate([west, tr.east], axis=1)
        URx = np.concatenate([tr.west, east], axis=1)
        alpha_x = self._global_alpha(0, ULx, URx)
        Fx = self._face_flux(ULx, URx, np.broadcast_to(fx[..., None], fx.shape + (nq,)), 0, alpha_x)

        def outward(a):  # (v, NX, 1, q) -> (v, 1, NX, q)
            return np.moveaxis(a, 2, 1)

        south = _side_states(self.boundary.bottom, model, t, gx, outward(tr.south[:, :, :1]),
                             outward(tr.north[:, :, -1:]), 1)
        north = _side_states(self.boundary.top, model, t, gx, outward(tr.north[:, :, -1:]),
                             outward(tr.south[:, :, :1]), 1)
        ULy = np.concatenate([outward(south), tr.north], axis=2)
        URy = np.concatenate([tr.south, outward(north)], axis=2)
        alpha_y = self._global_alpha(1, ULy, URy)
        Fy = self._face_flux(ULy, URy, np.broadcast_to(fy[..., None], fy.shape + (nq,)), 1, alpha_y)

        Fx = Fx @ weights
        Fy = Fy @ weights
        return (-(Fx[:, 1:] - Fx[:, :-1]) / grid.x.cv_widths[:, None]
                - (Fy[:, :, 1:] - Fy[:, :, :-1]) / grid.y.cv_widths[None, :])

    def run(self, keep_history: Optional[bool] = None) -> RunResult:
        """Integrate from the initial condition to ``t_final``."""
        problem = self.problem
        model = self.model
        grid = self.grid
        keep = self.is_1d if keep_history is None else keep_history
        started = time.perf_counter()
        field_ = self.initial_field()
        u = field_.averages
        t = 0.0
        step = 0
        log = RunLog(problem=problem.name, order=self.order, n_cv=grid.n_cv)
        history: List[Tuple[int, float, np.ndarray]] = []
        initial_totals = field_.totals(grid)
        logger.info(
            f"Starting '{problem.name}': {model.dim}D {model.kind}, k={self.order}, "
            f"{grid.n_cv} CVs, t_final={problem.t_final}, limiter={self.params.mode}, "
            f"M={self.params.tvb_m}"
        )
        while problem.t_final - t > 1e-14 * max(1.0, problem.t_final):
            try:
                size = compute_dt(grid, u, model, problem.cfl, t, problem.t_final, problem.dt_max)
            except NonPhysicalStateError as e:
                raise SolverAbort(f"Nonphysical state before step {step + 1}: {e.message}",
                                  step=step + 1, stage=0, t=t, last_good=SolutionField(u.copy(), t),
                                  details=e.details) from e
            if size.capped:
                log.capped_steps += 1
                logger.warning(f"Step {step + 1}: time step capped at {size.dt:.6g} (vanishing wave speeds)")
            self.stage_masks = []
            try:
                u_new = rk_step(self.residual, u, size.dt, self.tableau, t, step + 1,
                                self.params.limit_every_stage)
                if model.kind == "euler":
                    check_physical(model, u_new, "step result")
            except NonPhysicalStateError as e:
                logger.error(f"Run '{problem.name}' aborted at step {step + 1}, t={t:.6g}: {e.message}")
                raise SolverAbort(f"Nonphysical state after step {step + 1}: {e.message}",
                                  step=step + 1, stage=self.tableau.stages, t=t,
                                  last_good=SolutionField(u.copy(), t), details=e.details) from e
            except SolverAbort as e:
                e.last_good = SolutionField(u.copy(), t)
                logger.error(f"Run '{problem.name}' aborted at step {e.step}, stage {e.stage}: {e.message}")
                raise
            u = u_new
            step += 1
            t = problem.t_final if size.clipped else t + size.dt
            percent = max((m.percent for m in self.stage_masks), default=0.0)
            log.steps.append(StepRecord(step=step, t=t, dt=size.dt, troubled_percent=percent,
                                        clipped=size.clipped))
            if keep and self.stage_masks:
                union = np.logical_or.reduce([m.cells for m in self.stage_masks])
                history.append((step, t, np.flatnonzero(union)))
            if step % problem.log_every == 0:
                logger.info(f"step {step}: t={t:.6g}, dt={size.dt:.3e}, troubled {percent:.2f}%")
        final_mask = self.troubled_mask(u, t)
        elapsed = time.perf_counter() - started
        logger.info(
            f"Finished '{problem.name}' in {step} steps ({elapsed:.2f}s), "
            f"mean troubled {log.mean_troubled_percent:.2f}%"
        )
        return RunResult(
            problem=problem, grid=grid, field=SolutionField(averages=u, t=t), log=log,
            final_mask=final_mask, troubled_history=history, initial_totals=initial_totals,
            wall_time=elapsed,
        )


def advance(problem: ProblemConfig, keep_history: Optional[bool] = None) -> RunResult:
    """Run ``problem`` to its final time; see :meth:`SVSolver.run`."""
    return SVSolver(problem).run(keep_history)
