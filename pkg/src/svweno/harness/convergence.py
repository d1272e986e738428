"""Grid-refinement studies on presets with a known reference solution."""

import asyncio
import logging
from typing import List, Optional, Sequence

from ..errors import ConfigurationError
from ..models import ConvergenceReport, ConvergenceRow, ProblemConfig
from ..solver import advance
from .batch_utils import execute_batch, format_batch_result
from .exact import exact_cell_averages
from .norms import field_error_norms, fill_rates
from .presets import preset

logger = logging.getLogger(__name__)

# SV counts of the published accuracy tables
DEFAULT_SV_COUNTS = (5, 10, 20, 40, 60, 80, 100)


def run_row(problem: ProblemConfig) -> ConvergenceRow:
    """Run one grid and measure its errors against the exact CV averages."""
    result = advance(problem, keep_history=False)
    exact = exact_cell_averages(problem, result.grid, result.field.t)
    if exact is None:
        raise ConfigurationError(f"Preset '{problem.name}' has no exact reference for convergence studies")
    l1, l2, linf = field_error_norms(result.field.averages, exact)
    row = ConvergenceRow(n_sv=problem.n_sv, l1=l1, l2=l2, linf=linf,
                         troubled_percent=result.log.final_troubled_percent)
    logger.info(f"N={problem.n_sv}: l1={l1:.3e}, l2={l2:.3e}, linf={linf:.3e}, "
                f"troubled {row.troubled_percent:.2f}%")
    return row


async def run_convergence_study_async(
    preset_name: str,
    order: int,
    sv_counts: Sequence[int] = DEFAULT_SV_COUNTS,
    tvb_m: float = 2.0,
    epsilon: float = 1e-6,
    mode: str = "cvmsweno",
    workers: int = 1,
    characteristic: Optional[bool] = None,
    cfl: Optional[float] = None,
    t_final: Optional[float] = None,
    limit_every_stage: bool = True,
) -> ConvergenceReport:
    base = preset(preset_name)
    if base.reference != "exact":
        raise ConfigurationError(f"Preset '{preset_name}' has no exact solution; pick a smooth preset")
    limiter = {"tvb_m": tvb_m, "epsilon": epsilon, "mode": mode, "limit_every_stage": limit_every_stage}
    if characteristic is not None:
        limiter["characteristic"] = characteristic
    overrides = {}
    if cfl is not None:
        overrides["cfl"] = cfl
    if t_final is not None:
        overrides["t_final"] = t_final
    problems = [preset(preset_name, order=order, n_sv=n, limiter=dict(limiter), **overrides) for n in sv_counts]
    logger.info(f"Convergence study '{preset_name}' k={order} over N={list(sv_counts)} with {workers} worker(s)")

    success, failed = await execute_batch(problems, run_row, max_concurrent=workers)
    rows: List[ConvergenceRow] = [row for _, row in success]
    for problem, error in failed:
        rows.append(ConvergenceRow(n_sv=problem.n_sv, failed=True, error=error))
    rows.sort(key=lambda r: r.n_sv)
    fill_rates(rows)
    logger.info(format_batch_result("Convergence study", success, failed, item_name="grids").rstrip())
    return ConvergenceReport(preset=preset_name, order=order, tvb_m=tvb_m, epsilon=epsilon,
                             limiter_mode=mode, rows=rows)


def run_convergence_study(preset_name: str, order: int, sv_counts: Sequence[int] = DEFAULT_SV_COUNTS,
                          tvb_m: float = 2.0, epsilon: float = 1e-6, mode: str = "cvmsweno",
                          workers: int = 1, characteristic: Optional[bool] = None, cfl: Optional[float] = None,
                          t_final: Optional[float] = None, limit_every_stage: bool = True) -> ConvergenceReport:
    """Blocking wrapper around :func:`run_convergence_study_async`."""
    if not sv_counts:
        raise ConfigurationError("A convergence study needs at least one SV count")
    return asyncio.run(run_convergence_study_async(
        preset_name, order, sv_counts, tvb_m, epsilon, mode, workers, characteristic,
        cfl=cfl, t_final=t_final, limit_every_stage=limit_every_stage,
    ))


def _fmt(value: Optional[float], spec: str) -> str:
    if value is None:
        return format("-", ">" + spec.split(".")[0])
    return format(value, spec)


def format_report(report: ConvergenceReport) -> str:
    """Aligned text table in the layout of the published accuracy tables."""
    lines = [
        f"# {report.preset}  k={report.order}  M={report.tvb_m:g}  eps={report.epsilon:g}  "
        f"limiter={report.limiter_mode}",
        f"{'N':>5} {'l1':>10} {'R1':>6} {'l2':>10} {'R2':>6} {'linf':>10} {'Rinf':>6} {'percent':>8}",
    ]
    for row in report.rows:
        if row.failed:
            lines.append(f"{row.n_sv:>5} failed: {row.error}")
            continue
        marker = "*" if row.rate_kind == "generalized" else " "
        lines.append(
            f"{row.n_sv:>5} {_fmt(row.l1, '10.2e')} {_fmt(row.r1, '6.2f')}{marker}"
            f"{_fmt(row.l2, '10.2e')} {_fmt(row.r2, '6.2f')}{marker}"
            f"{_fmt(row.linf, '10.2e')} {_fmt(row.rinf, '6.2f')}{marker}"
            f"{_fmt(row.troubled_percent, '8.2f')}"
        )
    if any(r.rate_kind == "generalized" for r in report.rows):
        lines.append("* rate log(e_coarse/e_fine) / log(N_fine/N_coarse) for a non-doubling step")
    return "\n".join(lines) + "\n"


def has_failures(report: ConvergenceReport) -> bool:
    return any(r.failed for r in report.rows)
