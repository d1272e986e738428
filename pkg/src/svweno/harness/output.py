"""Plain-text data files for finished runs, convergence studies and aborts.

Layout of a run directory::

    <name>.csv              1D: x,cv_width,<components>[,exact_<components>]
    <name>_field.dat        2D: "# nx ny" header, then rows "x y rho u v p"
    <name>_density.dat      2D: density matrix, one row per y, one column per x
    <name>_troubled.csv     step,t,cv_index,flag for every troubled CV of every step
    <name>_troubled_final   final mask (.csv in 1D, matrix .dat in 2D)
    <name>_runlog.jsonl     one StepRecord per line
    <name>_summary.json     config, reference kind, notes and totals
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..errors import SolverAbort, SolverError
from ..mesh import SVGrid1D
from ..models import ConvergenceReport, ModelDescriptor
from ..physics import conserved_to_primitive
from ..solver import RunResult
from .convergence import format_report

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def component_names(model: ModelDescriptor) -> List[str]:
    """Column names of the written (primitive) variables."""
    if model.kind == "advection":
        return ["u"]
    if model.dim == 1:
        return ["rho", "u", "p"]
    return ["rho", "u", "v", "p"]


def _prepare(out_dir: PathLike) -> Path:
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise SolverError(f"Cannot create output directory {path}: {e}") from e
    return path


def _write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise SolverError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path}")
    return path


def _savetxt(path: Path, data: np.ndarray, **kwargs) -> Path:
    try:
        np.savetxt(path, data, **kwargs)
    except OSError as e:
        raise SolverError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path}")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    return str(value)


def write_field_1d(path: Path, grid: SVGrid1D, model: ModelDescriptor, averages: np.ndarray,
                   reference: Optional[np.ndarray] = None) -> Path:
    """One row per CV, primitives of the CV averages."""
    names = component_names(model)
    columns = [grid.cv_centers, grid.cv_widths, *conserved_to_primitive(model, averages)]
    header = ["x", "cv_width", *names]
    if reference is not None:
        columns.extend(conserved_to_primitive(model, reference))
        header.extend(f"exact_{n}" for n in names)
    return _savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(header),
                    comments="", fmt="%.15e")


def write_field_2d(path: Path, grid, model: ModelDescriptor, averages: np.ndarray) -> Path:
    """Structured field file; x varies slowest."""
    NX, NY = grid.shape
    X, Y = np.meshgrid(grid.x.cv_centers, grid.y.cv_centers, indexing="ij")
    prim = conserved_to_primitive(model, averages)
    data = np.column_stack([X.ravel(), Y.ravel(), *(c.ravel() for c in prim)])
    header = f"# {NX} {NY}\n# x y {' '.join(component_names(model))}"
    return _savetxt(path, data, header=header, comments="", fmt="%.10e")


def write_matrix(path: Path, values: np.ndarray, fmt: str = "%.10e") -> Path:
    """``(NX, NY)`` values written transposed, so rows run along y for contouring."""
    return _savetxt(path, np.asarray(values).T, fmt=fmt)


def write_troubled_history(path: Path, history) -> Path:
    lines = ["step,t,cv_index,flag"]
    for step, t, indices in history:
        lines.extend(f"{step},{t:.15e},{int(i)},1" for i in indices)
    return _write_text(path, "\n".join(lines) + "\n")


def write_runlog(path: Path, result: RunResult) -> Path:
    lines = [record.model_dump_json() for record in result.log.steps]
    return _write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def write_outputs(result: RunResult, out_dir: PathLike, reference: Optional[np.ndarray] = None,
                  reference_kind: Optional[str] = None) -> List[Path]:
    """Write every data file of a finished run into ``out_dir``.

    ``reference`` are conserved CV averages on the run's grid (exact or
    fine-grid); 1D only.
    """
    out = _prepare(out_dir)
    problem = result.problem
    model = problem.model
    grid = result.grid
    name = problem.name
    written: List[Path] = []

    if isinstance(grid, SVGrid1D):
        written.append(write_field_1d(out / f"{name}.csv", grid, model, result.field.averages, reference))
        final = np.column_stack([np.arange(grid.n_cv), grid.cv_centers, result.final_mask.cells.astype(int)])
        written.append(_savetxt(out / f"{name}_troubled_final.csv", final, delimiter=",",
                                header="cv_index,x,flag", comments="", fmt=["%d", "%.15e", "%d"]))
    else:
        written.append(write_field_2d(out / f"{name}_field.dat", grid, model, result.field.averages))
        written.append(write_matrix(out / f"{name}_density.dat", result.field.averages[0]))
        written.append(write_matrix(out / f"{name}_troubled_final.dat",
                                    result.final_mask.cells.astype(int), fmt="%d"))

    written.append(write_troubled_history(out / f"{name}_troubled.csv", result.troubled_history))
    written.append(write_runlog(out / f"{name}_runlog.jsonl", result))

    totals = result.field.totals(grid)
    summary: Dict[str, Any] = {
        "problem": problem.model_dump(mode="json"),
        "t": result.field.t,
        "n_steps": result.log.n_steps,
        "capped_steps": result.log.capped_steps,
        "mean_troubled_percent": result.log.mean_troubled_percent,
        "final_troubled_percent": result.log.final_troubled_percent,
        "wall_time": result.wall_time,
        "reference": reference_kind or problem.reference,
        "totals": totals,
        "initial_totals": result.initial_totals,
        "notes": problem.notes,
    }
    written.append(_write_text(out / f"{name}_summary.json",
                               json.dumps(summary, indent=2, default=_jsonable)))
    logger.info(f"Wrote {len(written)} output files for '{name}' to {out}")
    return written


def write_convergence(report: ConvergenceReport, out_dir: PathLike) -> List[Path]:
    """CSV plus the aligned text table."""
    out = _prepare(out_dir)
    stem = f"{report.preset}_k{report.order}_convergence"
    fields = ["n_sv", "l1", "r1", "l2", "r2", "linf", "rinf", "troubled_percent", "rate_kind", "failed", "error"]
    lines = [",".join(fields)]
    for row in report.rows:
        values = row.model_dump()
        lines.append(",".join("" if values[f] is None else str(values[f]) for f in fields))
    csv_path = _write_text(out / f"{stem}.csv", "\n".join(lines) + "\n")
    txt_path = _write_text(out / f"{stem}.txt", format_report(report))
    return [csv_path, txt_path]


def write_abort(error: SolverAbort, out_dir: PathLike, name: str = "run") -> List[Path]:
    """Dump the abort diagnostics and the last accepted CV averages."""
    out = _prepare(out_dir)
    info = {"message": error.message, "step": error.step, "stage": error.stage, "t": error.t,
            "details": error.details}
    written = [_write_text(out / f"{name}_abort.json", json.dumps(info, indent=2, default=_jsonable))]
    last = error.last_good
    if last is not None:
        path = out / f"{name}_last_good.npz"
        try:
            np.savez(path, averages=last.averages, t=last.t)
        except OSError as e:
            raise SolverError(f"Cannot write {path}: {e}") from e
        written.append(path)
    logger.error(f"Abort state of '{name}' dumped to {out}")
    return written
