"""Command-line front end: ``svweno run|convergence|presets``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from svweno import __version__

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv
except ImportError:
    load_dotenv = None

from .config import EnvironmentSettings, apply_overrides, load_problem
from .errors import ConfigurationError, SolverAbort, SolverError
from .harness.convergence import DEFAULT_SV_COUNTS, format_report, has_failures, run_convergence_study
from .harness.exact import exact_cell_averages, reference_cell_averages
from .harness.norms import field_error_norms
from .harness.output import write_abort, write_convergence, write_outputs
from .harness.presets import describe_presets
from .solver import advance

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2


def _on_off(value: Optional[str]) -> Optional[bool]:
    if value is None:
        return None
    return value == "on"


def _add_problem_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--problem", metavar="NAME", help="Preset name (see 'svweno presets')")
    parser.add_argument("--config", metavar="FILE", help="JSON problem file; overrides SVWENO_CONFIG_FILE")
    parser.add_argument("--order", type=int, metavar="K", help="CVs per SV direction (2..5)")
    parser.add_argument("--tvb-m", type=float, metavar="M", help="TVB constant of the troubled-cell detector")
    parser.add_argument("--epsilon", type=float, help="Regularizer of the nonlinear weights")
    parser.add_argument("--limiter", choices=["cvmsweno", "full", "off"],
                        help="cvmsweno: limit detected CVs; full: limit every CV; off: never limit")
    parser.add_argument("--char", choices=["on", "off"], help="Limit in characteristic variables")
    parser.add_argument("--out", metavar="DIR", help="Output directory (default SVWENO_OUT_DIR or ./results)")


def create_parser() -> argparse.ArgumentParser:
    """Create argument parser for CLI."""
    parser = argparse.ArgumentParser(
        prog="svweno",
        description="Spectral volume solver with control-volume-wise SWENO limiting",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", metavar="LEVEL", help="Logging level (default SVWENO_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run one problem and write its data files")
    _add_problem_arguments(run)
    run.add_argument("--nsv", type=int, metavar="N", help="SV count (x-direction in 2D)")
    run.add_argument("--nsv-y", type=int, metavar="N", help="SV count in the y-direction (2D)")
    run.add_argument("--cfl", type=float, help="CFL number (default 0.5)")
    run.add_argument("--tfinal", type=float, metavar="T", help="Final time")
    run.add_argument("--flux", choices=["local", "global"], help="Lax-Friedrichs dissipation speed")
    run.add_argument("--limit-first-stage-only", action="store_true",
                     help="Detect and limit only at the start of each step")
    run.add_argument("--fine-reference", action="store_true",
                     help="Compute the fine-grid reference for problems without an exact solution")
    run.add_argument("--reference-cvs", type=int, default=4000, metavar="N",
                     help="CVs of the fine-grid reference (default 4000)")

    conv = sub.add_parser("convergence", help="Grid-refinement study on a smooth preset")
    _add_problem_arguments(conv)
    conv.add_argument("--nsv", type=int, nargs="+", metavar="N", help=f"SV counts (default {DEFAULT_SV_COUNTS})")
    conv.add_argument("--workers", type=int, metavar="N", help="Concurrent rows (default SVWENO_WORKERS or 1)")
    conv.add_argument("--cfl", type=float, help="CFL number (default 0.5)")
    conv.add_argument("--tfinal", type=float, metavar="T", help="Final time of every row")
    conv.add_argument("--limit-first-stage-only", action="store_true",
                      help="Detect and limit only at the start of each step")

    sub.add_parser("presets", help="List the benchmark presets")
    return parser


def _limiter_overrides(args: argparse.Namespace) -> dict:
    return {
        "tvb_m": args.tvb_m,
        "epsilon": args.epsilon,
        "mode": args.limiter,
        "characteristic": _on_off(args.char),
    }


def cmd_presets(args: argparse.Namespace, settings: EnvironmentSettings) -> int:
    for name, description in describe_presets():
        print(f"{name:<14} {description}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace, settings: EnvironmentSettings) -> int:
    problem = load_problem(args.config, args.problem)
    limiter = _limiter_overrides(args)
    if args.limit_first_stage_only:
        limiter["limit_every_stage"] = False
    problem = apply_overrides(problem, {
        "order": args.order,
        "n_sv": args.nsv,
        "n_sv_y": args.nsv_y,
        "cfl": args.cfl,
        "t_final": args.tfinal,
        "flux_dissipation": args.flux,
    }, limiter)
    out_dir = Path(args.out or problem.output_dir or settings.output_dir)
    for note in problem.notes:
        logger.warning(f"{problem.name}: {note}")

    try:
        result = advance(problem)
    except SolverAbort as e:
        write_abort(e, out_dir, problem.name)
        raise

    reference = None
    reference_kind = problem.reference
    if problem.model.dim == 1:
        if problem.reference in ("exact", "riemann"):
            reference = exact_cell_averages(problem, result.grid, result.field.t)
        elif problem.reference == "fine-grid" and args.fine_reference:
            reference = reference_cell_averages(problem, result.grid, n_cv=args.reference_cvs)
        elif problem.reference == "fine-grid":
            reference_kind = "none"

    write_outputs(result, out_dir, reference, reference_kind)
    print(f"{problem.name}: t={result.field.t:g} in {result.log.n_steps} steps, "
          f"mean troubled {result.log.mean_troubled_percent:.2f}%")
    if reference is not None:
        l1, l2, linf = field_error_norms(result.field.averages, reference)
        print(f"  errors vs {reference_kind}: l1={l1:.3e} l2={l2:.3e} linf={linf:.3e}")
    print(f"  output: {out_dir}")
    return EXIT_OK


def cmd_convergence(args: argparse.Namespace, settings: EnvironmentSettings) -> int:
    if args.config:
        raise ConfigurationError("'convergence' works on presets; use --problem instead of --config")
    name = args.problem or "advection1d"
    workers = args.workers or settings.workers
    report = run_convergence_study(
        name,
        args.order or 3,
        tuple(args.nsv) if args.nsv else DEFAULT_SV_COUNTS,
        tvb_m=2.0 if args.tvb_m is None else args.tvb_m,
        epsilon=1e-6 if args.epsilon is None else args.epsilon,
        mode=args.limiter or "cvmsweno",
        workers=workers,
        characteristic=_on_off(args.char),
        cfl=args.cfl,
        t_final=args.tfinal,
        limit_every_stage=not args.limit_first_stage_only,
    )
    write_convergence(report, Path(args.out or settings.output_dir))
    print(format_report(report), end="")
    return EXIT_SOLVER if has_failures(report) else EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "presets": cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run the command; returns the process exit code."""
    if load_dotenv is not None:
        load_dotenv()
    parser = create_parser()
    args = parser.parse_args(argv)

    try:
        settings = EnvironmentSettings.from_env()
        if args.log_level:
            settings = EnvironmentSettings(**{**settings.model_dump(), "log_level": args.log_level})
    except (ConfigurationError, ValueError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=settings.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[args.command](args, settings)
    except ConfigurationError as e:
        print(f"Configuration error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverAbort as e:
        print(f"Solver aborted at step {e.step}, stage {e.stage}, t={e.t:g}: {e.message}", file=sys.stderr)
        return EXIT_SOLVER
    except SolverError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as e:
        logger.error(f"Unexpected error in '{args.command}': {e}", exc_info=True)
        print(f"Unexpected error: {e}", file=sys.stderr)
        return EXIT_SOLVER


def entrypoint():
    """Console-script entrypoint."""
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
