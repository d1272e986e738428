"""Benchmark presets, reference solutions, error norms, convergence studies and output writers."""

from .convergence import format_report, run_convergence_study
from .exact import exact_cell_averages, exact_riemann, reference_cell_averages, reference_solution
from .norms import error_norms, field_error_norms, rate
from .output import write_abort, write_convergence, write_outputs
from .presets import describe_presets, preset, preset_names

__all__ = [
    "describe_presets",
    "error_norms",
    "exact_cell_averages",
    "exact_riemann",
    "field_error_norms",
    "format_report",
    "preset",
    "preset_names",
    "rate",
    "reference_cell_averages",
    "reference_solution",
    "run_convergence_study",
    "write_abort",
    "write_convergence",
    "write_outputs",
]
