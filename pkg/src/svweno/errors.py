"""Error types shared by the solver core and the harness.

Every failure the package raises on purpose derives from :class:`SolverError`,
so the CLI can catch it in one place and map it to an exit code. The message is
printed verbatim to the user and should say what went wrong and where.

This module intentionally has no package imports so it can be imported from
any module without creating an import cycle.
"""

from typing import Any, Dict, Optional


class SolverError(Exception):
    """Base error with a human-readable message and optional structured details."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class ConfigurationError(SolverError):
    """Invalid order, grid, preset, boundary pairing or other input."""


class NonPhysicalStateError(SolverError):
    """An Euler state with non-positive density or pressure, or a non-finite value.

    ``details["locations"]`` lists the offending flat indices (CVs or face
    quadrature points, depending on the caller).
    """

    @property
    def locations(self) -> list:
        return list(self.details.get("locations", []))


class EvaluationDomainError(SolverError):
    """A polynomial was evaluated outside the element that owns it."""


class SolverAbort(SolverError):
    """Time stepping stopped on a NaN or nonphysical stage.

    Carries the step/stage/time diagnostics and the last accepted field so the
    caller can dump it.
    """

    def __init__(
        self,
        message: str,
        step: int,
        stage: int,
        t: float,
        last_good: Any = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.step = step
        self.stage = stage
        self.t = t
        self.last_good = last_good
        merged = {"step": step, "stage": stage, "t": t}
        merged.update(details or {})
        super().__init__(message, merged)
