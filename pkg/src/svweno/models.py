"""Configuration and record models."""

import math
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from .mesh import MAX_ORDER, MIN_ORDER


class ModelDescriptor(BaseModel):
    """Which conservation law is solved, and its constants."""

    kind: Literal["advection", "euler"] = "advection"
    dim: Literal[1, 2] = 1
    gamma: float = Field(1.4, description="Ratio of specific heats (Euler)")
    velocity: Tuple[float, float] = Field((1.0, 0.0), description="Advection velocity (cx, cy)")

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v: float) -> float:
        if not v > 1.0:
            raise ValueError(f"gamma must be > 1, got {v}")
        return v

    @property
    def n_components(self) -> int:
        if self.kind == "advection":
            return 1
        return 3 if self.dim == 1 else 4

    @property
    def is_system(self) -> bool:
        return self.n_components > 1


class LimiterParams(BaseModel):
    """TVB detector and CV-wise SWENO limiter settings."""

    mode: Literal["cvmsweno", "full", "off"] = "cvmsweno"
    tvb_m: float = Field(0.01, alias="M", description="TVB constant M")
    epsilon: float = Field(1e-6, description="Regularizer in tau / (beta + epsilon)")
    linear_weights_1d: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    linear_weights_2d: Tuple[float, float, float, float, float] = (0.8, 0.05, 0.05, 0.05, 0.05)
    characteristic: Optional[bool] = Field(
        None, description="Limit in characteristic variables; None means on for Euler, off otherwise"
    )
    limit_every_stage: bool = True

    model_config = {"populate_by_name": True}

    @field_validator("mode", mode="before")
    @classmethod
    def normalize_mode(cls, v):
        if isinstance(v, str) and v.lower() in ("full-limit", "full_limit"):
            return "full"
        return v

    @field_validator("tvb_m")
    @classmethod
    def validate_m(cls, v: float) -> float:
        if v < 0:
            raise ValueError(f"TVB constant M must be >= 0, got {v}")
        return v

    @field_validator("epsilon")
    @classmethod
    def validate_epsilon(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"epsilon must be > 0, got {v}")
        return v

    @field_validator("linear_weights_1d", "linear_weights_2d")
    @classmethod
    def validate_weights(cls, v):
        if any(w <= 0 for w in v):
            raise ValueError(f"Linear weights must be positive, got {v}")
        if abs(math.fsum(v) - 1.0) > 1e-15:
            raise ValueError(f"Linear weights must sum to 1, got {v} (sum {math.fsum(v)!r})")
        return v

    def use_characteristic(self, model: ModelDescriptor) -> bool:
        if self.characteristic is None:
            return model.kind == "euler"
        return self.characteristic


class BoundaryCondition(BaseModel):
    """One side of the domain.

    ``prescribed`` sides take either a constant conserved ``state`` or the name
    of a registered time-dependent ``profile`` (see :mod:`svweno.problems`).
    """

    kind: Literal["periodic", "reflective", "outflow", "prescribed"] = "periodic"
    state: Optional[List[float]] = None
    profile: Optional[str] = None

    @model_validator(mode="after")
    def check_prescribed(self) -> "BoundaryCondition":
        if self.kind == "prescribed" and self.state is None and self.profile is None:
            raise ValueError("A prescribed boundary needs a 'state' or a 'profile'")
        return self


class BoundarySpec(BaseModel):
    """Per-side boundary conditions; ``bottom``/``top`` are used in 2D only."""

    left: BoundaryCondition = Field(default_factory=BoundaryCondition)
    right: BoundaryCondition = Field(default_factory=BoundaryCondition)
    bottom: BoundaryCondition = Field(default_factory=BoundaryCondition)
    top: BoundaryCondition = Field(default_factory=BoundaryCondition)

    @model_validator(mode="after")
    def check_periodic_pairs(self) -> "BoundarySpec":
        for a, b, axis in ((self.left, self.right, "x"), (self.bottom, self.top, "y")):
            if (a.kind == "periodic") != (b.kind == "periodic"):
                raise ValueError(f"Periodic boundaries must be paired on both {axis}-sides")
        return self

    @classmethod
    def uniform(cls, kind: str) -> "BoundarySpec":
        side = BoundaryCondition(kind=kind)
        return cls(left=side, right=side, bottom=side, top=side)


class ProblemConfig(BaseModel):
    """Everything needed to reproduce one run; fully deterministic (no RNG)."""

    name: str = "custom"
    model: ModelDescriptor = Field(default_factory=ModelDescriptor)
    initial_condition: str = Field("sine_wave", description="Registered initial-condition name")
    domain: List[float] = Field(default_factory=lambda: [-1.0, 1.0])
    n_sv: int = Field(100, description="SV count (x-direction in 2D)")
    n_sv_y: Optional[int] = None
    order: int = 3
    t_final: float = 1.0
    cfl: float = 0.5
    limiter: LimiterParams = Field(default_factory=LimiterParams)
    boundary: BoundarySpec = Field(default_factory=BoundarySpec)
    flux_dissipation: Literal["local", "global"] = "local"
    quadrature_points: Optional[int] = Field(None, description="Gauss points per face; None means k")
    dt_max: Optional[float] = None
    log_every: int = 50
    reference: Literal["exact", "riemann", "fine-grid", "none"] = "none"
    output_dir: Optional[str] = None
    notes: List[str] = Field(default_factory=list)

    @field_validator("order")
    @classmethod
    def validate_order(cls, v: int) -> int:
        if not MIN_ORDER <= v <= MAX_ORDER:
            raise ValueError(f"order must be in {MIN_ORDER}..{MAX_ORDER}, got {v}")
        return v

    @field_validator("n_sv", "n_sv_y", "log_every")
    @classmethod
    def validate_positive_int(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v

    @field_validator("t_final", "cfl")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"must be > 0, got {v}")
        return v

    @model_validator(mode="after")
    def check_domain(self) -> "ProblemConfig":
        expected = 2 * self.model.dim
        if len(self.domain) != expected:
            raise ValueError(f"{self.model.dim}D domain needs {expected} bounds, got {self.domain}")
        for lo, hi in zip(self.domain[::2], self.domain[1::2]):
            if not hi > lo:
                raise ValueError(f"Invalid domain bounds {self.domain}")
        return self

    @property
    def ny(self) -> int:
        return self.n_sv_y if self.n_sv_y is not None else self.n_sv

    @classmethod
    def from_file(cls, path) -> "ProblemConfig":
        """Load a JSON problem file (full config or preset with overrides)."""
        from .config import load_problem_file

        return load_problem_file(path)


class StepRecord(BaseModel):
    """One accepted time step."""

    step: int
    t: float
    dt: float
    troubled_percent: float
    clipped: bool = False


class RunLog(BaseModel):
    """Per-step history of a run."""

    problem: str
    order: int
    n_cv: int
    steps: List[StepRecord] = Field(default_factory=list)
    capped_steps: int = 0

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def final_troubled_percent(self) -> float:
        return self.steps[-1].troubled_percent if self.steps else 0.0

    @property
    def mean_troubled_percent(self) -> float:
        if not self.steps:
            return 0.0
        return math.fsum(s.troubled_percent for s in self.steps) / len(self.steps)


class ConvergenceRow(BaseModel):
    """One grid of a convergence study; rates are None on the first row."""

    n_sv: int
    l1: Optional[float] = None
    r1: Optional[float] = None
    l2: Optional[float] = None
    r2: Optional[float] = None
    linf: Optional[float] = None
    rinf: Optional[float] = None
    troubled_percent: Optional[float] = None
    rate_kind: Literal["log2", "generalized", "none"] = "none"
    failed: bool = False
    error: Optional[str] = None


class ConvergenceReport(BaseModel):
    """Error/rate table for one preset and order."""

    preset: str
    order: int
    tvb_m: float
    epsilon: float
    limiter_mode: str
    rows: List[ConvergenceRow] = Field(default_factory=list)
