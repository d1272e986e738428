"""Run configuration: problem files, environment settings and CLI overrides."""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigurationError
from .models import ProblemConfig

logger = logging.getLogger(__name__)

CONFIG_FILE_ENV = "SVWENO_CONFIG_FILE"
OUT_DIR_ENV = "SVWENO_OUT_DIR"
LOG_LEVEL_ENV = "SVWENO_LOG_LEVEL"
WORKERS_ENV = "SVWENO_WORKERS"

DEFAULT_PRESET = "advection1d"


class EnvironmentSettings(BaseModel):
    """Process-wide knobs read from the environment (and ``.env``)."""

    output_dir: str = Field("results", description="Default output directory")
    log_level: str = Field("INFO", description="Root logging level")
    workers: int = Field(1, description="Concurrent convergence rows")

    @field_validator("log_level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        v = v.strip().upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level '{v}'")
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"workers must be >= 1, got {v}")
        return v

    @classmethod
    def from_env(cls) -> "EnvironmentSettings":
        data: Dict[str, Any] = {}
        for key, env in (("output_dir", OUT_DIR_ENV), ("log_level", LOG_LEVEL_ENV), ("workers", WORKERS_ENV)):
            value = os.getenv(env)
            if value:
                data[key] = value
        try:
            return cls(**data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid SVWENO_* environment setting: {e}") from e


def problem_from_dict(data: Dict[str, Any], source: str = "config") -> ProblemConfig:
    """Validate a problem mapping.

    A ``"preset"`` key starts from that preset and treats the remaining keys
    as overrides. Keys starting with ``_`` are comments and are ignored.
    """
    data = {k: v for k, v in data.items() if not k.startswith("_")}
    name = data.pop("preset", None)
    try:
        if name is not None:
            from .harness.presets import preset

            return preset(name, **data)
        return ProblemConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid problem in {source}: {e}") from e


def load_problem_file(path: Union[str, Path]) -> ProblemConfig:
    """Load a problem from a JSON file.

    Expected format, either a full problem::

        {"name": "my-sod", "model": {"kind": "euler", "dim": 1}, "initial_condition": "sod", ...}

    or a preset with overrides::

        {"preset": "sod1d", "order": 4, "limiter": {"tvb_m": 20}}
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Invalid JSON in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a JSON object")
    problem = problem_from_dict(data, source=str(path))
    logger.info(f"Loaded problem '{problem.name}' from {path}")
    return problem


def load_problem(config_path: Optional[Union[str, Path]] = None,
                 preset_name: Optional[str] = None) -> ProblemConfig:
    """Resolve the base problem.

    Priority:
    1. Explicit config_path argument
    2. SVWENO_CONFIG_FILE env var
    3. Preset name (default advection1d)
    """
    if config_path:
        logger.info(f"Loading problem from: {config_path}")
        return load_problem_file(config_path)

    config_file_env = os.getenv(CONFIG_FILE_ENV)
    if config_file_env:
        logger.info(f"Loading problem from {CONFIG_FILE_ENV}: {config_file_env}")
        return load_problem_file(config_file_env)

    from .harness.presets import preset

    return preset(preset_name or DEFAULT_PRESET)


def apply_overrides(problem: ProblemConfig, overrides: Dict[str, Any],
                    limiter: Optional[Dict[str, Any]] = None) -> ProblemConfig:
    """Return a copy of ``problem`` with CLI-level overrides; ``None`` values are skipped."""
    top = {k: v for k, v in overrides.items() if v is not None}
    lim = {k: v for k, v in (limiter or {}).items() if v is not None}
    if not top and not lim:
        return problem
    data = problem.model_dump()
    data["limiter"].update(lim)
    data.update(top)
    try:
        updated = ProblemConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid command-line override: {e}") from e
    logger.debug(f"Applied overrides {top} limiter {lim} to '{problem.name}'")
    return updated
