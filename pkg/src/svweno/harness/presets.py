"""Benchmark problem registry.

Every preset is a factory returning a fresh :class:`ProblemConfig` with the
benchmark's domain, initial and boundary conditions, final time and grid
size. Keyword overrides are applied through pydantic validation, so a bad
override fails the same way a bad config file does.
"""

import logging
from typing import Any, Callable, Dict, List, Tuple

from pydantic import ValidationError

from ..errors import ConfigurationError
from ..models import BoundaryCondition, BoundarySpec, LimiterParams, ModelDescriptor, ProblemConfig
from ..problems import DOUBLE_MACH_LEFT, DOUBLE_MACH_RIGHT

logger = logging.getLogger(__name__)


def _advection1d() -> ProblemConfig:
    return ProblemConfig(
        name="advection1d",
        model=ModelDescriptor(kind="advection", dim=1, velocity=(1.0, 0.0)),
        initial_condition="sine_wave",
        domain=[-1.0, 1.0],
        n_sv=100,
        t_final=1.0,
        boundary=BoundarySpec.uniform("periodic"),
        reference="exact",
    )


def _advection2d() -> ProblemConfig:
    return ProblemConfig(
        name="advection2d",
        model=ModelDescriptor(kind="advection", dim=2, velocity=(1.0, 1.0)),
        initial_condition="sine_wave",
        domain=[-1.0, 1.0, -1.0, 1.0],
        n_sv=20,
        t_final=1.0,
        boundary=BoundarySpec.uniform("periodic"),
        reference="exact",
    )


def _euler_sine1d() -> ProblemConfig:
    return ProblemConfig(
        name="euler_sine1d",
        model=ModelDescriptor(kind="euler", dim=1),
        initial_condition="euler_sine",
        domain=[0.0, 2.0],
        n_sv=100,
        t_final=2.0,
        boundary=BoundarySpec.uniform("periodic"),
        reference="exact",
    )


def _shock_tube(name: str, ic: str, t_final: float) -> ProblemConfig:
    return ProblemConfig(
        name=name,
        model=ModelDescriptor(kind="euler", dim=1),
        initial_condition=ic,
        domain=[-5.0, 5.0],
        n_sv=100,
        t_final=t_final,
        boundary=BoundarySpec.uniform("outflow"),
        reference="riemann",
    )


def _sod1d() -> ProblemConfig:
    return _shock_tube("sod1d", "sod", 2.0)


def _lax1d() -> ProblemConfig:
    return _shock_tube("lax1d", "lax", 1.3)


def _shuosher() -> ProblemConfig:
    return ProblemConfig(
        name="shuosher",
        model=ModelDescriptor(kind="euler", dim=1),
        initial_condition="shu_osher",
        domain=[-5.0, 5.0],
        n_sv=180,
        t_final=1.8,
        boundary=BoundarySpec.uniform("outflow"),
        reference="fine-grid",
    )


def _blast1d() -> ProblemConfig:
    return ProblemConfig(
        name="blast1d",
        model=ModelDescriptor(kind="euler", dim=1),
        initial_condition="blast",
        domain=[0.0, 1.0],
        n_sv=400,
        t_final=0.038,
        boundary=BoundarySpec.uniform("reflective"),
        reference="fine-grid",
    )


def _riemann2d(name: str, ic: str, t_final: float, notes: List[str]) -> ProblemConfig:
    return ProblemConfig(
        name=name,
        model=ModelDescriptor(kind="euler", dim=2),
        initial_condition=ic,
        domain=[0.0, 1.0, 0.0, 1.0],
        n_sv=100,
        t_final=t_final,
        boundary=BoundarySpec.uniform("outflow"),
        notes=notes,
    )


def _riemann2d_1() -> ProblemConfig:
    return _riemann2d("riemann2d_1", "riemann2d_1", 0.25, [])


def _riemann2d_2() -> ProblemConfig:
    return _riemann2d("riemann2d_2", "riemann2d_2", 0.2, [
        "Final time 0.2 follows the problem statement; some published figure labels suggest a "
        "different output time.",
    ])


def _double_mach() -> ProblemConfig:
    return ProblemConfig(
        name="double_mach",
        model=ModelDescriptor(kind="euler", dim=2),
        initial_condition="double_mach",
        domain=[0.0, 4.0, 0.0, 1.0],
        n_sv=960,
        n_sv_y=240,
        t_final=0.2,
        boundary=BoundarySpec(
            left=BoundaryCondition(kind="prescribed", state=list(DOUBLE_MACH_LEFT)),
            right=BoundaryCondition(kind="prescribed", state=list(DOUBLE_MACH_RIGHT)),
            bottom=BoundaryCondition(kind="prescribed", profile="double_mach_bottom"),
            top=BoundaryCondition(kind="prescribed", profile="double_mach_top"),
        ),
    )


# Ordered name -> (factory, one-line description); insertion order is the listing order.
_REGISTRY: Dict[str, Tuple[Callable[[], ProblemConfig], str]] = {
    "advection1d": (_advection1d, "u_t + u_x = 0, sin(pi x) on [-1, 1], periodic, t = 1"),
    "advection2d": (_advection2d, "u_t + u_x + u_y = 0, sin(pi (x + y)) on [-1, 1]^2, periodic, t = 1"),
    "euler_sine1d": (_euler_sine1d, "Euler density sine wave on [0, 2], periodic, t = 2"),
    "sod1d": (_sod1d, "Sod shock tube on [-5, 5], t = 2"),
    "lax1d": (_lax1d, "Lax shock tube on [-5, 5], t = 1.3"),
    "shuosher": (_shuosher, "Mach 3 shock / entropy wave interaction on [-5, 5], t = 1.8"),
    "blast1d": (_blast1d, "Interacting blast waves on [0, 1], reflective walls, t = 0.038"),
    "riemann2d_1": (_riemann2d_1, "2D four-quadrant Riemann problem I on [0, 1]^2, t = 0.25"),
    "riemann2d_2": (_riemann2d_2, "2D four-quadrant Riemann problem II on [0, 1]^2, t = 0.2"),
    "double_mach": (_double_mach, "Double Mach reflection on [0, 4] x [0, 1], t = 0.2"),
}


def preset_names() -> List[str]:
    return list(_REGISTRY.keys())


def describe_presets() -> List[Tuple[str, str]]:
    return [(name, description) for name, (_, description) in _REGISTRY.items()]


def preset(name: str, **overrides: Any) -> ProblemConfig:
    """Build the named preset, applying top-level field ``overrides``.

    ``limiter`` overrides may be a dict merged into the preset's limiter
    settings.
    """
    entry = _REGISTRY.get(name)
    if entry is None:
        raise ConfigurationError(
            f"Unknown preset: {name}. Available presets: {', '.join(_REGISTRY)}"
        )
    factory, _ = entry
    config = factory()
    if not overrides:
        return config
    data = config.model_dump(by_alias=False)
    limiter = overrides.pop("limiter", None)
    if isinstance(limiter, LimiterParams):
        limiter = limiter.model_dump()
    if limiter:
        data["limiter"].update(limiter)
    data.update(overrides)
    try:
        return ProblemConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid override for preset '{name}': {e}") from e
