"""The three benchmark configurations, in SI units unless marked dimensionless."""
from __future__ import annotations

import enum

from .activeset import PdasConfig
from .fem import ElementFamily
from .laws import ConstantSpeed, OscillatingThickness, SinusoidalThickness
from .mesh import BoundaryTag
from .simulation import CaseConfig, MeshSpec

MM = 1e-3
MPA = 1e6

# sinusoidal bearing constants
H_AV = 0.02 * MM
DELTA_H = 0.005 * MM
LENGTH = 125 * MM
SPEED = 4.0
VISCOSITY = 0.015
SUPPLY_PRESSURE = 1 * MPA

ALL_PRESSURED = {BoundaryTag.INLET: SUPPLY_PRESSURE, BoundaryTag.OUTLET: SUPPLY_PRESSURE,
                 BoundaryTag.OTHER: SUPPLY_PRESSURE}


class BenchmarkId(enum.Enum):
    SINUSOIDAL_1D = "sinusoidal_1d"
    SQUEEZE_1D = "squeeze_1d"
    SINUSOIDAL_2D = "sinusoidal_2d"


def sinusoidal_1d(n=1000, tau=1e-4, family=ElementFamily.RT0_P0) -> CaseConfig:
    half = LENGTH / 2
    return CaseConfig(
        name=BenchmarkId.SINUSOIDAL_1D.value,
        mesh=MeshSpec(1, (-half,), (half,), (int(n),)),
        viscosity=VISCOSITY,
        thickness=SinusoidalThickness(H_AV, DELTA_H, LENGTH),
        speed=ConstantSpeed(SPEED),
        boundary_pressure={BoundaryTag.INLET: SUPPLY_PRESSURE, BoundaryTag.OUTLET: SUPPLY_PRESSURE},
        tau=tau,
        t0=0.0,
        t_end=1.0,
        family=ElementFamily(family),
        theta0=1.0,
        steady_tol=1e-12,
        max_steps=20000,
        units="SI",
    )


def squeeze_1d(n=450, steps=3000, t_end=0.5, family=ElementFamily.RT0_P0) -> CaseConfig:
    """Pure squeeze between parallel plates, dimensionless.

    The viscosity is set to 1/12 so that the flux coefficient is ``tau h^3``.
    """
    return CaseConfig(
        name=BenchmarkId.SQUEEZE_1D.value,
        mesh=MeshSpec(1, (0.0,), (1.0,), (int(n),)),
        viscosity=1.0 / 12.0,
        thickness=OscillatingThickness(0.375, 0.125, 2.0),
        speed=ConstantSpeed(0.0),
        boundary_pressure={BoundaryTag.INLET: 0.025, BoundaryTag.OUTLET: 0.025},
        tau=t_end / steps,
        t0=0.0,
        t_end=t_end,
        family=ElementFamily(family),
        theta0=1.0,
        steady_tol=1e-12,
        max_steps=int(steps),
        units="dimensionless",
    )


def sinusoidal_2d(nx=100, ny=None, tau=1e-4, family=ElementFamily.RT0_P0) -> CaseConfig:
    ny = nx if ny is None else ny
    half = LENGTH / 2
    return CaseConfig(
        name=BenchmarkId.SINUSOIDAL_2D.value,
        mesh=MeshSpec(2, (-half, -half), (half, half), (int(nx), int(ny))),
        viscosity=VISCOSITY,
        thickness=SinusoidalThickness(H_AV, DELTA_H, LENGTH),
        speed=ConstantSpeed(SPEED),
        boundary_pressure=dict(ALL_PRESSURED),
        tau=tau,
        t0=0.0,
        t_end=1.0,
        family=ElementFamily(family),
        theta0=1.0,
        steady_tol=1e-12,
        max_steps=20000,
        units="SI",
    )


CONSTRUCTORS = {
    BenchmarkId.SINUSOIDAL_1D: sinusoidal_1d,
    BenchmarkId.SQUEEZE_1D: squeeze_1d,
    BenchmarkId.SINUSOIDAL_2D: sinusoidal_2d,
}


def benchmark(case) -> CaseConfig:
    return CONSTRUCTORS[BenchmarkId(case)]()
