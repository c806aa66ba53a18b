"""Finite-difference reference solver.

Method of lines for the first-order system

    u_t = v,    v_t = eps v_xx + c^2 u_xx - a v - F(x, t, u, u_x)

with second-order central stencils in x and classical RK4 in time. Nothing
here touches the kernel or potential code, so agreement between the two
pipelines is an independent check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

from viscowave.errors import CertificationError, DivergenceError, UsageError
from viscowave.fields import SpaceTimeField
from viscowave.picard import Problem

logger = logging.getLogger(__name__)

STABILITY_FACTOR = 0.5
BLOW_UP = 1e6


class Boundary(str, Enum):
    FROZEN_FARFIELD = "frozen-farfield"
    HOMOGENEOUS_NEUMANN = "homogeneous-neumann"


class Integrator(str, Enum):
    RK4 = "rk4"


@dataclass(frozen=True)
class FdConfig:
    dx: float = 0.05
    dt: float | None = None
    half_width: float | None = None
    boundary: Boundary = Boundary.FROZEN_FARFIELD
    integrator: Integrator = Integrator.RK4
    levels: int = 3

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        if self.dx <= 0:
            raise UsageError("dx must be positive.")
        if self.dt is not None and self.dt <= 0:
            raise UsageError("dt must be positive.")
        if self.half_width is not None and self.half_width <= 0:
            raise UsageError("half_width must be positive.")
        if self.levels < 2:
            raise UsageError("Certification needs at least two refinement levels.")

    def refined(self, level: int) -> FdConfig:
        """Configuration with dx / 2^level and dt / 4^level."""
        return FdConfig(
            dx=self.dx / 2**level,
            dt=None if self.dt is None else self.dt / 4**level,
            half_width=self.half_width,
            boundary=self.boundary,
            integrator=self.integrator,
            levels=self.levels,
        )


@dataclass(frozen=True, eq=False)
class OracleCertificate:
    field: SpaceTimeField
    band: np.ndarray
    ux_band: np.ndarray
    differences: list[float]
    observed_order: float | None

    @property
    def max_band(self) -> float:
        return float(np.max(self.band))


def stable_step(dx: float, problem: Problem) -> float:
    params = problem.params
    return STABILITY_FACTOR * min(dx**2 / (2.0 * params.epsilon), dx / params.c)


def required_half_width(problem: Problem) -> float:
    grid, params = problem.grid, problem.params
    return (
        max(abs(grid.x_min), abs(grid.x_max))
        + params.c * grid.T
        + 10.0 * math.sqrt(params.epsilon * grid.T)
    )


def _first_derivative(u: np.ndarray, dx: float) -> np.ndarray:
    ux = np.gradient(u, dx, edge_order=2)
    ux[2:-2] = (u[:-4] - 8.0 * u[1:-3] + 8.0 * u[3:-1] - u[4:]) / (12.0 * dx)
    return ux


def _second_derivative(u: np.ndarray, dx: float, boundary: Boundary) -> np.ndarray:
    uxx = np.zeros_like(u)
    uxx[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / dx**2
    if boundary is Boundary.HOMOGENEOUS_NEUMANN:
        # mirror ghosts u[-1] = u[1]
        uxx[0] = 2.0 * (u[1] - u[0]) / dx**2
        uxx[-1] = 2.0 * (u[-2] - u[-1]) / dx**2
    return uxx


def fd_solve(problem: Problem, config: FdConfig | None = None) -> SpaceTimeField:
    """Solve on [-X, X] and sample both channels onto the problem grid."""
    config = config or FdConfig()
    params, grid = problem.params, problem.grid
    limit = stable_step(config.dx, problem)
    dt = config.dt if config.dt is not None else limit
    if dt > limit * (1.0 + 1e-12):
        raise UsageError(
            f"dt={dt:g} violates the stability limit {limit:g} for dx={config.dx:g}."
        )
    needed = required_half_width(problem)
    half_width = config.half_width if config.half_width is not None else needed
    if half_width < needed * (1.0 - 1e-12):
        raise UsageError(
            f"Domain half-width {half_width:g} is below "
            f"the truncation window {needed:g}."
        )
    n = math.ceil(half_width / config.dx)
    x = np.arange(-n, n + 1) * config.dx
    boundary = config.boundary
    eps, c2, a = params.epsilon, params.c**2, params.a

    def rhs(t: float, state: np.ndarray) -> np.ndarray:
        u, v = state
        ux = _first_derivative(u, config.dx)
        if boundary is Boundary.FROZEN_FARFIELD:
            ux[0] = ux[-1] = 0.0
        forcing = problem.rhs(x, t, u, ux)
        dv = (
            eps * _second_derivative(v, config.dx, boundary)
            + c2 * _second_derivative(u, config.dx, boundary)
            - a * v
            - forcing
        )
        return np.stack([v, dv])

    state = np.stack([problem.f0(x), problem.f1(x)])
    out_u = np.empty((grid.nt + 1, grid.nx))
    out_ux = np.empty_like(out_u)

    def record(level: int) -> None:
        u = state[0]
        out_u[level] = CubicSpline(x, u)(grid.x)
        out_ux[level] = CubicSpline(x, _first_derivative(u, config.dx))(grid.x)

    record(0)
    substeps = max(1, math.ceil(grid.dt / dt * (1.0 - 1e-12)))
    h = grid.dt / substeps
    t = 0.0
    for level in range(1, grid.nt + 1):
        for _ in range(substeps):
            k1 = rhs(t, state)
            k2 = rhs(t + 0.5 * h, state + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, state + 0.5 * h * k2)
            k4 = rhs(t + h, state + h * k3)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        peak = float(np.max(np.abs(state[0])))
        if not math.isfinite(peak) or peak > BLOW_UP:
            raise DivergenceError(
                f"Finite-difference solution blew up at t={t:g} (max |u| = {peak:.3g})."
            )
        record(level)
    logger.debug(
        "fd solve: %d nodes, %d steps of %.3g, boundary %s",
        x.size,
        substeps * grid.nt,
        h,
        boundary.value,
    )
    return SpaceTimeField(x=grid.x, t=grid.t, u=out_u, ux=out_ux)


def certify(problem: Problem, config: FdConfig | None = None) -> OracleCertificate:
    """Refinement study over ``config.levels`` halvings of dx.

    The band of the finest level is |u_{h/2} - u_{h}| / 3 per node, the
    Richardson estimate for a second-order scheme.
    """
    config = config or FdConfig()
    if config.dt is None:
        config = FdConfig(
            dx=config.dx,
            dt=stable_step(config.dx, problem),
            half_width=config.half_width,
            boundary=config.boundary,
            integrator=config.integrator,
            levels=config.levels,
        )
    fields = [fd_solve(problem, config.refined(k)) for k in range(config.levels)]
    differences = [
        float(np.max(np.abs(fine.u - coarse.u)))
        for coarse, fine in zip(fields, fields[1:], strict=False)
    ]
    observed_order = None
    for k, (coarse, fine) in enumerate(zip(differences, differences[1:], strict=False)):
        if fine > coarse and coarse > 1e-14:
            raise CertificationError(
                f"Refinement is not monotone: difference {fine:.3e} at level {k + 2} "
                f"exceeds {coarse:.3e} at level {k + 1}."
            )
        if fine > 1e-14:
            observed_order = math.log2(coarse / fine)
    band = np.abs(fields[-1].u - fields[-2].u) / 3.0
    ux_band = np.abs(fields[-1].ux - fields[-2].ux) / 3.0
    logger.info(
        "oracle certified: differences %s, observed order %s, band %.3e",
        ", ".join(f"{d:.3e}" for d in differences),
        "n/a" if observed_order is None else f"{observed_order:.3f}",
        float(np.max(band)),
    )
    return OracleCertificate(
        field=fields[-1],
        band=band,
        ux_band=ux_band,
        differences=differences,
        observed_order=observed_order,
    )
