"""Surface, star and volume potentials of the fundamental solution.

Convolutions are direct sums against cell-averaged kernel slices
(``kernel.kernel_slice``); the kernel is precomputed once per time level and
reused for every target point by shifting.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from viscowave.errors import AccuracyError, UsageError
from viscowave.fields import GridSpec, SampledFunction, SpaceTimeField
from viscowave.kernel import (
    KernelChannel,
    ModelParams,
    QuadratureSpec,
    kernel_reach,
    kernel_slice,
)

logger = logging.getLogger(__name__)

SourceFunction = Callable[[np.ndarray, float], np.ndarray]
# last-panel correction 1 / (6 (2 - sqrt 2)) for the sqrt(sigma) term
ABEL_PANEL = 1.0 / (6.0 * (2.0 - math.sqrt(2.0)))


@dataclass(frozen=True)
class PotentialConfig:
    cutoff: float | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    time_nodes_per_unit: int = 40
    max_spacing: float = 0.05
    offsets_per_width: int = 8
    mass_tolerance: float = 1e-6

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff <= 0:
            raise ValueError("cutoff must be positive.")
        if self.time_nodes_per_unit < 1 or self.offsets_per_width < 1:
            raise ValueError("Node densities must be at least 1.")
        if self.max_spacing <= 0 or self.mass_tolerance <= 0:
            raise ValueError("max_spacing and mass_tolerance must be positive.")


class InitialLimitErrors(NamedTuple):
    t: float
    surface: float
    surface_rate: float
    star: float
    star_rate: float


def truncation_window(grid: GridSpec, params: ModelParams) -> float:
    """Half-width covering the output window, the wave cone and diffusion."""
    return (
        max(abs(grid.x_min), abs(grid.x_max))
        + params.c * grid.T
        + 10.0 * math.sqrt(params.epsilon * grid.T)
    )


def _exact_mass(t: float, params: ModelParams) -> float:
    return -math.expm1(-params.a * t) / params.a


def _certify_mass(
    weights: np.ndarray, spacing: float, t: float, params: ModelParams, tol: float
) -> None:
    deficit = abs(float(weights.sum()) * spacing - _exact_mass(t, params))
    if deficit > tol:
        raise AccuracyError(
            f"Kernel mass at t={t:g} misses the exact value by {deficit:.3e}; "
            "widen the truncation window.",
            estimate=deficit,
        )


def _pointwise(
    channel: KernelChannel,
    g: Callable[[np.ndarray], np.ndarray],
    x,
    t: float,
    params: ModelParams,
    config: PotentialConfig,
    spacing: float | None = None,
) -> np.ndarray:
    if t <= 0:
        raise UsageError(f"Potentials are evaluated for t > 0, got t={t!r}.")
    width = math.sqrt(params.epsilon * t)
    spacing = min(spacing or config.max_spacing, width / config.offsets_per_width)
    reach = config.cutoff or kernel_reach(t, params)
    half = max(1, math.ceil(reach / spacing))
    weights = kernel_slice(channel, t, spacing, params, half)
    if channel is KernelChannel.K:
        _certify_mass(weights, spacing, t, params, config.mass_tolerance)
    offsets = np.arange(-half, half + 1) * spacing
    x = np.atleast_1d(np.asarray(x, dtype=float))
    samples = g(x[:, None] - offsets[None, :])
    return (samples @ weights) * spacing


def _data_spacing(g: SampledFunction) -> float:
    return float(g.nodes[1] - g.nodes[0])


def _scalar_or_array(x, values: np.ndarray):
    return float(values[0]) if np.ndim(x) == 0 else values


def surface_potential(
    g: SampledFunction,
    x,
    t: float,
    params: ModelParams,
    config: PotentialConfig | None = None,
):
    """u_g(x, t) = int g(xi) K(x - xi, t) dxi."""
    config = config or PotentialConfig()
    values = _pointwise(KernelChannel.K, g, x, t, params, config, _data_spacing(g))
    return _scalar_or_array(x, values)


def surface_potential_rate(
    g: SampledFunction,
    x,
    t: float,
    params: ModelParams,
    config: PotentialConfig | None = None,
):
    """d/dt u_g, which tends to g as t -> 0+."""
    config = config or PotentialConfig()
    values = _pointwise(KernelChannel.KT, g, x, t, params, config, _data_spacing(g))
    return _scalar_or_array(x, values)


def surface_potential_star(
    g: SampledFunction,
    x,
    t: float,
    params: ModelParams,
    config: PotentialConfig | None = None,
):
    """(dt + a - eps dxx) u_g = exp(-b t) g(x) + int g(xi) M(x - xi, t) dxi.

    M is the pointwise part of (dt + a - eps dxx) K; the exp(-b t) g term is
    what the delta in dxx K contributes.
    """
    config = config or PotentialConfig()
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    values = math.exp(-params.b * t) * g(x_arr) + _pointwise(
        KernelChannel.M, g, x_arr, t, params, config, _data_spacing(g)
    )
    return _scalar_or_array(x, values)


def surface_potential_star_rate(
    g: SampledFunction,
    x,
    t: float,
    params: ModelParams,
    config: PotentialConfig | None = None,
):
    config = config or PotentialConfig()
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    values = -params.b * math.exp(-params.b * t) * g(x_arr) + _pointwise(
        KernelChannel.MT, g, x_arr, t, params, config, _data_spacing(g)
    )
    return _scalar_or_array(x, values)


def initial_limits(
    g: SampledFunction,
    x,
    times: list[float],
    params: ModelParams,
    config: PotentialConfig | None = None,
) -> list[InitialLimitErrors]:
    """Sup-errors of the four t -> 0+ limits of the surface and star potentials.

    u_g -> 0, dt u_g -> g, u*_g -> g and dt u*_g -> 0 on the window ``x``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    target = g(x)
    errors = []
    for t in times:
        errors.append(
            InitialLimitErrors(
                t=t,
                surface=float(
                    np.max(np.abs(surface_potential(g, x, t, params, config)))
                ),
                surface_rate=float(
                    np.max(
                        np.abs(surface_potential_rate(g, x, t, params, config) - target)
                    )
                ),
                star=float(
                    np.max(
                        np.abs(surface_potential_star(g, x, t, params, config) - target)
                    )
                ),
                star_rate=float(
                    np.max(np.abs(surface_potential_star_rate(g, x, t, params, config)))
                ),
            )
        )
        logger.debug("initial limits at t=%g: %s", t, errors[-1])
    return errors


def volume_potential(
    f: SourceFunction,
    x,
    t: float,
    params: ModelParams,
    config: PotentialConfig | None = None,
):
    """u_f(x, t) = int_0^t dtau int f(xi, tau) K(x - xi, t - tau) dxi.

    Gauss-Legendre nodes in the lag sigma = t - tau never touch sigma = 0,
    where the inner convolution vanishes like the kernel mass. The bound
    |u_f| <= t sup|f| / a is enforced on every evaluation.
    """
    config = config or PotentialConfig()
    if t <= 0:
        raise UsageError(f"Potentials are evaluated for t > 0, got t={t!r}.")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    count = max(8, math.ceil(config.time_nodes_per_unit * t))
    nodes, weights = np.polynomial.legendre.leggauss(count)
    lags = 0.5 * t * (nodes + 1.0)
    total = np.zeros_like(x_arr)
    sup = 0.0
    for lag, weight in zip(lags, weights, strict=True):
        tau = t - lag

        def sampled(points, tau=tau):
            values = np.asarray(f(points, tau), dtype=float)
            nonlocal sup
            sup = max(sup, float(np.max(np.abs(values))) if values.size else 0.0)
            return values

        inner = _pointwise(KernelChannel.K, sampled, x_arr, lag, params, config)
        total += 0.5 * t * weight * inner
    bound = t * sup / params.a
    if np.any(np.abs(total) > bound * (1.0 + 1e-9) + 1e-12):
        raise AccuracyError(
            f"Volume potential violates |u_f| <= t ||f|| / a at t={t:g}.",
            estimate=float(np.max(np.abs(total)) - bound),
        )
    return _scalar_or_array(x, total)


class GridPotentials:
    """Potentials on a padded uniform grid.

    The output grid is extended on both sides by the kernel reach over the
    horizon, so values at output nodes never see the artificial edge. Kernel
    slices depend only on the level offset and are cached per channel.
    """

    def __init__(
        self,
        params: ModelParams,
        grid: GridSpec,
        config: PotentialConfig | None = None,
    ):
        self.params = params
        self.output_grid = grid
        self.config = config or PotentialConfig()
        reach = self.config.cutoff or kernel_reach(grid.T, params)
        self.pad = max(1, math.ceil(reach / grid.dx))
        self.grid = grid.padded(self.pad)
        self.x = self.grid.x
        self.t = self.grid.t
        self._slices: dict[tuple[KernelChannel, int], np.ndarray] = {}

    @property
    def interior(self) -> slice:
        return slice(self.pad, self.pad + self.output_grid.nx)

    def slice(self, channel: KernelChannel, level: int) -> np.ndarray:
        key = (KernelChannel(channel), level)
        weights = self._slices.get(key)
        if weights is None:
            t = level * self.grid.dt
            reach = kernel_reach(t, self.params)
            half = min(self.pad, max(1, math.ceil(reach / self.grid.dx)))
            weights = kernel_slice(key[0], t, self.grid.dx, self.params, half)
            if key[0] is KernelChannel.K:
                _certify_mass(
                    weights, self.grid.dx, t, self.params, self.config.mass_tolerance
                )
            self._slices[key] = weights
        return weights

    def convolve(self, channel: KernelChannel, level: int, values) -> np.ndarray:
        if level <= 0:
            return np.zeros_like(self.x)
        weights = self.slice(channel, level)
        half = (weights.size - 1) // 2
        extended = np.pad(np.asarray(values, dtype=float), half, mode="edge")
        return np.convolve(extended, weights, mode="valid") * self.grid.dx

    def data_terms(
        self, f0: SampledFunction, f1: SampledFunction
    ) -> tuple[np.ndarray, np.ndarray]:
        """u_{f1} + u*_{f0} and its x-derivative at every level.

        Returns:
            tuple[np.ndarray, np.ndarray]: (u, ux), each of shape (levels, nodes)
        """
        g0, g0x, g1 = f0(self.x), f0.derivative(self.x), f1(self.x)
        u = np.empty((self.t.size, self.x.size))
        ux = np.empty_like(u)
        u[0], ux[0] = g0, g0x
        for j in range(1, self.t.size):
            decay = math.exp(-self.params.b * self.t[j])
            u[j] = (
                self.convolve(KernelChannel.K, j, g1)
                + decay * g0
                + self.convolve(KernelChannel.M, j, g0)
            )
            ux[j] = (
                self.convolve(KernelChannel.KX, j, g1)
                + decay * g0x
                + self.convolve(KernelChannel.MX, j, g0)
            )
        return u, ux

    def time_weight(self, level: int, m: int) -> float:
        """Weight of source level m in the time integral for target ``level``.

        Trapezoid weights, except that the last panel [t_{j-1}, t_j] is
        integrated exactly for integrands a sqrt(sigma) + b sigma in the lag
        sigma = t_j - tau, fitted through the lags dt and 2 dt. Both terms
        vanish at sigma = 0, where K(., 0) does.
        """
        dt = self.grid.dt
        weight = (0.5 if m == 0 else 1.0) * dt
        if level >= 2:
            if m == level - 1:
                weight += 2.0 * ABEL_PANEL * dt
            elif m == level - 2:
                weight -= ABEL_PANEL * dt
        return weight

    def volume_level(
        self,
        level: int,
        sources: np.ndarray,
        start: int = 0,
        stop: int | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Time integral of K * F and K_x * F over source levels [start, stop).

        Weights come from ``time_weight`` and depend only on (level, m), so
        sums over adjacent level ranges add up to the full integral. The
        tau = t term is absent because K(., 0) vanishes.

        Args:
            level (int): Target time level j
            sources (np.ndarray): Source values F at levels, shape (levels, nodes)
            start (int): First source level included
            stop (int | None): One past the last source level; defaults to j

        Returns:
            tuple[np.ndarray, np.ndarray]: (u_F, d/dx u_F) at level j
        """
        stop = level if stop is None else min(stop, level)
        u = np.zeros_like(self.x)
        ux = np.zeros_like(self.x)
        for m in range(start, stop):
            weight = self.time_weight(level, m)
            u += weight * self.convolve(KernelChannel.K, level - m, sources[m])
            ux += weight * self.convolve(KernelChannel.KX, level - m, sources[m])
        return u, ux

    def field(self, u: np.ndarray, ux: np.ndarray) -> SpaceTimeField:
        return SpaceTimeField(x=self.x, t=self.t, u=u, ux=ux)

    def output(self, u: np.ndarray, ux: np.ndarray) -> SpaceTimeField:
        window = self.interior
        return SpaceTimeField(
            x=self.x[window], t=self.t, u=u[:, window], ux=ux[:, window]
        )


def sample_source(f: SourceFunction | None, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    if f is None:
        return np.zeros((t.size, x.size))
    sources = np.empty((t.size, x.size))
    for j, tj in enumerate(t):
        values = np.broadcast_to(np.asarray(f(x, float(tj)), dtype=float), x.shape)
        sources[j] = values
    if not np.all(np.isfinite(sources)):
        raise UsageError("Source term produced non-finite values on the grid.")
    return sources


def linear_solve(
    f: SourceFunction | None,
    f0: SampledFunction,
    f1: SampledFunction,
    grid: GridSpec,
    params: ModelParams,
    config: PotentialConfig | None = None,
) -> SpaceTimeField:
    """Explicit solution u = -u_f + u_{f1} + (dt + a - eps dxx) u_{f0}.

    With L u_f = -f this u solves L u = f, u(., 0) = f0, u_t(., 0) = f1.
    """
    potentials = GridPotentials(params, grid, config)
    u, ux = potentials.data_terms(f0, f1)
    sources = sample_source(f, potentials.x, potentials.t)
    if np.any(sources):
        for j in range(1, potentials.t.size):
            vu, vux = potentials.volume_level(j, sources)
            u[j] -= vu
            ux[j] -= vux
    logger.info(
        "linear solve on %d x %d padded nodes (pad=%d)",
        potentials.x.size,
        potentials.t.size,
        potentials.pad,
    )
    return potentials.output(u, ux)
