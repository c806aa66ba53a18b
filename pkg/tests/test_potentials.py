import math

import numpy as np
import pytest

from viscowave.errors import AccuracyError, UsageError
from viscowave.fields import GridSpec, SampledFunction
from viscowave.kernel import KernelChannel, ModelParams
from viscowave.potentials import (
    ABEL_PANEL,
    GridPotentials,
    PotentialConfig,
    initial_limits,
    linear_solve,
    surface_potential,
    surface_potential_rate,
    surface_potential_star,
    truncation_window,
    volume_potential,
)


@pytest.fixture
def params():
    """epsilon = 1, a = 1, b = 2."""
    return ModelParams(epsilon=1.0, c=math.sqrt(2.0), a=1.0)


@pytest.fixture
def grid():
    return GridSpec(x_min=-2.0, x_max=2.0, nx=41, T=1.0, nt=10)


def sampled(spec: str) -> SampledFunction:
    return SampledFunction.from_spec(spec, -30.0, 30.0, 0.01)


def mass(t: float, a: float = 1.0) -> float:
    return -math.expm1(-a * t) / a


def test_surface_potential_of_zero(params):
    assert surface_potential(sampled("zero"), 0.3, 0.5, params) == 0.0


def test_surface_potential_of_constant(params):
    value = surface_potential(sampled("constant(1)"), 0.0, 1.0, params)
    assert value == pytest.approx(0.6321206, abs=1e-6)


def test_surface_potential_vectorized(params):
    x = np.array([-1.0, 0.0, 1.0])
    values = surface_potential(sampled("constant(2)"), x, 0.5, params)
    assert values.shape == (3,)
    assert np.allclose(values, 2.0 * mass(0.5), atol=1e-6)


def test_surface_potential_linearity(params):
    g1, g2 = sampled("gaussian(0, 1)"), sampled("sine(1)")
    combined = SampledFunction.from_spec(
        "2 * exp(-x^2 / 2) - 3 * sin(x)", -30.0, 30.0, 0.01
    )
    x = np.array([-0.5, 0.0, 0.7])
    expected = 2.0 * surface_potential(g1, x, 0.5, params) - 3.0 * surface_potential(
        g2, x, 0.5, params
    )
    assert np.allclose(surface_potential(combined, x, 0.5, params), expected, atol=1e-8)


def test_surface_potential_translation(params):
    g = sampled("gaussian(0, 1)")
    shifted = sampled("gaussian(0.5, 1)")
    assert surface_potential(shifted, 0.8, 0.5, params) == pytest.approx(
        surface_potential(g, 0.3, 0.5, params), abs=1e-7
    )


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_star_potential_of_constant(params, t):
    assert surface_potential_star(sampled("constant(1)"), 0.0, t, params) == (
        pytest.approx(1.0, abs=1e-6)
    )


def test_star_potential_of_zero(params):
    assert surface_potential_star(sampled("zero"), 0.0, 0.5, params) == 0.0


def test_surface_rate_of_constant(params):
    value = surface_potential_rate(sampled("constant(1)"), 0.0, 0.5, params)
    assert value == pytest.approx(math.exp(-0.5), abs=1e-6)


def test_potentials_need_positive_time(params):
    with pytest.raises(UsageError, match="t > 0"):
        surface_potential(sampled("zero"), 0.0, 0.0, params)
    with pytest.raises(UsageError, match="t > 0"):
        volume_potential(lambda x, t: np.zeros_like(x), 0.0, 0.0, params)


def test_initial_limits_decrease(params):
    g = sampled("gaussian(0, 1)")
    x = np.linspace(-1.0, 1.0, 5)
    errors = initial_limits(g, x, [1e-2, 1e-3, 1e-4], params)
    for name in ("surface", "surface_rate", "star", "star_rate"):
        values = [getattr(e, name) for e in errors]
        assert values[0] > values[1] > values[2], name
        assert values[2] <= 1e-3, name


def test_volume_potential_of_constant(params):
    value = volume_potential(lambda x, t: np.ones_like(x), 0.0, 1.0, params)
    assert value == pytest.approx(0.3678794, abs=1e-6)


def test_volume_potential_bound(params):
    rng = np.random.default_rng(7)
    amplitude, k, omega = rng.uniform(0.5, 2.0, 3)

    def source(x, t):
        return amplitude * np.sin(k * x + omega * t)

    t = 0.8
    values = volume_potential(source, np.linspace(-1.0, 1.0, 7), t, params)
    assert np.all(np.abs(values) <= t * amplitude / params.a)


def test_truncated_kernel_is_rejected(params):
    with pytest.raises(AccuracyError, match="Kernel mass"):
        surface_potential(
            sampled("constant(1)"), 0.0, 1.0, params, PotentialConfig(cutoff=0.5)
        )


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"cutoff": -1.0}, "cutoff"),
        ({"time_nodes_per_unit": 0}, "densities"),
        ({"max_spacing": 0.0}, "max_spacing"),
    ],
)
def test_potential_config_validation(kwargs, match):
    with pytest.raises(ValueError, match=match):
        PotentialConfig(**kwargs)


def test_truncation_window(params):
    grid = GridSpec(x_min=-4.0, x_max=4.0, nx=81, T=1.0, nt=10)
    expected = 4.0 + math.sqrt(2.0) + 10.0
    assert truncation_window(grid, params) == pytest.approx(expected)


def test_grid_potentials_pad_and_cache(params, grid):
    potentials = GridPotentials(params, grid)
    assert potentials.pad * grid.dx >= params.c * grid.T + 10.0 * math.sqrt(grid.T)
    assert potentials.x[potentials.interior][0] == pytest.approx(grid.x_min)
    first = potentials.slice(KernelChannel.K, 3)
    assert potentials.slice(KernelChannel.K, 3) is first
    flat = np.ones_like(potentials.x)
    assert np.allclose(potentials.convolve(KernelChannel.K, 0, flat), 0.0)


def test_volume_level_sums_over_split_ranges(params, grid):
    potentials = GridPotentials(params, grid)
    rng = np.random.default_rng(5)
    sources = rng.normal(size=(potentials.t.size, potentials.x.size))
    level = 7
    whole = potentials.volume_level(level, sources)
    head = potentials.volume_level(level, sources, stop=4)
    tail = potentials.volume_level(level, sources, start=4)
    for full, first, second in zip(whole, head, tail, strict=True):
        assert np.allclose(full, first + second, atol=1e-14)


def test_volume_level_time_order(params):
    # u_f for f = 1 is t / a - (1 - exp(-a t)) / a^2
    exact = 1.0 - mass(1.0)
    errors = []
    for nt in (20, 40, 80):
        grid = GridSpec(x_min=-1.0, x_max=1.0, nx=5, T=1.0, nt=nt)
        potentials = GridPotentials(params, grid)
        sources = np.ones((potentials.t.size, potentials.x.size))
        u, _ = potentials.volume_level(nt, sources)
        errors.append(float(np.max(np.abs(u[potentials.interior] - exact))))
    orders = [math.log2(c / f) for c, f in zip(errors, errors[1:], strict=False)]
    assert all(order > 1.7 for order in orders)


def test_time_weight_last_panel(params, grid):
    potentials = GridPotentials(params, grid)
    dt = grid.dt
    assert potentials.time_weight(1, 0) == pytest.approx(0.5 * dt)
    lags = np.array([4.0, 3.0, 2.0, 1.0]) * dt
    weights = np.array([potentials.time_weight(4, m) for m in range(4)])
    assert weights.sum() == pytest.approx((3.5 + ABEL_PANEL) * dt)
    # the last-panel correction annihilates integrands linear in the lag
    assert weights @ lags == pytest.approx(0.5 * (4.0 * dt) ** 2)


def test_linear_solve_zero(params, grid):
    field = linear_solve(None, sampled("zero"), sampled("zero"), grid, params)
    assert field.u.shape == (grid.nt + 1, grid.nx)
    assert np.all(field.u == 0.0)
    assert np.all(field.ux == 0.0)


def test_linear_solve_unit_velocity(params, grid):
    field = linear_solve(None, sampled("zero"), sampled("constant(1)"), grid, params)
    expected = np.array([mass(t) for t in grid.t])
    assert np.allclose(field.u, expected[:, None], atol=1e-8)
    assert np.allclose(field.ux, 0.0, atol=1e-8)


def test_linear_solve_constant_displacement(params, grid):
    field = linear_solve(None, sampled("constant(1)"), sampled("zero"), grid, params)
    assert np.allclose(field.u, 1.0, atol=1e-8)


def test_linear_solve_constant_source(params, grid):
    kappa = 0.5
    field = linear_solve(
        lambda x, t: np.full_like(x, kappa),
        sampled("zero"),
        sampled("zero"),
        grid,
        params,
    )
    expected = np.array([-kappa * (t - mass(t)) for t in grid.t])
    assert np.allclose(field.u, expected[:, None], atol=1e-3)


def test_linear_solve_matches_pointwise_star(params, grid):
    f0 = sampled("gaussian(0, 1)")
    field = linear_solve(None, f0, sampled("zero"), grid, params)
    x = np.array([-1.0, 0.0, 1.0])
    pointwise = surface_potential_star(f0, x, 0.5, params)
    level = round(0.5 / grid.dt)
    columns = [int(np.argmin(np.abs(grid.x - xi))) for xi in x]
    assert np.allclose(field.u[level, columns], pointwise, atol=1e-3)
    assert field.derivative_consistency() < 1e-2


def test_linear_solve_rejects_bad_source(params, grid):
    with pytest.raises(UsageError, match="non-finite"):
        linear_solve(
            lambda x, t: np.full_like(x, np.nan),
            sampled("zero"),
            sampled("zero"),
            grid,
            params,
        )
