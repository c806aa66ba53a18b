import math

import numpy as np
import pytest

from viscowave.errors import (
    ConvergenceError,
    EvaluationError,
    KernelDomainError,
    ToleranceError,
    UsageError,
)
from viscowave.fields import GridSpec, SampledFunction, SpaceTimeField
from viscowave.kernel import ModelParams
from viscowave.picard import (
    Problem,
    RhsSpec,
    SolveReport,
    SolverConfig,
    continue_solution,
    contraction_window,
    measure_contraction,
    pde_residual,
    picard_map,
    solve_window,
    uniqueness_probe,
)
from viscowave.potentials import linear_solve


@pytest.fixture
def params():
    """epsilon = 1, a = 1, b = 2."""
    return ModelParams(epsilon=1.0, c=math.sqrt(2.0), a=1.0)


@pytest.fixture
def grid():
    return GridSpec(x_min=-2.0, x_max=2.0, nx=41, T=0.5, nt=10)


def data(spec: str) -> SampledFunction:
    return SampledFunction.from_spec(spec, -15.0, 15.0, 0.05)


def make_problem(params, grid, rhs: str, f0: str = "gaussian(0, 1)", f1="zero"):
    return Problem(
        params=params,
        f0=data(f0),
        f1=data(f1),
        rhs=RhsSpec.from_spec(rhs),
        grid=grid,
    )


def zero_field(grid: GridSpec) -> SpaceTimeField:
    shape = (grid.nt + 1, grid.nx)
    return SpaceTimeField(x=grid.x, t=grid.t, u=np.zeros(shape), ux=np.zeros(shape))


def test_contraction_window(params):
    assert contraction_window(params, 1.0, 0.5, 10.0) == pytest.approx(0.25)
    other = ModelParams(epsilon=1.0, c=math.sqrt(2.0), a=0.5)
    expected = 0.5 / (2.0 + 1.0 / math.sqrt(1.5))
    assert contraction_window(other, 1.0, 0.5, 10.0) == pytest.approx(expected)


def test_contraction_window_without_coupling(params):
    assert contraction_window(params, 0.0, 0.5, 3.0) == 3.0


def test_contraction_window_needs_a_below_b():
    degenerate = ModelParams(epsilon=1.0, c=1.0, a=1.0)
    with pytest.raises(KernelDomainError, match="a < b required"):
        contraction_window(degenerate, 1.0, 0.5, 1.0)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"theta": 1.0}, "theta must lie"),
        ({"theta": 0.0}, "theta must lie"),
        ({"tol": 0.0}, "tol must be positive"),
        ({"max_iters": 0}, "max_iters"),
    ],
)
def test_solver_config_validation(kwargs, match):
    with pytest.raises(UsageError, match=match):
        SolverConfig(**kwargs)


@pytest.mark.parametrize(
    "spec, beta, bound, depends",
    [
        ("zero", 0.0, 0.0, False),
        ("source(2)", 0.0, 2.0, False),
        ("sine-gordon", 1.0, 1.0, True),
        (" source( 0.5 ) ", 0.0, 0.5, False),
    ],
)
def test_rhs_presets(spec, beta, bound, depends):
    rhs = RhsSpec.from_spec(spec)
    assert rhs.beta_F == beta
    assert rhs.sup_bound == bound
    assert rhs.depends_on_solution is depends


def test_rhs_cubic_warns():
    with pytest.warns(UserWarning, match="unbounded"):
        rhs = RhsSpec.from_spec("cubic")
    assert rhs.beta_F == pytest.approx(1.125)
    assert rhs(0.0, 0.0, np.array([1.0]), np.array([0.0])) == pytest.approx(0.5)


def test_rhs_expression():
    rhs = RhsSpec.from_spec("sin(u) + 0.1 * p", beta_F=1.1)
    assert rhs.depends_on_solution
    value = rhs(0.0, 0.0, np.array([0.5]), np.array([2.0]))
    assert value == pytest.approx(math.sin(0.5) + 0.2)
    assert not RhsSpec.from_spec("t * exp(-x^2)", beta_F=0.0).depends_on_solution


def test_rhs_expression_needs_beta():
    with pytest.raises(UsageError, match="beta_F must be given"):
        RhsSpec.from_spec("sin(u)")


def test_rhs_preset_bad_arguments():
    with pytest.raises(UsageError, match="Invalid arguments"):
        RhsSpec.from_spec("source(1, 2)")


def test_rhs_as_source():
    source = RhsSpec.from_spec("source(3)").as_source()
    assert np.all(source(np.linspace(0.0, 1.0, 4), 0.2) == 3.0)
    with pytest.raises(UsageError, match="depends on the solution"):
        RhsSpec.from_spec("sine-gordon").as_source()


def test_rhs_reports_evaluation_location():
    rhs = RhsSpec.from_spec("sqrt(u)", beta_F=1.0)
    with pytest.raises(EvaluationError):
        rhs(np.array([0.0, 1.0]), 0.5, np.array([1.0, -1.0]), np.zeros(2))


def test_rhs_check_catches_wrong_lipschitz_constant():
    rhs = RhsSpec.from_spec("2 * u", beta_F=1.0)
    with pytest.raises(ToleranceError, match="Lipschitz ratio"):
        rhs.check(np.random.default_rng(0), (-1.0, 1.0), (0.0, 1.0))


def test_rhs_check_catches_wrong_sup_bound():
    rhs = RhsSpec.from_spec("u", beta_F=1.0, sup_bound=1.0)
    with pytest.raises(ToleranceError, match="sup_bound"):
        rhs.check(np.random.default_rng(0), (-1.0, 1.0), (0.0, 1.0))


def test_zero_rhs_converges_in_one_iteration(params, grid):
    problem = make_problem(params, grid, "zero")
    field, report = continue_solution(problem)
    assert len(report.windows) == 1
    assert report.windows[0].iterations == 1
    linear = linear_solve(None, problem.f0, problem.f1, grid, params)
    assert np.allclose(field.u, linear.u, atol=1e-12)


def test_source_rhs_matches_linear_solve(params, grid):
    problem = make_problem(params, grid, "source(0.5)")
    field, report = continue_solution(problem)
    assert report.windows[0].iterations == 2
    linear = linear_solve(
        problem.rhs.as_source(), problem.f0, problem.f1, grid, params
    )
    assert np.allclose(field.u, linear.u, atol=1e-10)
    assert np.allclose(field.ux, linear.ux, atol=1e-10)


def test_sine_gordon_contracts(params, grid):
    config = SolverConfig(theta=0.5, tol=1e-9)
    problem = make_problem(params, grid, "sine-gordon")
    field, report = continue_solution(problem, config)
    assert len(report.windows) == 2
    assert report.windows[0].eta_theoretical == pytest.approx(0.25)
    for window in report.windows:
        assert window.differences[-1] <= config.tol
        if window.contraction_ratio is not None:
            assert window.contraction_ratio <= config.theta + 1e-6
    assert report.windows[0].junction_gap <= 10.0 * config.tol
    assert report.windows[-1].junction_gap is None
    assert report.pde_residual is not None
    assert field.u.shape == (grid.nt + 1, grid.nx)


def test_window_length_does_not_change_the_solution(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    coarse, coarse_report = continue_solution(problem, SolverConfig(theta=0.5))
    fine, fine_report = continue_solution(problem, SolverConfig(theta=0.25))
    assert len(fine_report.windows) > len(coarse_report.windows)
    assert coarse.eta_distance(fine) <= 1e-6


def test_iterate_differences_decay_geometrically(params, grid):
    config = SolverConfig(theta=0.5, tol=1e-10)
    problem = make_problem(params, grid, "sine-gordon")
    _, report = continue_solution(problem, config)
    for window in report.windows:
        differences = window.differences
        assert len(differences) >= 4
        for earlier, later in zip(differences, differences[1:], strict=False):
            assert later <= config.theta * earlier + 1e-10


def test_windows_cover_horizon(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    _, report = continue_solution(problem)
    assert report.windows[0].t_start == 0.0
    assert report.windows[-1].t_end == pytest.approx(grid.T)
    for earlier, later in zip(report.windows, report.windows[1:], strict=False):
        assert later.t_start == earlier.t_end


def test_small_theta_warns_and_uses_single_steps(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    with pytest.warns(UserWarning, match="exceeds the contraction window"):
        _, report = continue_solution(problem, SolverConfig(theta=0.01))
    assert len(report.windows) == grid.nt


def test_convergence_failure_carries_differences(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    with pytest.raises(ConvergenceError, match="No fixed point") as e:
        continue_solution(problem, SolverConfig(max_iters=1))
    assert len(e.value.differences) == 1


def test_growth_past_contraction_bound_fails(params, grid):
    problem = Problem(
        params=params,
        f0=data("gaussian(0, 1)"),
        f1=data("zero"),
        rhs=RhsSpec.from_spec("50 * u", beta_F=0.1),
        grid=grid,
    )
    with pytest.raises(ConvergenceError, match="contraction bound") as e:
        solve_window(problem, (0.0, 0.5))
    assert len(e.value.differences) == 2
    assert e.value.differences[1] > 0.1 * e.value.differences[0]


def test_solve_window_rejects_long_window(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    with pytest.raises(UsageError, match="exceeds the contraction window"):
        solve_window(problem, (0.0, 0.5))


def test_solve_window_rejects_off_grid_time(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    with pytest.raises(UsageError, match="not a time level"):
        solve_window(problem, (0.0, 0.123))


def test_solve_window(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    field, report = solve_window(problem, (0.0, 0.25))
    assert report.t_end == pytest.approx(0.25)
    assert report.iterations == len(report.differences)
    assert np.allclose(field.u[0], problem.f0(grid.x))


def test_uniqueness(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    assert uniqueness_probe(problem, SolverConfig(tol=1e-10)) < 1e-8


def test_zero_is_a_fixed_point(params, grid):
    problem = make_problem(params, grid, "sine-gordon", f0="zero")
    image = picard_map(zero_field(grid), problem, (0.0, 0.25))
    assert image.t.size == 6
    assert np.all(image.u == 0.0)
    assert np.all(image.ux == 0.0)


def test_measured_contraction_is_below_theta(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    solution, _ = continue_solution(problem)
    ratio = measure_contraction(problem, (0.0, 0.25), zero_field(grid), solution)
    assert 0.0 < ratio <= 0.5


def test_measure_contraction_needs_distinct_fields(params, grid):
    problem = make_problem(params, grid, "sine-gordon")
    with pytest.raises(UsageError, match="coincide"):
        measure_contraction(
            problem, (0.0, 0.25), zero_field(grid), zero_field(grid)
        )


def test_pde_residual_of_exact_solution(params, grid):
    problem = make_problem(params, grid, "zero", f0="zero", f1="constant(1)")
    rows = -np.expm1(-params.a * grid.t) / params.a
    u = np.repeat(rows[:, None], grid.nx, axis=1)
    field = SpaceTimeField(x=grid.x, t=grid.t, u=u, ux=np.zeros_like(u))
    assert pde_residual(field, problem) < 1e-4


def test_pde_residual_detects_corruption(params, grid):
    problem = make_problem(params, grid, "zero", f0="zero", f1="constant(1)")
    rows = -np.expm1(-params.a * grid.t) / params.a
    u = np.repeat(rows[:, None], grid.nx, axis=1)
    u[5, 20] += 0.01
    field = SpaceTimeField(x=grid.x, t=grid.t, u=u, ux=np.zeros_like(u))
    assert pde_residual(field, problem) > 1.0


def test_pde_residual_needs_nine_nodes(params):
    small = GridSpec(x_min=-1.0, x_max=1.0, nx=5, T=0.5, nt=10)
    problem = make_problem(params, small, "zero")
    with pytest.raises(UsageError, match="at least 9 nodes"):
        pde_residual(zero_field(small), problem)


def test_report_json_round_trip(params, grid, tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("report")
    problem = make_problem(params, grid, "sine-gordon")
    _, report = continue_solution(problem)
    report.to_json(tmp_path / "report.json")
    loaded = SolveReport.from_json(tmp_path / "report.json")
    assert loaded.windows[1].t_start == report.windows[1].t_start
    assert loaded.windows[0].differences == report.windows[0].differences
    assert loaded.theta == 0.5
