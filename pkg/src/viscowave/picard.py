"""Contraction-mapping solver for the nonlinear problem.

The solution is the fixed point of

    (F v)(t) = u_{f1} + u*_{f0} - int_0^t K(t - tau) * F(., tau, v, v_x) dtau,

iterated on windows short enough for the map to contract in the norm
sup|v| + sup|v_x|. Later windows freeze the part of the time integral that
lies in already solved windows.
"""

from __future__ import annotations

import json
import logging
import math
import time
import warnings
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from viscowave.errors import (
    ConsistencyError,
    ConvergenceError,
    EvaluationError,
    KernelDomainError,
    ToleranceError,
    UsageError,
)
from viscowave.expression import Expression
from viscowave.fields import (
    PRESET_PATTERN,
    GridSpec,
    SampledFunction,
    SpaceTimeField,
    eta_norm,
)
from viscowave.kernel import ModelParams
from viscowave.potentials import GridPotentials, PotentialConfig

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, float, np.ndarray, np.ndarray], np.ndarray]

CONTRACTION_SLACK = 1e-10
JUNCTION_FACTOR = 10.0


def _rhs_zero():
    return (lambda x, t, u, p: np.zeros_like(u)), 0.0, 0.0


def _rhs_source(k: float = 1.0):
    return (lambda x, t, u, p: np.full_like(u, k)), 0.0, abs(k)


def _rhs_sine_gordon():
    return (lambda x, t, u, p: np.sin(u)), 1.0, 1.0


def _rhs_cubic():
    # sup of d/du [u^3 / (1 + u^2)] is 9/8, reached at u^2 = 3
    return (lambda x, t, u, p: u**3 / (1.0 + u**2)), 1.125, None


RHS_PRESETS: dict[str, Callable[..., tuple[Evaluator, float, float | None]]] = {
    "zero": _rhs_zero,
    "source": _rhs_source,
    "sine-gordon": _rhs_sine_gordon,
    "cubic": _rhs_cubic,
}
SOLUTION_FREE_PRESETS = {"zero", "source"}


@dataclass(frozen=True, eq=False)
class RhsSpec:
    """Right-hand side F(x, t, u, p) with its global Lipschitz constant beta_F."""

    source: str
    evaluator: Evaluator = field(repr=False)
    beta_F: float
    sup_bound: float | None = None
    depends_on_solution: bool = True

    def __post_init__(self):
        if not math.isfinite(self.beta_F) or self.beta_F < 0:
            raise UsageError(
                f"beta_F must be a nonnegative number, got {self.beta_F!r}."
            )
        if self.sup_bound is not None and self.sup_bound < 0:
            raise UsageError("sup_bound must be nonnegative.")

    @classmethod
    def from_spec(
        cls,
        spec: str,
        beta_F: float | None = None,
        sup_bound: float | None = None,
    ) -> RhsSpec:
        """Build from a preset name or an expression in x, t, u, p.

        Args:
            spec (str): Preset such as ``sine-gordon`` / ``source(2)``, or an expression
            beta_F (float | None): Lipschitz constant; required for expressions
            sup_bound (float | None): Bound of |F|, if known

        Returns:
            RhsSpec: The parsed right-hand side
        """
        match = PRESET_PATTERN.match(spec)
        if match is not None and match.group(1) in RHS_PRESETS:
            name, raw = match.group(1), match.group(2)
            try:
                args = tuple(float(a) for a in raw.split(",")) if raw else ()
                evaluator, beta, bound = RHS_PRESETS[name](*args)
            except (TypeError, ValueError):
                raise UsageError(
                    f"Invalid arguments for RHS preset {spec!r}."
                ) from None
            if bound is None and sup_bound is None:
                warnings.warn(
                    f"Right-hand side {spec!r} is unbounded; "
                    "the sup-bound check is skipped.",
                    UserWarning,
                    stacklevel=2,
                )
            return cls(
                source=spec,
                evaluator=evaluator,
                beta_F=beta if beta_F is None else beta_F,
                sup_bound=bound if sup_bound is None else sup_bound,
                depends_on_solution=name not in SOLUTION_FREE_PRESETS,
            )

        expression = Expression.parse(spec)
        if beta_F is None:
            raise UsageError(
                f"Right-hand side {spec!r} is an expression; beta_F must be given."
            )
        return cls(
            source=spec,
            evaluator=lambda x, t, u, p: expression.evaluate(x=x, t=t, u=u, p=p),
            beta_F=beta_F,
            sup_bound=sup_bound,
            depends_on_solution=bool(expression.free_variables() & {"u", "p"}),
        )

    def __call__(self, x, t: float, u, p) -> np.ndarray:
        values = np.broadcast_to(
            np.asarray(self.evaluator(x, t, u, p), dtype=float), np.shape(u)
        )
        bad = ~np.isfinite(values)
        if np.any(bad):
            index = int(np.argmax(bad.ravel()))
            raise EvaluationError(
                f"Right-hand side {self.source!r} produced a non-finite value",
                {
                    "x": float(np.broadcast_to(x, np.shape(u)).ravel()[index]),
                    "t": float(t),
                    "u": float(np.ravel(u)[index]),
                },
            )
        return values

    def as_source(self) -> Callable[[np.ndarray, float], np.ndarray]:
        """F(x, t, 0, 0) as a source term; only meaningful when F ignores u and p."""
        if self.depends_on_solution:
            raise UsageError(
                f"Right-hand side {self.source!r} depends on the solution."
            )
        return lambda x, t: self(x, t, np.zeros_like(x), np.zeros_like(x))

    def probe(
        self,
        rng: np.random.Generator,
        x_range: tuple[float, float],
        t_range: tuple[float, float],
        radius: float,
        samples: int = 512,
    ) -> tuple[float, float]:
        """Randomized spot-check of the Lipschitz and sup hypotheses.

        Returns:
            tuple[float, float]: (largest observed Lipschitz ratio, largest |F|)
        """
        x = rng.uniform(*x_range, samples)
        t = rng.uniform(*t_range, samples)
        u1, p1, u2, p2 = rng.uniform(-radius, radius, (4, samples))
        f1 = np.array([self(x[i], t[i], u1[i], p1[i]) for i in range(samples)])
        f2 = np.array([self(x[i], t[i], u2[i], p2[i]) for i in range(samples)])
        gap = np.abs(u1 - u2) + np.abs(p1 - p2)
        ratio = float(np.max(np.abs(f1 - f2) / np.maximum(gap, 1e-300)))
        sup = float(max(np.max(np.abs(f1)), np.max(np.abs(f2))))
        return ratio, sup

    def check(
        self,
        rng: np.random.Generator,
        x_range: tuple[float, float],
        t_range: tuple[float, float],
        radius: float = 10.0,
    ) -> None:
        ratio, sup = self.probe(rng, x_range, t_range, radius)
        logger.debug("rhs probe: lipschitz ratio %.6g, sup %.6g", ratio, sup)
        if ratio > self.beta_F * (1.0 + 1e-9) + 1e-12:
            raise ToleranceError(
                f"Right-hand side {self.source!r} has observed Lipschitz ratio "
                f"{ratio:.6g} > beta_F={self.beta_F:g}."
            )
        if self.sup_bound is not None and sup > self.sup_bound * (1.0 + 1e-9) + 1e-12:
            raise ToleranceError(
                f"Right-hand side {self.source!r} reaches |F|={sup:.6g} "
                f"> sup_bound={self.sup_bound:g}."
            )


@dataclass(frozen=True, eq=False)
class Problem:
    params: ModelParams
    f0: SampledFunction
    f1: SampledFunction
    rhs: RhsSpec
    grid: GridSpec

    @property
    def T(self) -> float:
        return self.grid.T


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 0.5
    tol: float = 1e-8
    max_iters: int = 50
    seed: int = 0
    potentials: PotentialConfig = field(default_factory=PotentialConfig)

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise UsageError(f"theta must lie in (0, 1), got {self.theta!r}.")
        if self.tol <= 0:
            raise UsageError("tol must be positive.")
        if self.max_iters < 1:
            raise UsageError("max_iters must be at least 1.")


@dataclass
class WindowReport:
    index: int
    t_start: float
    t_end: float
    eta_theoretical: float
    eta_used: float
    iterations: int
    differences: list[float]
    contraction_ratio: float | None
    junction_gap: float | None = None


@dataclass
class SolveReport:
    windows: list[WindowReport]
    pde_residual: float | None
    wall_time: float
    theta: float
    tol: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path: Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def from_json(cls, path: Path) -> SolveReport:
        with open(path) as f:
            payload = json.load(f)
        payload["windows"] = [WindowReport(**w) for w in payload["windows"]]
        return cls(**payload)


def contraction_window(
    params: ModelParams, beta_F: float, theta: float, T: float
) -> float:
    """Window length eta with beta_F (1/a + 1/sqrt(eps (b - a))) eta = theta."""
    if params.a >= params.b or params.degenerate:
        raise KernelDomainError(
            "a < b required for the contraction estimate "
            f"(a={params.a:g}, b={params.b:g})."
        )
    if beta_F < 0:
        raise UsageError("beta_F must be nonnegative.")
    if beta_F == 0:
        return T
    constant = 1.0 / params.a + 1.0 / math.sqrt(params.epsilon * (params.b - params.a))
    return theta / (beta_F * constant)


class PicardSolver:
    """Fixed-point machinery on the padded grid of a problem.

    Arrays are full ``(levels, nodes)`` blocks; rows outside the active
    window are never modified by an iteration.
    """

    def __init__(self, problem: Problem, config: SolverConfig | None = None):
        self.problem = problem
        self.config = config or SolverConfig()
        self.potentials = GridPotentials(
            problem.params, problem.grid, self.config.potentials
        )
        self.x = self.potentials.x
        self.t = self.potentials.t
        self.data_u, self.data_ux = self.potentials.data_terms(problem.f0, problem.f1)
        self._history_u = np.zeros_like(self.data_u)
        self._history_ux = np.zeros_like(self.data_ux)
        self._frozen = 0

    @property
    def levels(self) -> int:
        return self.t.size

    def level_of(self, t: float) -> int:
        level = round(t / self.potentials.grid.dt)
        dt = self.potentials.grid.dt
        if not math.isclose(level * dt, t, rel_tol=1e-9, abs_tol=1e-12):
            raise UsageError(f"t={t!r} is not a time level of the grid.")
        if not 0 <= level < self.levels:
            raise UsageError(f"t={t!r} lies outside [0, T].")
        return level

    def lift(self, v: SpaceTimeField) -> tuple[np.ndarray, np.ndarray]:
        """Bring a field onto the padded grid, continuing it by its edge values."""
        if v.ux is None:
            raise UsageError("The fixed-point map needs fields with a 'ux' channel.")
        if v.t.size != self.levels:
            raise UsageError(
                f"Field has {v.t.size} time levels, the problem grid {self.levels}."
            )
        if v.x.size == self.x.size:
            return np.array(v.u), np.array(v.ux)
        if v.x.size != self.problem.grid.nx:
            raise UsageError("Field does not live on the problem grid.")
        pad = self.potentials.pad
        u = np.pad(v.u, ((0, 0), (pad, pad)), mode="edge")
        ux = np.pad(v.ux, ((0, 0), (pad, pad)), mode="constant")
        return u, ux

    def sources(
        self, u: np.ndarray, ux: np.ndarray, start: int, stop: int
    ) -> np.ndarray:
        values = np.zeros_like(u)
        for m in range(start, stop):
            values[m] = self.problem.rhs(self.x, float(self.t[m]), u[m], ux[m])
        return values

    def apply(
        self,
        u: np.ndarray,
        ux: np.ndarray,
        start: int,
        stop: int,
        cached: bool = True,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate the map on rows (start, stop], or [0, stop] when start == 0.

        With ``cached`` the source levels below the frozen level come from
        the history cache; otherwise the whole time integral is recomputed.
        """
        lower = self._frozen if cached else 0
        sources = self.sources(u, ux, lower, stop)
        new_u, new_ux = u.copy(), ux.copy()
        first = 0 if start == 0 else start + 1
        for j in range(first, stop + 1):
            vu, vux = self.potentials.volume_level(j, sources, start=lower)
            new_u[j] = self.data_u[j] - vu
            new_ux[j] = self.data_ux[j] - vux
            if cached:
                new_u[j] -= self._history_u[j]
                new_ux[j] -= self._history_ux[j]
        return new_u, new_ux

    def freeze(self, u: np.ndarray, ux: np.ndarray, level: int) -> None:
        """Move source levels [frozen, level) into the history of later levels."""
        if level <= self._frozen:
            return
        sources = self.sources(u, ux, self._frozen, level)
        for j in range(level + 1, self.levels):
            vu, vux = self.potentials.volume_level(
                j, sources, start=self._frozen, stop=level
            )
            self._history_u[j] += vu
            self._history_ux[j] += vux
        self._frozen = level

    def iterate(
        self,
        u: np.ndarray,
        ux: np.ndarray,
        start: int,
        stop: int,
        bound: float | None = None,
    ) -> tuple[np.ndarray, np.ndarray, list[float]]:
        """Iterate on levels [start, stop] until successive iterates agree to tol.

        With ``bound`` set, every ratio of successive differences must stay
        within it; a faster growth raises ConvergenceError.
        """
        if start != self._frozen:
            raise UsageError(
                f"Window starts at level {start} "
                f"but history is frozen at {self._frozen}."
            )
        rows = slice(start, stop + 1)
        differences: list[float] = []
        for _ in range(self.config.max_iters):
            new_u, new_ux = self.apply(u, ux, start, stop)
            difference = eta_norm(new_u[rows] - u[rows], new_ux[rows] - ux[rows])
            differences.append(difference)
            logger.debug(
                "window [%d, %d] iteration %d: |dv| = %.3e",
                start,
                stop,
                len(differences),
                difference,
            )
            if bound is not None:
                _check_contraction(differences, bound, start, stop)
            u, ux = new_u, new_ux
            if difference <= self.config.tol:
                return u, ux, differences
        raise ConvergenceError(
            f"No fixed point on levels [{start}, {stop}] after "
            f"{self.config.max_iters} iterations (last |dv|={differences[-1]:.3e}); "
            "beta_F may underestimate the Lipschitz constant.",
            differences,
        )


def lipschitz_factor(problem: Problem, length: float) -> float:
    """Theoretical contraction constant of the map on a window of ``length``."""
    params = problem.params
    constant = 1.0 / params.a + 1.0 / math.sqrt(params.epsilon * (params.b - params.a))
    return problem.rhs.beta_F * constant * length


def _measured_ratio(differences: list[float]) -> float | None:
    ratios = [
        later / earlier
        for earlier, later in zip(differences, differences[1:], strict=False)
        if earlier > CONTRACTION_SLACK
    ]
    return max(ratios) if ratios else None


def _check_contraction(
    differences: list[float], bound: float, start: int, stop: int
) -> None:
    if len(differences) < 2:
        return
    earlier, later = differences[-2:]
    if later > bound * earlier + CONTRACTION_SLACK:
        raise ConvergenceError(
            f"Iterate difference on levels [{start}, {stop}] grew past the "
            f"contraction bound at iteration {len(differences)}: "
            f"{later:.3e} > {bound:.3g} * {earlier:.3e}; "
            "beta_F underestimates the Lipschitz constant.",
            differences,
        )


def _window_levels(problem: Problem, config: SolverConfig) -> tuple[float, int]:
    eta = contraction_window(
        problem.params, problem.rhs.beta_F, config.theta, problem.T
    )
    if eta >= problem.T:
        return eta, problem.grid.nt
    steps = math.floor(eta / problem.grid.dt + 1e-9)
    if steps < 1:
        warnings.warn(
            f"Time step {problem.grid.dt:g} exceeds the contraction window "
            f"{eta:g}; using one step per window.",
            UserWarning,
            stacklevel=3,
        )
        steps = 1
    return eta, steps


def picard_map(
    v: SpaceTimeField,
    problem: Problem,
    window: tuple[float, float],
    config: SolverConfig | None = None,
) -> SpaceTimeField:
    """Apply the map once, returning the levels of ``window``.

    ``v`` must carry every time level of the problem grid; levels before the
    window supply the history part of the time integral.
    """
    solver = PicardSolver(problem, config)
    start, stop = solver.level_of(window[0]), solver.level_of(window[1])
    u, ux = solver.lift(v)
    new_u, new_ux = solver.apply(u, ux, 0, stop, cached=False)
    keep = solver.potentials.interior if v.x.size != solver.x.size else slice(None)
    return SpaceTimeField(
        x=solver.x[keep],
        t=solver.t[start : stop + 1],
        u=new_u[start : stop + 1, keep],
        ux=new_ux[start : stop + 1, keep],
    )


def measure_contraction(
    problem: Problem,
    window: tuple[float, float],
    v1: SpaceTimeField,
    v2: SpaceTimeField,
    config: SolverConfig | None = None,
) -> float:
    """Observed ||F v1 - F v2|| / ||v1 - v2|| on the window levels."""
    solver = PicardSolver(problem, config)
    start, stop = solver.level_of(window[0]), solver.level_of(window[1])
    rows = slice(start, stop + 1)
    u1, ux1 = solver.lift(v1)
    u2, ux2 = solver.lift(v2)
    denominator = eta_norm(u1[rows] - u2[rows], ux1[rows] - ux2[rows])
    if denominator == 0:
        raise UsageError("The two fields coincide on the window.")
    g1, gx1 = solver.apply(u1, ux1, 0, stop, cached=False)
    g2, gx2 = solver.apply(u2, ux2, 0, stop, cached=False)
    return eta_norm(g1[rows] - g2[rows], gx1[rows] - gx2[rows]) / denominator


def _prepare(problem: Problem, config: SolverConfig) -> None:
    if problem.rhs.depends_on_solution:
        radius = 2.0 * (problem.f0.bound + problem.T * problem.f1.bound) + 1.0
    else:
        radius = 1.0
    problem.rhs.check(
        np.random.default_rng(config.seed),
        (problem.grid.x_min, problem.grid.x_max),
        (0.0, problem.T),
        radius,
    )


def solve_window(
    problem: Problem,
    window: tuple[float, float],
    v_init: SpaceTimeField | None = None,
    config: SolverConfig | None = None,
) -> tuple[SpaceTimeField, WindowReport]:
    """Iterate the map on one window until successive iterates agree to tol.

    Levels up to the window start are taken from ``v_init`` (or the initial
    data for a window starting at t = 0) and held fixed.
    """
    config = config or SolverConfig()
    solver = PicardSolver(problem, config)
    start, stop = solver.level_of(window[0]), solver.level_of(window[1])
    if stop <= start:
        raise UsageError("Window must contain at least one time step.")
    eta = contraction_window(
        problem.params, problem.rhs.beta_F, config.theta, problem.T
    )
    length = solver.t[stop] - solver.t[start]
    if length > eta * (1.0 + 1e-9):
        raise UsageError(
            f"Window length {length:g} exceeds the contraction window {eta:g}."
        )
    if v_init is None:
        u, ux = solver.data_u.copy(), solver.data_ux.copy()
    else:
        u, ux = solver.lift(v_init)
        u[0], ux[0] = solver.data_u[0], solver.data_ux[0]
    solver.freeze(u, ux, start)
    u, ux, differences = solver.iterate(
        u, ux, start, stop, lipschitz_factor(problem, length)
    )
    report = WindowReport(
        index=0,
        t_start=float(solver.t[start]),
        t_end=float(solver.t[stop]),
        eta_theoretical=eta,
        eta_used=float(length),
        iterations=len(differences),
        differences=differences,
        contraction_ratio=_measured_ratio(differences),
    )
    return solver.potentials.output(u, ux), report


def continue_solution(
    problem: Problem, config: SolverConfig | None = None
) -> tuple[SpaceTimeField, SolveReport]:
    """Solve on all of [0, T] window by window and check the junctions."""
    config = config or SolverConfig()
    started = time.perf_counter()
    _prepare(problem, config)
    eta, steps = _window_levels(problem, config)
    solver = PicardSolver(problem, config)
    u, ux = solver.data_u.copy(), solver.data_ux.copy()
    nt = problem.grid.nt
    windows: list[WindowReport] = []
    start = 0
    while start < nt:
        stop = min(start + steps, nt)
        solver.freeze(u, ux, start)
        length = float(solver.t[stop] - solver.t[start])
        u, ux, differences = solver.iterate(
            u, ux, start, stop, lipschitz_factor(problem, length)
        )
        windows.append(
            WindowReport(
                index=len(windows),
                t_start=float(solver.t[start]),
                t_end=float(solver.t[stop]),
                eta_theoretical=eta,
                eta_used=length,
                iterations=len(differences),
                differences=differences,
                contraction_ratio=_measured_ratio(differences),
            )
        )
        logger.info(
            "window %d [%g, %g]: %d iterations, last |dv| = %.3e",
            windows[-1].index,
            windows[-1].t_start,
            windows[-1].t_end,
            windows[-1].iterations,
            differences[-1],
        )
        start = stop

    junctions = [round(w.t_end / problem.grid.dt) for w in windows[:-1]]
    if junctions:
        full_u, full_ux = solver.apply(u, ux, 0, junctions[-1], cached=False)
        inner = solver.potentials.interior
        for report, level in zip(windows, junctions, strict=False):
            gap = max(
                float(np.max(np.abs(full_u[level, inner] - u[level, inner]))),
                float(np.max(np.abs(full_ux[level, inner] - ux[level, inner]))),
            )
            report.junction_gap = gap
            if gap > JUNCTION_FACTOR * config.tol:
                raise ConsistencyError(
                    f"Junction gap {gap:.3e} at t={solver.t[level]:g} exceeds "
                    f"{JUNCTION_FACTOR:g} * tol."
                )

    result = solver.potentials.output(u, ux)
    try:
        residual = pde_residual(result, problem)
    except UsageError:
        residual = None
    report = SolveReport(
        windows=windows,
        pde_residual=residual,
        wall_time=time.perf_counter() - started,
        theta=config.theta,
        tol=config.tol,
    )
    return result, report


def uniqueness_probe(problem: Problem, config: SolverConfig | None = None) -> float:
    """Distance between first-window fixed points reached from two starts."""
    config = config or SolverConfig()
    _, steps = _window_levels(problem, config)
    window = (0.0, steps * problem.grid.dt)
    from_data, _ = solve_window(problem, window, None, config)
    levels = problem.grid.nt + 1
    zero = SpaceTimeField(
        x=problem.grid.x,
        t=problem.grid.t,
        u=np.zeros((levels, problem.grid.nx)),
        ux=np.zeros((levels, problem.grid.nx)),
    )
    from_zero, _ = solve_window(problem, window, zero, config)
    return from_data.levels(0, steps + 1).eta_distance(from_zero.levels(0, steps + 1))


def _d1(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def _d2(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (
        12.0 * h**2
    )
    return np.moveaxis(out, 0, axis)


def pde_residual(u: SpaceTimeField, problem: Problem) -> float:
    """Max residual of (eps dt + c^2) u_xx - (dt + a) u_t - F at interior nodes.

    Derivatives use fourth-order central differences; the p argument of F is
    the field's u_x channel when present.
    """
    if u.x.size < 9 or u.t.size < 9:
        raise UsageError(
            "Fourth-order residual stencils need at least 9 nodes in x and t, "
            f"got {u.x.size} x {u.t.size}."
        )
    params = problem.params
    dx, dt = u.dx, u.dt
    uxx = _d2(u.u, dx, axis=1)[2:-2]
    uxxt = _d1(_d2(u.u, dx, axis=1), dt, axis=0)
    ut = _d1(u.u, dt, axis=0)[:, 2:-2]
    utt = _d2(u.u, dt, axis=0)[:, 2:-2]
    ux = u.ux if u.ux is not None else np.pad(_d1(u.u, dx, axis=1), ((0, 0), (2, 2)))
    x = u.x[2:-2]
    residual = params.epsilon * uxxt + params.c**2 * uxx - utt - params.a * ut
    for k, t in enumerate(u.t[2:-2]):
        level = k + 2
        residual[k] -= problem.rhs(x, float(t), u.u[level, 2:-2], ux[level, 2:-2])
    return float(np.max(np.abs(residual)))
