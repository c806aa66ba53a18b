"""Run configuration files.

A run is described by a TOML file with the sections ``[model]``,
``[initial]``, ``[rhs]``, ``[grid]``, ``[solver]``, ``[oracle]``,
``[kernel]`` and ``[output]``. Only ``[model]`` is mandatory. Optional
``[commands.<name>]`` tables hold default options for a subcommand.
"""

from __future__ import annotations

import math

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path

from viscowave.errors import ConfigError, ExpressionSyntaxError, KernelDomainError
from viscowave.expression import Expression
from viscowave.fields import PRESET_PATTERN, GridSpec, SampledFunction, parse_preset
from viscowave.kernel import KernelPath, ModelParams, QuadratureSpec
from viscowave.oracle import Boundary, FdConfig, Integrator
from viscowave.picard import RHS_PRESETS, Problem, RhsSpec, SolverConfig
from viscowave.potentials import PotentialConfig, truncation_window

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ModelSection:
    epsilon: float
    c: float
    a: float


@dataclass(frozen=True)
class InitialSection:
    f0: str = "zero"
    f1: str = "zero"
    spacing: float | None = None


@dataclass(frozen=True)
class RhsSection:
    spec: str = "zero"
    beta_F: float | None = None
    sup_bound: float | None = None


@dataclass(frozen=True)
class GridSection:
    x_min: float = -4.0
    x_max: float = 4.0
    nx: int = 161
    T: float = 1.0
    nt: int = 20


@dataclass(frozen=True)
class SolverSection:
    theta: float = 0.5
    tol: float = 1e-8
    max_iters: int = 50


@dataclass(frozen=True)
class OracleSection:
    dx: float = 0.05
    dt: float | None = None
    half_width: float | None = None
    boundary: str = Boundary.FROZEN_FARFIELD.value
    integrator: str = Integrator.RK4.value
    levels: int = 3


@dataclass(frozen=True)
class KernelSection:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 200
    path: str = KernelPath.TALBOT.value
    r_switch: float = 1e-3
    table_x: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0)
    table_t: tuple[float, ...] = (0.1, 0.5, 1.0)


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: tuple[str, ...] = FORMATS


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection
    initial: InitialSection = field(default_factory=InitialSection)
    rhs: RhsSection = field(default_factory=RhsSection)
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    output: OutputSection = field(default_factory=OutputSection)
    commands: dict[str, dict] = field(default_factory=dict)

    def model_params(self) -> ModelParams:
        return ModelParams(epsilon=self.model.epsilon, c=self.model.c, a=self.model.a)

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(
            rel_tol=self.kernel.rel_tol,
            abs_tol=self.kernel.abs_tol,
            max_subdivisions=self.kernel.max_subdivisions,
        )

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(x_min=g.x_min, x_max=g.x_max, nx=g.nx, T=g.T, nt=g.nt)

    def problem(self) -> Problem:
        """Sample the initial data over the whole truncation window."""
        params, grid = self.model_params(), self.grid_spec()
        reach = truncation_window(grid, params) + grid.dx
        spacing = self.initial.spacing or grid.dx / 2.0
        return Problem(
            params=params,
            f0=SampledFunction.from_spec(self.initial.f0, -reach, reach, spacing),
            f1=SampledFunction.from_spec(self.initial.f1, -reach, reach, spacing),
            rhs=RhsSpec.from_spec(self.rhs.spec, self.rhs.beta_F, self.rhs.sup_bound),
            grid=grid,
        )

    def solver_config(self, seed: int = 0) -> SolverConfig:
        return SolverConfig(
            theta=self.solver.theta,
            tol=self.solver.tol,
            max_iters=self.solver.max_iters,
            seed=seed,
            potentials=PotentialConfig(quad=self.quadrature()),
        )

    def fd_config(self) -> FdConfig:
        o = self.oracle
        return FdConfig(
            dx=o.dx,
            dt=o.dt,
            half_width=o.half_width,
            boundary=Boundary(o.boundary),
            integrator=Integrator(o.integrator),
            levels=o.levels,
        )


SECTIONS = {
    "model": ModelSection,
    "initial": InitialSection,
    "rhs": RhsSection,
    "grid": GridSection,
    "solver": SolverSection,
    "oracle": OracleSection,
    "kernel": KernelSection,
    "output": OutputSection,
}


def _is_rhs_zero(spec: str) -> bool:
    match = PRESET_PATTERN.match(spec)
    return match is not None and match.group(1) == "zero" and not match.group(2)


def _coerce(value, annotation: str, where: str, violations: list[str]):
    optional = annotation.endswith("| None")
    kind = annotation.removesuffix(" | None")
    if value is None and optional:
        return None
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, int | float):
            violations.append(f"{where} must be a number, got {value!r}")
            return None
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            violations.append(f"{where} must be an integer, got {value!r}")
            return None
        return value
    if kind == "str":
        if not isinstance(value, str):
            violations.append(f"{where} must be a string, got {value!r}")
            return None
        return value
    if kind.startswith("tuple"):
        item = "str" if "str" in kind else "float"
        if not isinstance(value, list):
            violations.append(f"{where} must be a list, got {value!r}")
            return None
        items = [
            _coerce(v, item, f"{where}[{i}]", violations) for i, v in enumerate(value)
        ]
        return tuple(items)
    raise TypeError(f"Unsupported annotation {annotation!r}")  # pragma: no cover


def _read_section(name: str, raw, violations: list[str]):
    cls = SECTIONS[name]
    if not isinstance(raw, dict):
        violations.append(f"[{name}] must be a table")
        return None
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            violations.append(f"[{name}] unknown key {key!r}")
    values = {}
    for key, spec in known.items():
        if key in raw:
            values[key] = _coerce(raw[key], spec.type, f"{name}.{key}", violations)
        elif spec.default is MISSING and spec.default_factory is MISSING:
            violations.append(f"[{name}] missing required key {key!r}")
    invalid = [
        k
        for k, v in values.items()
        if v is None and not known[k].type.endswith("| None")
    ]
    if invalid:
        return None
    try:
        return cls(**values)
    except TypeError:
        return None


def _check_data(where: str, spec: str, violations: list[str]) -> None:
    try:
        if parse_preset(spec) is None:
            Expression.parse(spec, variables=("x",))
    except ValueError as e:
        violations.append(f"{where}: {e}")


def _validate(config: RunConfig, violations: list[str]) -> None:
    m = config.model
    for key in ("epsilon", "c", "a"):
        value = getattr(m, key)
        if not (math.isfinite(value) and value > 0):
            violations.append(f"model.{key} must be positive, got {value!r}")
    if m.epsilon > 0 and m.c > 0 and m.a > 0:
        b = m.c**2 / m.epsilon
        if not m.a < b:
            violations.append(f"a < b required (a={m.a:g}, b=c^2/epsilon={b:g})")

    _check_data("initial.f0", config.initial.f0, violations)
    _check_data("initial.f1", config.initial.f1, violations)
    if config.initial.spacing is not None and config.initial.spacing <= 0:
        violations.append("initial.spacing must be positive")

    r = config.rhs
    match = PRESET_PATTERN.match(r.spec)
    if match is None or match.group(1) not in RHS_PRESETS:
        try:
            Expression.parse(r.spec)
        except ExpressionSyntaxError as e:
            violations.append(f"rhs.spec: {e}")
    if not _is_rhs_zero(r.spec) and r.beta_F is None:
        violations.append(f"rhs.beta_F required for rhs {r.spec!r}")
    if r.beta_F is not None and r.beta_F < 0:
        violations.append("rhs.beta_F must be nonnegative")
    if r.sup_bound is not None and r.sup_bound < 0:
        violations.append("rhs.sup_bound must be nonnegative")

    g = config.grid
    if not g.x_max > g.x_min:
        violations.append("grid.x_max must exceed grid.x_min")
    if g.nx < 2:
        violations.append("grid.nx must be at least 2")
    if not g.T > 0:
        violations.append("grid.T must be positive")
    if g.nt < 1:
        violations.append("grid.nt must be at least 1")

    s = config.solver
    if not 0 < s.theta < 1:
        violations.append(f"solver.theta must lie in (0, 1), got {s.theta!r}")
    if not s.tol > 0:
        violations.append("solver.tol must be positive")
    if s.max_iters < 1:
        violations.append("solver.max_iters must be at least 1")

    o = config.oracle
    if o.boundary not in {b.value for b in Boundary}:
        violations.append(
            f"oracle.boundary must be one of {', '.join(b.value for b in Boundary)}"
        )
    if o.integrator not in {i.value for i in Integrator}:
        violations.append("oracle.integrator must be 'rk4'")
    if not o.dx > 0 or (o.dt is not None and not o.dt > 0):
        violations.append("oracle.dx and oracle.dt must be positive")
    if o.levels < 2:
        violations.append("oracle.levels must be at least 2")

    k = config.kernel
    if not (k.rel_tol > 0 and k.abs_tol > 0) or k.max_subdivisions < 1:
        violations.append("kernel tolerances and max_subdivisions must be positive")
    if k.path not in {p.value for p in KernelPath}:
        violations.append(
            f"kernel.path must be one of {', '.join(p.value for p in KernelPath)}"
        )
    if any(t <= 0 for t in k.table_t):
        violations.append("kernel.table_t entries must be positive")

    unknown = set(config.output.formats) - set(FORMATS)
    if unknown:
        violations.append(f"output.formats has unknown entries {sorted(unknown)}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Args:
        text (str): TOML text

    Returns:
        RunConfig: The validated configuration
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([f"syntax error: {e}"]) from None
    violations: list[str] = []
    for key in raw:
        if key not in SECTIONS and key != "commands":
            violations.append(f"unknown section [{key}]")
    if "model" not in raw:
        violations.append("missing section [model]")
    sections = {
        name: _read_section(name, raw[name], violations)
        for name in SECTIONS
        if name in raw
    }
    commands = raw.get("commands", {})
    if not isinstance(commands, dict) or not all(
        isinstance(v, dict) for v in commands.values()
    ):
        violations.append("[commands] must contain one table per command")
        commands = {}
    if violations or any(s is None for s in sections.values()):
        raise ConfigError(violations or ["malformed configuration"])
    config = RunConfig(**sections, commands=commands)
    _validate(config, violations)
    if violations:
        raise ConfigError(violations)
    try:
        config.model_params()
    except KernelDomainError as e:  # pragma: no cover - covered by _validate
        raise ConfigError([str(e)]) from None
    return config


def read_config(path: Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Configuration file '{path}' does not exist.")
    return parse_config(path.read_text(encoding="utf-8"))


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list | tuple):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    raise TypeError(f"Cannot write {value!r} to a configuration file.")


def print_config(config: RunConfig) -> str:
    """Render a configuration as TOML that ``parse_config`` reads back unchanged."""
    lines: list[str] = []
    for name in SECTIONS:
        section = getattr(config, name)
        lines.append(f"[{name}]")
        for f in fields(section):
            value = getattr(section, f.name)
            if value is not None:
                lines.append(f"{f.name} = {_format_value(value)}")
        lines.append("")
    for command, options in config.commands.items():
        lines.append(f'[commands."{command}"]')
        for key, value in options.items():
            lines.append(f'"{key}" = {_format_value(value)}')
        lines.append("")
    return "\n".join(lines)


def configured_args(config: RunConfig | None, command: str) -> list[str]:
    """Command-line options taken from the ``[commands.<command>]`` table.

    Args:
        config (RunConfig | None): Run configuration
        command (str): Subcommand name

    Returns:
        list[str]: Options to prepend to the user's command line
    """
    if config is None:
        return []
    args = []
    for key, value in config.commands.get(command, {}).items():
        option = f"--{key.replace('_', '-')}"
        if isinstance(value, bool):
            if value:
                args.append(option)
        elif isinstance(value, list):
            for item in value:
                args.extend([option, str(item)])
        else:
            args.extend([option, str(value)])
    return args


__all__ = [
    "RunConfig",
    "configured_args",
    "parse_config",
    "print_config",
    "read_config",
]
