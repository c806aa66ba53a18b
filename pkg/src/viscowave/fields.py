"""Sampled data and space-time fields."""

from __future__ import annotations

import csv
import json
import math
import re
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator

from viscowave.errors import UsageError
from viscowave.expression import Expression

PRESET_PATTERN = re.compile(r"^\s*([a-z][a-z-]*)\s*(?:\((.*)\))?\s*$")


def _gaussian(mu: float = 0.0, sigma: float = 1.0):
    return lambda x: np.exp(-((x - mu) ** 2) / (2.0 * sigma**2))


def _tanh_front(x0: float = 0.0, width: float = 1.0):
    return lambda x: 0.5 * (1.0 - np.tanh((x - x0) / width))


PRESETS: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {
    "zero": lambda: (lambda x: np.zeros_like(x)),
    "constant": lambda k=1.0: (lambda x: np.full_like(x, k)),
    "gaussian": _gaussian,
    "sine": lambda k=1.0: (lambda x: np.sin(k * x)),
    "tanh-front": _tanh_front,
}


class DataKind(str, Enum):
    PRESET = "preset"
    EXPRESSION = "expression"
    TABULATED = "tabulated"


def parse_preset(spec: str) -> tuple[str, tuple[float, ...]] | None:
    """Split a preset string such as ``gaussian(0, 1)`` into name and arguments.

    Returns:
        tuple | None: ``(name, args)`` or None when ``spec`` is not a preset
    """
    match = PRESET_PATTERN.match(spec)
    if match is None or match.group(1) not in PRESETS:
        return None
    raw = match.group(2)
    try:
        args = tuple(float(a) for a in raw.split(",")) if raw and raw.strip() else ()
    except ValueError:
        raise ValueError(f"Invalid preset arguments in {spec!r}.") from None
    return match.group(1), args


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """A function of x sampled once on a uniform grid and interpolated cubically.

    Outside the sampled window the function is continued by its end values.
    """

    kind: DataKind
    source: str
    nodes: np.ndarray
    values: np.ndarray
    spline: CubicSpline = field(repr=False)

    @classmethod
    def from_callable(
        cls,
        kind: DataKind,
        source: str,
        func: Callable[[np.ndarray], np.ndarray],
        lower: float,
        upper: float,
        spacing: float,
    ) -> SampledFunction:
        n = max(4, math.ceil((upper - lower) / spacing) + 1)
        nodes = np.linspace(lower, upper, n)
        values = np.broadcast_to(np.asarray(func(nodes), dtype=float), nodes.shape)
        return cls.from_table(nodes, values, kind=kind, source=source)

    @classmethod
    def from_table(
        cls,
        nodes,
        values,
        kind: DataKind = DataKind.TABULATED,
        source: str = "",
    ) -> SampledFunction:
        nodes = np.array(nodes, dtype=float)
        values = np.array(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 4:
            raise UsageError("Tabulated data needs matching 1-D arrays of length >= 4.")
        if np.any(np.diff(nodes) <= 0):
            raise UsageError("Tabulated nodes must be strictly increasing.")
        if not np.all(np.isfinite(values)):
            raise UsageError("Tabulated values must be finite.")
        return cls(kind, source, nodes, values, CubicSpline(nodes, values))

    @classmethod
    def from_spec(
        cls, spec: str, lower: float, upper: float, spacing: float
    ) -> SampledFunction:
        """Build from a preset string or an expression in x."""
        preset = parse_preset(spec)
        if preset is not None:
            name, args = preset
            return cls.from_callable(
                DataKind.PRESET, spec, PRESETS[name](*args), lower, upper, spacing
            )
        expression = Expression.parse(spec, variables=("x",))
        return cls.from_callable(
            DataKind.EXPRESSION,
            spec,
            lambda x: expression.evaluate(x=x),
            lower,
            upper,
            spacing,
        )

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def _clip(self, x):
        return np.clip(np.asarray(x, dtype=float), self.nodes[0], self.nodes[-1])

    def __call__(self, x):
        return self.spline(self._clip(x))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.nodes[0]) & (x <= self.nodes[-1])
        return np.where(inside, self.spline(self._clip(x), 1), 0.0)


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    nx: int
    T: float
    nt: int

    def __post_init__(self):
        problems = []
        if not self.x_max > self.x_min:
            problems.append("x_max must exceed x_min")
        if self.nx < 2:
            problems.append("nx must be at least 2")
        if not self.T > 0:
            problems.append("T must be positive")
        if self.nt < 1:
            problems.append("nt must be at least 1")
        if problems:
            raise UsageError("Inconsistent grid: " + "; ".join(problems) + ".")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    def padded(self, pad: int) -> GridSpec:
        return GridSpec(
            x_min=self.x_min - pad * self.dx,
            x_max=self.x_max + pad * self.dx,
            nx=self.nx + 2 * pad,
            T=self.T,
            nt=self.nt,
        )


def _read_only(array) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """Values of u (and optionally u_x) on a uniform space-time grid.

    Arrays are indexed ``[time level, x node]``; the first time level is
    t = 0 and carries the initial data.
    """

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    ux: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", _read_only(self.x))
        object.__setattr__(self, "t", _read_only(self.t))
        object.__setattr__(self, "u", _read_only(self.u))
        if self.ux is not None:
            object.__setattr__(self, "ux", _read_only(self.ux))
        if self.x.ndim != 1 or np.any(np.diff(self.x) <= 0):
            raise UsageError("x-grid must be strictly increasing.")
        if self.t.ndim != 1 or np.any(np.diff(self.t) <= 0):
            raise UsageError("t-grid must be strictly increasing.")
        shape = (self.t.size, self.x.size)
        for name in ("u", "ux"):
            values = getattr(self, name)
            if values is None:
                continue
            if values.shape != shape:
                raise UsageError(f"{name} has shape {values.shape}, expected {shape}.")
            if not np.all(np.isfinite(values)):
                raise UsageError(f"{name} contains non-finite values.")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def restrict(self, x_min: float, x_max: float) -> SpaceTimeField:
        tol = 1e-9 * max(1.0, abs(x_min), abs(x_max))
        keep = (self.x >= x_min - tol) & (self.x <= x_max + tol)
        return SpaceTimeField(
            x=self.x[keep],
            t=self.t,
            u=self.u[:, keep],
            ux=None if self.ux is None else self.ux[:, keep],
        )

    def levels(self, start: int, stop: int) -> SpaceTimeField:
        return SpaceTimeField(
            x=self.x,
            t=self.t[start:stop],
            u=self.u[start:stop],
            ux=None if self.ux is None else self.ux[start:stop],
        )

    def interpolate(self, x, t, channel: str = "u"):
        values = self.u if channel == "u" else self.ux
        if values is None:
            raise UsageError(f"Field has no {channel!r} channel.")
        method = "cubic" if min(self.t.size, self.x.size) >= 4 else "linear"
        interpolator = RegularGridInterpolator((self.t, self.x), values, method=method)
        t, x = np.broadcast_arrays(
            np.asarray(t, dtype=float), np.asarray(x, dtype=float)
        )
        return interpolator(np.stack([t.ravel(), x.ravel()], axis=-1)).reshape(x.shape)

    def derivative_consistency(self) -> float:
        """Largest gap between u_x and centred differences of u (interior nodes)."""
        if self.ux is None:
            raise UsageError("Field has no 'ux' channel.")
        centred = (self.u[:, 2:] - self.u[:, :-2]) / (2.0 * self.dx)
        return float(np.max(np.abs(centred - self.ux[:, 1:-1])))

    def eta_norm(self) -> float:
        return eta_norm(self.u, self.ux)

    def eta_distance(self, other: SpaceTimeField) -> float:
        if self.u.shape != other.u.shape:
            raise UsageError("Fields live on different grids.")
        if self.ux is None or other.ux is None:
            raise UsageError("The eta norm needs the 'ux' channel on both fields.")
        return eta_norm(self.u - other.u, self.ux - other.ux)

    def to_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["x", "t", "u", "ux"])
            for j, t in enumerate(self.t):
                for i, x in enumerate(self.x):
                    ux = "" if self.ux is None else repr(float(self.ux[j, i]))
                    writer.writerow(
                        [repr(float(x)), repr(float(t)), repr(float(self.u[j, i])), ux]
                    )

    @classmethod
    def from_csv(cls, path: Path) -> SpaceTimeField:
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        if not rows:
            raise UsageError(f"No field data in '{path}'.")
        xs = sorted({float(r["x"]) for r in rows})
        ts = sorted({float(r["t"]) for r in rows})
        u = np.empty((len(ts), len(xs)))
        has_ux = rows[0]["ux"] != ""
        ux = np.empty_like(u) if has_ux else None
        x_index = {x: i for i, x in enumerate(xs)}
        t_index = {t: j for j, t in enumerate(ts)}
        for row in rows:
            i, j = x_index[float(row["x"])], t_index[float(row["t"])]
            u[j, i] = float(row["u"])
            if ux is not None:
                ux[j, i] = float(row["ux"])
        return cls(x=np.array(xs), t=np.array(ts), u=u, ux=ux)

    def to_json(self, path: Path) -> None:
        payload = {
            "grid": {
                "x_min": float(self.x[0]),
                "x_max": float(self.x[-1]),
                "nx": int(self.x.size),
                "t_min": float(self.t[0]),
                "t_max": float(self.t[-1]),
                "nt": int(self.t.size),
                "layout": "row-major [t][x]",
            },
            "x": self.x.tolist(),
            "t": self.t.tolist(),
            "u": self.u.ravel().tolist(),
            "ux": None if self.ux is None else self.ux.ravel().tolist(),
        }
        with open(path, "w") as f:
            json.dump(payload, f)

    @classmethod
    def from_json(cls, path: Path) -> SpaceTimeField:
        with open(path) as f:
            payload = json.load(f)
        shape = (payload["grid"]["nt"], payload["grid"]["nx"])
        ux = payload.get("ux")
        return cls(
            x=np.array(payload["x"]),
            t=np.array(payload["t"]),
            u=np.array(payload["u"]).reshape(shape),
            ux=None if ux is None else np.array(ux).reshape(shape),
        )


def eta_norm(u, ux) -> float:
    """sup |u| + sup |u_x| over the grid nodes."""
    u = np.asarray(u)
    ux = np.asarray(ux)
    sup_u = float(np.max(np.abs(u))) if u.size else 0.0
    sup_ux = float(np.max(np.abs(ux))) if ux.size else 0.0
    return sup_u + sup_ux
