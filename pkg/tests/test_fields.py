import math

import numpy as np
import pytest

from viscowave.errors import ExpressionSyntaxError, UsageError
from viscowave.fields import (
    DataKind,
    GridSpec,
    SampledFunction,
    SpaceTimeField,
    eta_norm,
    parse_preset,
)


def smooth_field(nx: int = 41, nt: int = 5) -> SpaceTimeField:
    x = np.linspace(-2.0, 2.0, nx)
    t = np.linspace(0.0, 1.0, nt + 1)
    u = np.exp(-t[:, None]) * np.sin(x[None, :])
    ux = np.exp(-t[:, None]) * np.cos(x[None, :])
    return SpaceTimeField(x=x, t=t, u=u, ux=ux)


@pytest.mark.parametrize(
    "spec, expected",
    [
        ("zero", ("zero", ())),
        ("constant(2.5)", ("constant", (2.5,))),
        ("gaussian(0, 1)", ("gaussian", (0.0, 1.0))),
        ("tanh-front(1, 0.5)", ("tanh-front", (1.0, 0.5))),
        ("sin(x)", None),
        ("x^2", None),
    ],
)
def test_parse_preset(spec, expected):
    assert parse_preset(spec) == expected


def test_parse_preset_bad_arguments():
    with pytest.raises(ValueError, match="Invalid preset arguments"):
        parse_preset("gaussian(a, b)")


@pytest.mark.parametrize(
    "spec, func",
    [
        ("zero", lambda x: 0.0 * x),
        ("constant(3)", lambda x: 3.0 + 0.0 * x),
        ("gaussian(0.5, 2)", lambda x: np.exp(-((x - 0.5) ** 2) / 8.0)),
        ("sine(2)", lambda x: np.sin(2.0 * x)),
        ("tanh-front(0, 1)", lambda x: 0.5 * (1.0 - np.tanh(x))),
        ("exp(-x^2) * cos(x)", lambda x: np.exp(-(x**2)) * np.cos(x)),
    ],
)
def test_sampled_function_from_spec(spec, func):
    g = SampledFunction.from_spec(spec, -5.0, 5.0, 0.01)
    x = np.linspace(-4.0, 4.0, 17)
    assert np.allclose(g(x), func(x), atol=1e-7)


def test_sampled_function_kind():
    assert SampledFunction.from_spec("zero", -1, 1, 0.1).kind is DataKind.PRESET
    assert SampledFunction.from_spec("x", -1, 1, 0.1).kind is DataKind.EXPRESSION
    table = SampledFunction.from_table([0, 1, 2, 3], [0, 1, 4, 9])
    assert table.kind is DataKind.TABULATED


def test_sampled_function_expression_error():
    with pytest.raises(ExpressionSyntaxError, match="Unknown identifier 'u'"):
        SampledFunction.from_spec("sin(u)", -1.0, 1.0, 0.1)


def test_sampled_function_edge_continuation():
    g = SampledFunction.from_spec("x", -1.0, 1.0, 0.1)
    assert g(5.0) == pytest.approx(1.0)
    assert g(-5.0) == pytest.approx(-1.0)
    assert g.derivative(0.0) == pytest.approx(1.0)
    assert g.derivative(5.0) == 0.0


def test_sampled_function_bound_and_zero():
    assert SampledFunction.from_spec("zero", -1.0, 1.0, 0.1).is_zero
    g = SampledFunction.from_spec("gaussian(0, 1)", -3.0, 3.0, 0.05)
    assert g.bound == pytest.approx(1.0)
    assert not g.is_zero


@pytest.mark.parametrize(
    "nodes, values, match",
    [
        ([0, 1, 2], [0, 1, 2], "length >= 4"),
        ([0, 2, 1, 3], [0, 1, 2, 3], "strictly increasing"),
        ([0, 1, 2, 3], [0, np.inf, 2, 3], "finite"),
    ],
)
def test_sampled_function_table_validation(nodes, values, match):
    with pytest.raises(UsageError, match=match):
        SampledFunction.from_table(nodes, values)


def test_grid_spec():
    grid = GridSpec(x_min=-1.0, x_max=1.0, nx=21, T=0.5, nt=10)
    assert grid.dx == pytest.approx(0.1)
    assert grid.dt == pytest.approx(0.05)
    assert grid.t[0] == 0.0 and grid.t.size == 11
    padded = grid.padded(3)
    assert padded.nx == 27
    assert padded.x_min == pytest.approx(-1.3)
    assert np.allclose(padded.x[3:-3], grid.x)


def test_grid_spec_collects_problems():
    message = "x_max must exceed x_min; nx must be at least 2"
    with pytest.raises(UsageError, match=message):
        GridSpec(x_min=1.0, x_max=0.0, nx=1, T=1.0, nt=1)


def test_field_is_read_only():
    field = smooth_field()
    with pytest.raises(ValueError, match="read-only"):
        field.u[0, 0] = 1.0


def test_field_validation():
    with pytest.raises(UsageError, match="expected \\(2, 3\\)"):
        SpaceTimeField(x=[0, 1, 2], t=[0, 1], u=np.zeros((3, 2)))
    with pytest.raises(UsageError, match="non-finite"):
        SpaceTimeField(x=[0, 1], t=[0, 1], u=[[0, np.nan], [0, 0]])
    with pytest.raises(UsageError, match="x-grid"):
        SpaceTimeField(x=[0, 0], t=[0, 1], u=np.zeros((2, 2)))


def test_derivative_consistency():
    field = smooth_field(nx=201)
    assert field.derivative_consistency() < 1e-3


def test_eta_norm():
    assert eta_norm([[1.0, -3.0]], [[0.5, 2.0]]) == 5.0
    field = smooth_field()
    assert field.eta_norm() == pytest.approx(
        np.max(np.abs(field.u)) + np.max(np.abs(field.ux))
    )
    assert field.eta_distance(field) == 0.0


def test_restrict_and_levels():
    field = smooth_field()
    inner = field.restrict(-1.0, 1.0)
    assert inner.x[0] == pytest.approx(-1.0) and inner.x[-1] == pytest.approx(1.0)
    assert inner.u.shape == (field.t.size, inner.x.size)
    assert field.levels(1, 3).t.tolist() == field.t[1:3].tolist()


def test_interpolate():
    field = smooth_field(nx=201, nt=20)
    value = field.interpolate(0.3, 0.45)
    assert value == pytest.approx(math.exp(-0.45) * math.sin(0.3), abs=1e-5)


def test_csv_round_trip(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("field-csv")
    field = smooth_field()
    field.to_csv(tmp_path / "field.csv")
    header = (tmp_path / "field.csv").read_text().splitlines()[0]
    assert header == "x,t,u,ux"
    loaded = SpaceTimeField.from_csv(tmp_path / "field.csv")
    assert np.array_equal(loaded.u, field.u)
    assert np.array_equal(loaded.ux, field.ux)


def test_json_round_trip(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("field-json")
    field = smooth_field()
    field.to_json(tmp_path / "field.json")
    loaded = SpaceTimeField.from_json(tmp_path / "field.json")
    assert np.array_equal(loaded.x, field.x)
    assert np.array_equal(loaded.u, field.u)
