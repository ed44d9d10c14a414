"""Expression grammar: parse errors with byte offsets, evaluation, and
symbolic-derivative agreement against sympy."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from minmaps import MapExpr
from minmaps.expressions import ExprError, evaluate, parse_map, parse_scalar


def test_identity_map_parses():
    m = MapExpr.parse("x, y")
    out = m(np.array([0.3]), np.array([-0.7]))
    assert out[..., 0] == pytest.approx(0.3)
    assert out[..., 1] == pytest.approx(-0.7)


def test_syntax_error_reports_offset():
    with pytest.raises(ExprError) as exc:
        MapExpr.parse("x, +")
    assert exc.value.offset == 3


def test_unknown_identifier_reports_offset():
    with pytest.raises(ExprError) as exc:
        parse_scalar("x + zz*2")
    assert exc.value.offset == 4


def test_unknown_function_rejected():
    with pytest.raises(ExprError):
        parse_scalar("tan(x)")


def test_map_needs_two_components():
    with pytest.raises(ExprError):
        MapExpr.parse("x + y")


def test_power_and_functions():
    node = parse_scalar("exp(x)^2 + sqrt(y) - log(x)*cos(y) + sin(x)/2")
    x, y = 1.3, 0.49
    want = math.exp(x) ** 2 + math.sqrt(y) - math.log(x) * math.cos(y) + math.sin(x) / 2
    assert evaluate(node, np.array(x), np.array(y)) == pytest.approx(want, rel=1e-14)


def test_unary_minus_and_precedence():
    node = parse_scalar("-x^2 + 2*-y")
    # ^ binds tighter than unary minus: -(x^2) + 2*(-y)
    assert evaluate(node, np.array(3.0), np.array(1.5)) == pytest.approx(-12.0)


def test_spec_expression_matches_named_map():
    # the same map written as a raw expression and as the named preset
    text = ("0.5*(exp(x)-3*exp(-x))*cos(y/2), "
            "-0.5*(exp(x)-3*exp(-x))*sin(y/2)")
    from minmaps.presets import map_preset
    a = MapExpr.parse(text)
    b = map_preset("paper_example")
    xs = np.linspace(-1.5, 1.5, 7)
    ys = np.linspace(-2.0, 2.0, 7)
    Xg, Yg = np.meshgrid(xs, ys, indexing="ij")
    assert np.allclose(a(Xg, Yg), b(Xg, Yg), atol=1e-12)
    assert np.allclose(a.jacobian(Xg, Yg), b.jacobian(Xg, Yg), atol=1e-12)


def test_jacobian_matches_sympy():
    text = "exp(x)*cos(y) - x^2*y, sqrt(1 + x^2) + sin(x*y)"
    m = MapExpr.parse(text)
    X, Y = sp.symbols("x y", real=True)
    f1 = sp.exp(X) * sp.cos(Y) - X ** 2 * Y
    f2 = sp.sqrt(1 + X ** 2) + sp.sin(X * Y)
    pts = [(0.2, -0.3), (1.1, 0.7), (-0.5, 0.4)]
    for x, y in pts:
        got = m.jacobian(np.array(x), np.array(y))
        want = np.array([[float(sp.diff(f, v).subs({X: x, Y: y}))
                          for v in (X, Y)] for f in (f1, f2)])
        assert got == pytest.approx(want, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_polynomial_evaluation_property(x, y, a, b, c):
    node = parse_scalar(f"{a!r}*x^2 + {b!r}*x*y + {c!r} - y")
    got = float(evaluate(node, np.array(x), np.array(y)))
    want = a * x * x + b * x * y + c - y
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_map_components_parse_independently(x, y):
    m = MapExpr.parse("sin(x) + y, cos(y) - x")
    out = m(np.array(x), np.array(y))
    assert float(out[..., 0]) == pytest.approx(math.sin(x) + y, abs=1e-14)
    assert float(out[..., 1]) == pytest.approx(math.cos(y) - x, abs=1e-14)
