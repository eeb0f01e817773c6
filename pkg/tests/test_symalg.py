from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradedkit.grading import EVEN, ODD, Weight, mk_chart
from gradedkit.symalg import (
    Expr,
    ExprError,
    coefficient_in,
    graded_derivative,
    is_homogeneous,
    max_power,
    parity_decompose,
    right_derivative,
    substitute,
    weight_decompose,
)

C = mk_chart(2, [("x", (0, 0), EVEN), ("y", (1, 0), EVEN), ("xi", (0, 1), ODD), ("eta", (1, 1), ODD)])


def E(s):
    return C.expr(s)


def test_odd_coordinates_anticommute():
    assert E("xi*eta") == -E("eta*xi")
    assert E("xi*xi") == 0
    assert E("xi*eta + eta*xi") == 0


def test_render_is_canonical():
    assert E("(x+y)^2/2").render() == E("x^2/2 + x*y + y^2/2").render()
    assert E("0").render() == "0"
    assert E("3/6*x").render() == "1/2*x"


def test_left_and_right_derivatives():
    e = E("xi*eta")
    assert graded_derivative(e, "eta") == -E("xi")
    assert right_derivative(e, "eta") == E("xi")
    assert graded_derivative(e, "xi") == E("eta")
    assert graded_derivative(E("x^3*y"), "x") == E("3*x^2*y")


@pytest.mark.parametrize(
    "text,col",
    [("x + * y", 5), ("x + foo", 5), ("(x + y", 7), ("x ^ y", 5)],
)
def test_parse_errors_have_columns(text, col):
    with pytest.raises(ExprError) as info:
        E(text)
    assert f"column {col}" in str(info.value)


def test_function_symbols_and_their_derivatives():
    e = E("f(x)*xi")
    assert graded_derivative(e, "x") == E("f[x](x)*xi")
    assert graded_derivative(e, "xi") == E("f(x)")


def test_weights_and_parity():
    e = E("x + y*xi + eta")
    parts = weight_decompose(e)
    assert parts[Weight((0, 0))] == E("x")
    assert parts[Weight((1, 1))] == E("y*xi + eta")
    assert is_homogeneous(E("y*xi + x*eta")) == Weight((1, 1))
    assert is_homogeneous(e) is None
    assert parity_decompose(e)[ODD] == E("y*xi + eta")
    assert E("xi*eta").parity() == EVEN


def test_substitute_keeps_signs():
    e = E("xi*eta")
    assert substitute(e, {"xi": E("eta"), "eta": E("xi")}) == -e
    assert substitute(E("x^2"), {"x": E("x + y")}) == E("x^2 + 2*x*y + y^2")


def test_coefficients_in_parameter():
    pc = C.with_params("t")
    e = pc.expr("t*x + t^2*y + x*y")
    assert coefficient_in(e, "t", 2) == pc.expr("y")
    assert coefficient_in(e, "t", 0) == pc.expr("x*y")
    assert max_power(e, "t") == 2


coeff = st.fractions(min_value=-3, max_value=3, max_denominator=3)
names = st.sampled_from(["x", "y", "xi", "eta"])


@st.composite
def polys(draw):
    out = Expr.zero(C)
    for _ in range(draw(st.integers(0, 3))):
        m = Expr.const(C, draw(coeff))
        for n in draw(st.lists(names, max_size=3)):
            m = m * Expr.coord(C, n)
        out = out + m
    return out


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_laws(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), names)
def test_graded_leibniz(a, b, n):
    pa = parity_decompose(a)
    for p, part in pa.items():
        sign = -1 if (p and C[n].parity) else 1
        lhs = graded_derivative(part * b, n)
        rhs = graded_derivative(part, n) * b + part * graded_derivative(b, n) * sign
        assert lhs == rhs


@settings(max_examples=40, deadline=None)
@given(polys())
def test_render_parse_round_trip(a):
    assert E(a.render()) == a
