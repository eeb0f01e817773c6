from hypothesis import given, settings
from hypothesis import strategies as st

from gradedkit.fields import (
    VecField,
    apply,
    canonical_poisson,
    derived_bracket,
    hamiltonian_field,
    is_homological,
    lie_bracket,
    symbol,
)
from gradedkit.grading import EVEN, ODD, mk_chart
from gradedkit.lifts import cotangent_chart
from gradedkit.symalg import Expr

PiTM = mk_chart(2, [("x", (0, 0), EVEN), ("y", (0, 0), EVEN), ("xi", (0, 1), ODD), ("eta", (0, 1), ODD)])
SO3 = mk_chart(2, [("e1", (0, 1), ODD), ("e2", (0, 1), ODD), ("e3", (0, 1), ODD)])


def de_rham():
    return VecField(PiTM, {"x": PiTM.expr("xi"), "y": PiTM.expr("eta")})


def so3():
    e = SO3.expr
    return VecField(SO3, {"e1": e("-e2*e3"), "e2": e("-e3*e1"), "e3": e("-e1*e2")})


def test_de_rham_on_functions():
    assert apply(de_rham(), PiTM.expr("x")) == PiTM.expr("xi")
    assert apply(de_rham(), PiTM.expr("x*y")) == PiTM.expr("xi*y + x*eta")


def test_homological_fields():
    for Q in (de_rham(), so3()):
        chk = is_homological(Q)
        assert chk.passed
    assert lie_bracket(de_rham(), de_rham()).is_zero()


def test_coordinate_fields_commute_under_de_rham():
    A = VecField.partial(PiTM, "xi")
    B = VecField.partial(PiTM, "eta")
    assert derived_bracket(de_rham(), A, B).is_zero()


def test_so3_derived_bracket_reads_structure_constants():
    A = VecField.partial(SO3, "e1")
    B = VecField.partial(SO3, "e2")
    assert derived_bracket(so3(), A, B) == VecField.partial(SO3, "e3")


def test_bracket_graded_antisymmetry():
    X = VecField(PiTM, {"x": PiTM.expr("xi*y")})
    Y = VecField(PiTM, {"eta": PiTM.expr("x")})
    sign = -((-1) ** (X.parity() * Y.parity()))
    assert lie_bracket(X, Y) == lie_bracket(Y, X) * sign


def test_canonical_poisson_and_hamiltonian_field():
    cot = cotangent_chart(mk_chart(1, [("x", (0,), EVEN), ("y", (0,), EVEN)]))
    assert canonical_poisson(cot.expr("p_x"), cot.expr("x")) == 1
    H = cot.expr("x*p_y")
    X = hamiltonian_field(H)
    assert apply(X, cot.expr("y")) == canonical_poisson(H, cot.expr("y"))


def test_symbol_of_de_rham_is_schouten_zero():
    cot = cotangent_chart(PiTM)
    S = symbol(de_rham(), cot)
    assert S == cot.expr("xi*p_x + eta*p_y")
    assert canonical_poisson(S, S) == 0


E3 = mk_chart(1, [("a", (0,), EVEN), ("b", (0,), EVEN)])
COT = cotangent_chart(E3)
gens = st.sampled_from(["a", "b", "p_a", "p_b"])


@st.composite
def ham(draw):
    out = Expr.zero(COT)
    for _ in range(draw(st.integers(1, 3))):
        m = Expr.const(COT, draw(st.integers(-2, 2)))
        for n in draw(st.lists(gens, max_size=3)):
            m = m * Expr.coord(COT, n)
        out = out + m
    return out


@settings(max_examples=40, deadline=None)
@given(ham(), ham(), ham())
def test_poisson_jacobi(f, g, h):
    P = canonical_poisson
    assert P(f, P(g, h)) == P(P(f, g), h) + P(g, P(f, h))
