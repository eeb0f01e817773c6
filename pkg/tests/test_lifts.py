import pytest

from conftest import load
from gradedkit.fields import canonical_poisson
from gradedkit.grading import EVEN, ODD, Weight, mk_chart
from gradedkit.lifts import (
    ActionError,
    HomAction,
    action_degree,
    cotangent_chart,
    higher_tangent_chart,
    homogenize,
    parity_reverse,
    phase_lift_action,
    tangent_chart,
    tangent_lift_action,
    tangent_lift_poisson,
    taylor_frame,
    truncate_chart,
    verify_action,
    weight_vector_field,
)

M = mk_chart(1, [("x", (0,), EVEN)])


def test_higher_tangent_of_base_is_t2m():
    T2 = higher_tangent_chart(M, 2, component=0)
    assert {c.name: c.weight for c in T2.geometric} == {"x": (0,), "dx": (1,), "d2x": (2,)}
    assert T2.degree_bound == Weight((2,))
    assert higher_tangent_chart(M, 0) is M


def test_tangent_and_cotangent_weights():
    F = mk_chart(1, [("x", (0,), EVEN), ("y", (1,), EVEN)])
    T = tangent_chart(F)
    assert {c.name: c.weight for c in T.geometric} == {"x": (0, 0), "y": (1, 0), "dx": (0, 1), "dy": (1, 1)}
    P = cotangent_chart(F, odd=True)
    assert P["p_x"].weight == Weight((1, 1)) and P["p_x"].parity == ODD
    assert P["p_y"].weight == Weight((0, 1))


def test_parity_reverse_requires_linear_component():
    T = tangent_chart(M)
    assert parity_reverse(T, 1)["dx"].parity == ODD
    T2 = higher_tangent_chart(M, 2, component=0)
    with pytest.raises(Exception):
        parity_reverse(T2, 0)


def test_truncation_tower():
    T2 = higher_tangent_chart(M, 2, component=0)
    assert truncate_chart(T2, 1)[0].names == ("x", "dx")
    assert truncate_chart(T2, 0)[0].names == ("x",)
    assert truncate_chart(T2, 2)[0] is T2


def test_weight_vector_field():
    T2 = load("t2m.gk").charts["T2M"]
    D = weight_vector_field(T2)
    assert D.comps == {n: T2.expr(f"{k}*{n}") for n, k in (("dx", 1), ("dy", 1), ("d2x", 2), ("d2y", 2))}


def test_non_action_residuals():
    pc = M.with_params("t")
    chk = verify_action(HomAction(M, {"x": pc.expr("x + t")}))
    assert chk.residuals == {"unit:x": "1", "composition:x": "s + t - s*t"}


def test_identity_action_has_degree_zero():
    assert action_degree(HomAction.identity(M)) == 0
    assert action_degree(load("t2m.gk").actions["h"]) == 2


def test_taylor_frame_of_xyw():
    h = load("homogenize_xyw.gk").actions["h"]
    frame = taylor_frame(h)
    c = h.chart
    assert frame["w"] == [c.expr("0"), c.expr("x*y"), c.expr("w - x*y")]


def test_homogenize_refuses_non_triangular():
    ch = mk_chart(1, [("x", (0,), EVEN), ("w", (1,), EVEN), ("y", (2,), EVEN)])
    pc = ch.with_params("t")
    h = HomAction(ch, {"w": pc.expr("t*(w - y) + t^2*y"), "y": pc.expr("t^2*y")})
    assert verify_action(h).passed
    with pytest.raises(ActionError, match="out of supported class"):
        homogenize(h)


def test_homogenize_canonical_is_empty():
    assert homogenize(load("t2m.gk").actions["h"]) == {}


def test_tangent_and_phase_lifts_are_actions():
    h = load("homogenize_xyw.gk").actions["h"]
    Th = tangent_lift_action(h)
    assert verify_action(Th).passed
    assert Th.images["dw"] == Th.pchart.expr("t^2*dw + (t - t^2)*(dx*y + x*dy)")
    d = load("t2m.gk")
    cot = cotangent_chart(d.charts["T2M"])
    ph = phase_lift_action(d.actions["h"], cot)
    assert verify_action(ph).passed
    assert ph.images["p_x"] == ph.pchart.expr("t^2*p_x")


def test_tangent_lift_of_poisson_is_poisson():
    R2 = mk_chart(1, [("x", (0,), EVEN), ("y", (0,), EVEN)])
    cot = cotangent_chart(R2, odd=True)
    P = cot.expr("x*p_x*p_y")
    L = tangent_lift_poisson(P)
    assert canonical_poisson(L, L) == 0
    assert "p_dx*p_y" in L.render()
