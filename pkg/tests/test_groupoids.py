import pytest

from conftest import load
from gradedkit.groupoids import (
    GroupoidError,
    GroupoidSpec,
    lie_functor,
    lie_functor_action,
    lie_functor_morphism,
    poisson_weight_audit,
    right_invariant_fields,
    verify_groupoid,
    verify_weighted_groupoid,
)
from gradedkit.algebroids import structure_from_q, verify_weighted_algebroid
from gradedkit.lifts import HomAction


@pytest.mark.parametrize(
    "fixture,name",
    [("pair_r2.gk", "pair2"), ("affine.gk", "affine"), ("pair_r.gk", "pairR"), ("action_groupoid.gk", "act")],
)
def test_fixture_groupoids_verify(fixture, name):
    G = load(fixture).groupoids[name]
    spec = getattr(G, "spec", G)
    rep = verify_groupoid(spec)
    assert rep.passed, rep.render()
    assert rep["groupoid.associativity"].verdict == "pass"
    A = lie_functor(spec)
    assert verify_weighted_algebroid(A)["algebroid.homological"].passed


def test_broken_unit_reports_unit_law():
    rep = verify_groupoid(load("broken_unit.gk").groupoids["broken"])
    assert rep["groupoid.unit"].residuals["g*u(s(g))=g:Y"] == "1"
    assert rep["groupoid.associativity"].verdict == "not-checked"


def test_one_factor_scaling_is_not_multiplicative():
    W = load("pair_f1_one_factor.gk").groupoids["pairF1"]
    rep = verify_weighted_groupoid(W)
    assert rep["weighted.action"].passed
    assert rep["weighted.multiplicative"].residuals["h(gk)=h(g)h(k):Y"] != "0"


def test_weighted_examples_pass():
    for fixture, name in (("pair_f1.gk", "pairF1"), ("action_groupoid.gk", "act"), ("unit_groupoid.gk", "unit")):
        rep = verify_weighted_groupoid(load(fixture).groupoids[name])
        assert rep.passed, rep.render()


def test_action_groupoid_anchor():
    A = lie_functor(load("action_groupoid.gk").groupoids["act"].spec)
    anchor, structure = structure_from_q(A)
    assert anchor == {("da", "y"): A.chart.expr("x")}
    assert A.degree == 3


def test_unit_groupoid_gives_zero_algebroid():
    W = load("unit_groupoid.gk").groupoids["unit"]
    A = lie_functor(W.spec)
    assert A.fibers == [] and A.Q.is_zero()


def test_trivial_action_lifts_to_trivial_action():
    d = load("pair_r2.gk")
    from gradedkit.groupoids import WeightedGroupoid

    G = d.groupoids["pair2"]
    W = WeightedGroupoid(G, HomAction.identity(G.gamma))
    act = lie_functor_action(W)
    assert all(e == act.pchart.expr(n) for n, e in act.images.items())


def test_right_invariant_fields_of_pair_groupoid():
    G = load("pair_r.gk").groupoids["pairR"]
    fields = right_invariant_fields(G)
    (R,) = fields.values()
    assert R.comps == {"Y": G.gamma.expr("1")}


def test_identity_morphism_differentiates_to_identity():
    G = load("pair_r2.gk").groupoids["pair2"]
    pull, rep = lie_functor_morphism(G, G, {n: G.gamma.expr(n) for n in G.gamma.names})
    assert rep.passed
    assert all(e.render() == n for n, e in pull.items())


def test_poisson_weight_audit_negative_control():
    d = load("pair_f1.gk")
    W, cot = d.groupoids["pairF1"], d.charts["PiTGamma"]
    assert poisson_weight_audit(W, cot.expr("p_X*p_Y")).passed
    bad = poisson_weight_audit(W, cot.expr("p_x*p_X"))
    assert not bad["poisson.weight"].passed
    assert bad["poisson.multiplicative"].verdict == "not-checked"


def test_non_projection_composable_coordinate_rejected():
    G = load("pair_r.gk").groupoids["pairR"]
    with pytest.raises(GroupoidError):
        GroupoidSpec(G.gamma, G.base, G.target, G.unit, G.composable, G.p2, G.p2, G.mult)
