"""Polynomial Lie groupoids in source-adapted coordinates and their Lie functor.

All structure maps are stored as pullbacks (coordinate -> expression):

* ``target``: base coordinate -> expression on ``gamma`` (the source is
  implicit: base coordinates are also gamma coordinates and ``s^*(b) = b``);
* ``unit``: gamma coordinate -> expression on ``base``;
* ``p1``, ``p2``, ``mult``: gamma coordinate -> expression on the
  composable chart ``K`` (pairs ``(g, h)`` with ``s(g) = t(h)``, product
  ``g*h``);
* ``inverse`` (optional): gamma coordinate -> expression on ``gamma``.

Every coordinate of ``K`` must be the pullback of some gamma coordinate
under ``p1`` or ``p2``; this is what allows arbitrary composable pairs of
points to be fed back into ``mult`` (see :meth:`GroupoidSpec.pair_point`).

The algebroid uses right-invariant fields: for a basis section ``e_I`` the
field is ``R_I(g) = d/de m((t(g), e*e_I), g)`` and the bracket is the
commutator of right-invariant fields restricted to the units.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .algebroids import AlgebroidData, algebroid_from_structure
from .fields import VecField, apply, canonical_poisson, lie_bracket
from .grading import ODD, Chart, ChartError, Coordinate, Weight
from .lifts import (
    HomAction,
    action_degree,
    cotangent_chart,
    higher_tangent_chart,
    jet_lift_map,
    phase_lift_action,
    truncate_chart,
    verify_action,
)
from .report import Check, Report, not_checked
from .symalg import Expr, ExprError, coefficient_in, graded_derivative, is_homogeneous, substitute

__all__ = [
    "GroupoidSpec",
    "GroupoidError",
    "WeightedGroupoid",
    "verify_groupoid",
    "verify_weighted_groupoid",
    "lie_functor",
    "lie_functor_action",
    "lie_functor_morphism",
    "poisson_weight_audit",
    "truncate_groupoid",
    "higher_tangent_groupoid",
]


class GroupoidError(ValueError):
    pass


Pullback = Dict[str, Expr]


def _compose(outer: Mapping[str, Expr], inner: Mapping[str, Expr], target: Chart) -> Pullback:
    """Pullback of ``f o g`` from ``f^* = outer`` and ``g^* = inner``."""
    return {n: substitute(e, inner, target) for n, e in outer.items()}


def _as_expr(e, chart: Chart) -> Expr:
    if isinstance(e, str):
        return chart.expr(e)
    if isinstance(e, Expr):
        return e if e.chart == chart else e.to_chart(chart)
    return Expr.const(chart, e)


def _full(m: Mapping, src: Chart, dst: Chart) -> Pullback:
    out = {}
    for c in dst.geometric:
        if c.name in m:
            out[c.name] = _as_expr(m[c.name], src)
        else:
            if c.name not in src:
                raise GroupoidError(f"map has no image for {c.name!r}")
            out[c.name] = Expr.coord(src, c.name)
    for n in m:
        if n not in dst:
            raise GroupoidError(f"image given for unknown coordinate {n!r}")
    return out


@dataclass
class GroupoidSpec:
    gamma: Chart
    base: Chart
    target: Pullback
    unit: Pullback
    composable: Chart
    p1: Pullback
    p2: Pullback
    mult: Pullback
    inverse: Optional[Pullback] = None
    triple: Optional[Tuple[Chart, Pullback, Pullback, Pullback]] = None
    name: str = ""
    _pair_index: Dict[str, Tuple[int, str]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for b in self.base.geometric:
            if b.name not in self.gamma:
                raise GroupoidError(f"gamma is not source-adapted: base coordinate {b.name!r} missing")
        self.target = _full(self.target, self.gamma, self.base) if self.target is not None else {}
        self.unit = _full(self.unit, self.base, self.gamma)
        self.p1 = _full(self.p1, self.composable, self.gamma)
        self.p2 = _full(self.p2, self.composable, self.gamma)
        self.mult = _full(self.mult, self.composable, self.gamma)
        if self.inverse is not None:
            self.inverse = _full(self.inverse, self.gamma, self.gamma)
        if self.triple is not None:
            K3, q1, q2, q3 = self.triple
            self.triple = (K3, _full(q1, K3, self.gamma), _full(q2, K3, self.gamma), _full(q3, K3, self.gamma))
        index = {}
        for kc in self.composable.geometric:
            e = Expr.coord(self.composable, kc.name)
            hit = None
            for which, proj in ((1, self.p1), (2, self.p2)):
                for c in self.gamma.geometric:
                    if proj[c.name] == e:
                        hit = (which, c.name)
                        break
                if hit:
                    break
            if hit is None:
                raise GroupoidError(
                    f"composable coordinate {kc.name!r} is not a projection of a gamma coordinate"
                )
            index[kc.name] = hit
        self._pair_index = index

    @property
    def fibers(self) -> List[str]:
        return [c.name for c in self.gamma.geometric if c.name not in self.base]

    def source(self) -> Pullback:
        return {b.name: Expr.coord(self.gamma, b.name) for b in self.base.geometric}

    def pair_point(self, a: Mapping[str, Expr], b: Mapping[str, Expr]) -> Pullback:
        """Pullback ``K -> X`` for a composable pair of points ``a, b`` (gamma pullbacks on X)."""
        return {k: (a if which == 1 else b)[c] for k, (which, c) in self._pair_index.items()}

    def product(self, a: Mapping[str, Expr], b: Mapping[str, Expr], chart: Chart) -> Pullback:
        return _compose(self.mult, self.pair_point(a, b), chart)

    def identity_point(self, chart: Optional[Chart] = None) -> Pullback:
        chart = chart or self.gamma
        return {c.name: Expr.coord(chart, c.name) for c in self.gamma.geometric}


def _residuals(chk: Check, label: str, lhs: Mapping[str, Expr], rhs: Mapping[str, Expr]):
    for n in lhs:
        chk.add(f"{label}:{n}", lhs[n] - rhs[n])


def verify_groupoid(G: GroupoidSpec) -> Report:
    rep = Report()
    gamma, base, K = G.gamma, G.base, G.composable
    src = G.source()

    chk = Check("groupoid.composable")
    _residuals(chk, "s.p1=t.p2", _compose(src, G.p1, K), _compose(G.target, G.p2, K))
    rep.add(chk)

    chk = Check("groupoid.source-target")
    _residuals(chk, "s.m=s.p2", _compose(src, G.mult, K), _compose(src, G.p2, K))
    _residuals(chk, "t.m=t.p1", _compose(G.target, G.mult, K), _compose(G.target, G.p1, K))
    rep.add(chk)

    chk = Check("groupoid.unit")
    ident_b = {b.name: Expr.coord(base, b.name) for b in base.geometric}
    _residuals(chk, "s.u=id", _compose(src, G.unit, base), ident_b)
    _residuals(chk, "t.u=id", _compose(G.target, G.unit, base), ident_b)
    g = G.identity_point()
    u_t = _compose(G.unit, G.target, gamma)
    u_s = _compose(G.unit, src, gamma)
    _residuals(chk, "u(t(g))*g=g", G.product(u_t, g, gamma), g)
    _residuals(chk, "g*u(s(g))=g", G.product(g, u_s, gamma), g)
    rep.add(chk)

    if G.inverse is None:
        rep.add(not_checked("groupoid.inverse", "no inverse map supplied"))
    else:
        chk = Check("groupoid.inverse")
        inv = G.inverse
        _residuals(chk, "g*inv(g)=u(t(g))", G.product(g, inv, gamma), u_t)
        _residuals(chk, "inv(g)*g=u(s(g))", G.product(inv, g, gamma), u_s)
        rep.add(chk)

    if G.triple is None:
        rep.add(not_checked("groupoid.associativity", "no triple-composable chart supplied"))
    else:
        K3, q1, q2, q3 = G.triple
        chk = Check("groupoid.associativity")
        left = G.product(G.product(q1, q2, K3), q3, K3)
        right = G.product(q1, G.product(q2, q3, K3), K3)
        _residuals(chk, "(gh)k=g(hk)", left, right)
        rep.add(chk)
    return rep


# ---------------------------------------------------------------------------
# weighted groupoids


@dataclass
class WeightedGroupoid:
    spec: GroupoidSpec
    action: HomAction
    base_action: Optional[HomAction] = None

    def __post_init__(self):
        if self.base_action is None:
            imgs = {}
            bp = self.spec.base.with_params(self.action.param)
            for b in self.spec.base.geometric:
                e = self.action.images[b.name]
                if e.free_names() - set(bp.names):
                    raise GroupoidError(
                        f"action on base coordinate {b.name!r} involves fibre coordinates; supply the base action"
                    )
                imgs[b.name] = e.to_chart(bp)
            self.base_action = HomAction(self.spec.base, imgs, self.action.param)

    @property
    def degree(self) -> int:
        return action_degree(self.action)


def verify_weighted_groupoid(W: WeightedGroupoid) -> Report:
    G = W.spec
    h, gb = W.action, W.base_action
    t = h.param
    rep = Report()
    rep.add(verify_action(h, "weighted.action"))
    rep.add(verify_action(gb, "weighted.base-action"))

    gp = G.gamma.with_params(t)
    bp = G.base.with_params(t)
    Kp = G.composable.with_params(t)
    lift = lambda m, ch: {n: e.to_chart(ch) for n, e in m.items()}  # noqa: E731

    src = lift(G.source(), gp)
    tgt = lift(G.target, gp)
    chk = Check("weighted.source-target")
    _residuals(chk, "s.h=g.s", _compose(src, h.images, gp), _compose(gb.images, src, gp))
    _residuals(chk, "t.h=g.t", _compose(tgt, h.images, gp), _compose(gb.images, tgt, gp))
    rep.add(chk)

    chk = Check("weighted.multiplicative")
    hp1 = _compose(h.images, lift(G.p1, Kp), Kp)
    hp2 = _compose(h.images, lift(G.p2, Kp), Kp)
    lhs = G.product(hp1, hp2, Kp)
    rhs = _compose(h.images, lift(G.mult, Kp), Kp)
    _residuals(chk, "h(gk)=h(g)h(k)", lhs, rhs)
    rep.add(chk)

    chk = Check("weighted.unit")
    _residuals(chk, "h.u=u.g", _compose(h.images, lift(G.unit, bp), bp), _compose(lift(G.unit, bp), gb.images, bp))
    rep.add(chk)
    return rep


# ---------------------------------------------------------------------------
# Lie functor


def _require_source_adapted(G: GroupoidSpec):
    for b in G.base.geometric:
        if G.unit[b.name] != Expr.coord(G.base, b.name):
            raise GroupoidError("unit is not source-adapted: base coordinates must be fixed")
    for y in G.fibers:
        if G.unit[y].terms:
            raise GroupoidError(f"unit is not source-adapted: fibre coordinate {y!r} must vanish")


def _algebroid_chart(G: GroupoidSpec, prefix: str = "d") -> Tuple[Chart, Dict[str, str]]:
    coords = [Coordinate(b.name, Weight(tuple(b.weight) + (0,)), b.parity) for b in G.base.geometric]
    theta = {}
    for y in G.fibers:
        c = G.gamma[y]
        theta[y] = prefix + y
        coords.append(Coordinate(prefix + y, Weight(tuple(c.weight) + (1,)), (c.parity + 1) % 2))
    bound = Weight(tuple(G.gamma.degree_bound) + (1 if G.fibers else 0,))
    return Chart(G.gamma.arity + 1, tuple(coords), bound), theta


def _at_units(e: Expr, G: GroupoidSpec, chart: Chart) -> Expr:
    """Restrict a gamma expression to the unit section and move it to ``chart``."""
    return substitute(e, {y: Expr.zero(G.gamma) for y in G.fibers}, G.gamma).to_chart(chart)


def right_invariant_fields(G: GroupoidSpec) -> Dict[str, VecField]:
    """``R_I`` for each fibre direction ``I`` as fields on gamma."""
    gamma = G.gamma
    ge = gamma.with_params("eps")
    eps = Expr.coord(ge, "eps")
    u_t = {n: e.to_chart(ge) for n, e in _compose(G.unit, G.target, gamma).items()}
    g = G.identity_point(ge)
    out = {}
    for I in G.fibers:
        a = dict(u_t)
        a[I] = a[I] + eps
        prod = G.product(a, g, ge)
        out[I] = VecField(gamma, {J: coefficient_in(e, "eps", 1).to_chart(gamma) for J, e in prod.items()})
    return out


def lie_functor(G: GroupoidSpec, prefix: str = "d", degree: Optional[int] = None) -> AlgebroidData:
    """The algebroid ``ker Ts`` at the units, with ``th^I = prefix + Y^I``."""
    _require_source_adapted(G)
    chart, theta = _algebroid_chart(G, prefix)
    anchor = {}
    for I in G.fibers:
        for b in G.base.geometric:
            rho = _at_units(graded_derivative(G.target[b.name], I), G, chart)
            if rho.terms:
                anchor[(theta[I], b.name)] = rho
    R = right_invariant_fields(G)
    structure = {}
    fibers = G.fibers
    for i, I in enumerate(fibers):
        for J in fibers[i + 1:]:
            br = lie_bracket(R[I], R[J])
            for Kk in fibers:
                c = _at_units(br[Kk], G, chart)
                if c.terms:
                    structure[(theta[I], theta[J], theta[Kk])] = c
    if degree is None:
        degree = G.gamma.degree_bound.total + 1
    return algebroid_from_structure(chart, anchor, structure, degree)


def lie_functor_action(W: WeightedGroupoid, prefix: str = "d") -> HomAction:
    """``Lie(h_t)``: base by the base action, ``th^I -> sum_J dh_t^*(Y^I)/dY^J|_units th^J``."""
    G = W.spec
    _require_source_adapted(G)
    chart, theta = _algebroid_chart(G, prefix)
    h = W.action
    cp = chart.with_params(h.param)
    gp = G.gamma.with_params(h.param)
    zero_fib = {y: Expr.zero(gp) for y in G.fibers}
    imgs = {}
    for b in G.base.geometric:
        imgs[b.name] = W.base_action.images[b.name].to_chart(cp)
    for I in G.fibers:
        acc = Expr.zero(cp)
        for J in G.fibers:
            d = substitute(graded_derivative(h.images[I], J), zero_fib, gp).to_chart(cp)
            if d.terms:
                acc = acc + d * Expr.coord(cp, theta[J])
        imgs[theta[I]] = acc
    return HomAction(chart, imgs, h.param)


def lie_functor_morphism(
    G1: GroupoidSpec,
    G2: GroupoidSpec,
    phi: Mapping[str, Expr],
    prefix: str = "d",
) -> Tuple[Pullback, Report]:
    """Fibre derivative at the units of a groupoid morphism ``phi^*: gamma2 -> gamma1``.

    Returns the algebroid pullback and a report with the morphism residuals
    (source/target/multiplication intertwining) and the Q-morphism residual.
    """
    phi = _full(phi, G1.gamma, G2.gamma)
    rep = Report()
    chk = Check("morphism.groupoid")
    # base map from phi restricted to units
    base_map = {b.name: _at_units(phi[b.name], G1, G1.base) for b in G2.base.geometric}
    _residuals(
        chk, "s2.phi=phi0.s1", _compose(G2.source(), phi, G1.gamma), _compose(base_map, G1.source(), G1.gamma)
    )
    _residuals(chk, "t2.phi=phi0.t1", _compose(G2.target, phi, G1.gamma), _compose(base_map, G1.target, G1.gamma))
    K1 = G1.composable
    lhs = _compose(phi, G1.mult, K1)
    rhs = G2.product(_compose(phi, G1.p1, K1), _compose(phi, G1.p2, K1), K1)
    _residuals(chk, "phi(gh)=phi(g)phi(h)", lhs, rhs)
    rep.add(chk)

    A1 = lie_functor(G1, prefix)
    A2 = lie_functor(G2, prefix)
    c1, th1 = _algebroid_chart(G1, prefix)
    c2, th2 = _algebroid_chart(G2, prefix)
    pull: Pullback = {}
    for b in G2.base.geometric:
        pull[b.name] = base_map[b.name].to_chart(c1)
    for I in G2.fibers:
        acc = Expr.zero(c1)
        for J in G1.fibers:
            d = _at_units(graded_derivative(phi[I], J), G1, c1)
            if d.terms:
                acc = acc + d * Expr.coord(c1, th1[J])
        pull[th2[I]] = acc
    qchk = Check("morphism.q")
    for y in c2.names:
        lhs = apply(A1.Q, pull[y])
        rhs = substitute(A2.Q[y], pull, c1)
        qchk.add(y, lhs - rhs)
    rep.add(qchk)
    return pull, rep


def poisson_weight_audit(W: WeightedGroupoid, Lam: Expr) -> Report:
    """Weight audits for a bivector ``Lam`` on the shifted cotangent chart of gamma."""
    G = W.spec
    cot = Lam.chart
    rep = Report()
    chk = Check("poisson.schouten")
    chk.add("{L,L}", canonical_poisson(Lam, Lam))
    rep.add(chk)
    moms = [p for p, _ in cot.pairs]
    if Lam.terms and Lam.degree_in(moms) != {2}:
        bad = Check("poisson.bivector")
        bad.failure = "not of momentum-degree 2"
        rep.add(bad)
        return rep
    if not W.action.is_diagonal():
        rep.add(not_checked("poisson.weight", "action is not diagonal in the given coordinates"))
        rep.add(not_checked("poisson.sharp-weights", "action is not diagonal in the given coordinates"))
    else:
        k = W.degree
        d = G.gamma.degree_bound.total
        ph = phase_lift_action(W.action, cot)
        tt = Expr.coord(ph.pchart, ph.param)
        wchk = Check("poisson.weight")
        wchk.add("h*L - t^(2d-k) L", ph.pullback(Lam) - (tt ** (2 * d - k)) * Lam.to_chart(ph.pchart))
        wchk.audit("weight", -k)
        rep.add(wchk)
        schk = Check("poisson.sharp-weights")
        for p, c in cot.pairs:
            e = graded_derivative(Lam, p)
            if e.terms:
                w = is_homogeneous(e)
                want = Weight((G.gamma[c].weight.total, 1))
                got = Weight((w.total - w[-1], w[-1])) if w is not None else None
                schk.add(c, "0" if got == want else f"{got} instead of {want}")
        rep.add(schk)
    rep.add(not_checked("poisson.multiplicative", "coisotropy of the multiplication graph is not tested"))
    return rep


# ---------------------------------------------------------------------------
# constructions


def _restrict(m: Mapping[str, Expr], keep_dst, src_small: Chart) -> Pullback:
    out = {}
    for n, e in m.items():
        if n not in keep_dst:
            continue
        bad = e.free_names() - set(src_small.names)
        if bad:
            raise GroupoidError(f"image of {n!r} depends on discarded coordinates {sorted(bad)}")
        out[n] = e.to_chart(src_small)
    return out


def truncate_groupoid(W: WeightedGroupoid, level: int) -> WeightedGroupoid:
    """The level-``level`` groupoid of the tower (coordinates of total weight <= level)."""
    G = W.spec
    gamma, _ = truncate_chart(G.gamma, level)
    base, _ = truncate_chart(G.base, level)
    K, _ = truncate_chart(G.composable, level)
    gk, bk = set(gamma.names), set(base.names)
    triple = None
    if G.triple is not None:
        K3, q1, q2, q3 = G.triple
        K3s, _ = truncate_chart(K3, level)
        triple = (K3s, _restrict(q1, gk, K3s), _restrict(q2, gk, K3s), _restrict(q3, gk, K3s))
    spec = GroupoidSpec(
        gamma,
        base,
        _restrict(G.target, bk, gamma),
        _restrict(G.unit, gk, base),
        K,
        _restrict(G.p1, gk, K),
        _restrict(G.p2, gk, K),
        _restrict(G.mult, gk, K),
        _restrict(G.inverse, gk, gamma) if G.inverse is not None else None,
        triple,
        G.name,
    )
    gp = gamma.with_params(W.action.param)
    action = HomAction(gamma, _restrict(W.action.images, gk, gp), W.action.param)
    return WeightedGroupoid(spec, action)


def higher_tangent_groupoid(G: GroupoidSpec, k: int = 1, component: Optional[int] = None) -> GroupoidSpec:
    """``T^k`` applied to every structure map (jets in a new weight component)."""

    def lift(m, src, dst):
        return jet_lift_map(m, src, dst, k, component)

    gamma_k = higher_tangent_chart(G.gamma, k, component)
    base_k = higher_tangent_chart(G.base, k, component)
    K_k = higher_tangent_chart(G.composable, k, component)
    triple = None
    if G.triple is not None:
        K3, q1, q2, q3 = G.triple
        K3k = higher_tangent_chart(K3, k, component)
        triple = (K3k, lift(q1, K3, G.gamma), lift(q2, K3, G.gamma), lift(q3, K3, G.gamma))
    return GroupoidSpec(
        gamma_k,
        base_k,
        lift(G.target, G.gamma, G.base),
        lift(G.unit, G.base, G.gamma),
        K_k,
        lift(G.p1, G.composable, G.gamma),
        lift(G.p2, G.composable, G.gamma),
        lift(G.mult, G.composable, G.gamma),
        lift(G.inverse, G.gamma, G.gamma) if G.inverse is not None else None,
        triple,
        G.name,
    )
