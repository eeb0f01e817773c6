"""Homogeneity actions and chart constructions.

Actions are polynomial in a formal parameter ``t`` (an even weight-zero
parameter coordinate added with :meth:`Chart.with_params`).  Chart
constructions append or fold weight components; momentum weights follow
the phase-lift rule ``degree_bound - weight(c)`` so nothing goes negative.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .fields import VecField, apply
from .grading import EVEN, ODD, Chart, ChartError, Coordinate, Weight
from .report import Check
from .symalg import (
    Expr,
    ExprError,
    FnApp,
    coefficient_in,
    graded_derivative,
    max_power,
    substitute,
)

__all__ = [
    "HomAction",
    "ActionError",
    "verify_action",
    "action_degree",
    "taylor_frame",
    "homogenize",
    "weight_vector_field",
    "tangent_chart",
    "cotangent_chart",
    "higher_tangent_chart",
    "parity_reverse",
    "collapse_weights",
    "permute_weights",
    "truncate_chart",
    "tangent_lift_poisson",
    "tangent_lift_field",
    "tangent_lift_map",
    "tangent_lift_action",
    "jet_lift_map",
    "phase_lift_action",
    "total_derivative",
]


class ActionError(ValueError):
    pass


def _weight_of(c: Coordinate, component: Optional[int]) -> int:
    return c.weight.total if component is None else c.weight[component]


class HomAction:
    """A polynomial family ``h(t, -)`` given by the images of the coordinates.

    ``images[c]`` is an expression on ``chart.with_params(param)``.
    Coordinates without an image are fixed.
    """

    def __init__(self, chart: Chart, images: Mapping[str, Expr], param: str = "t"):
        self.chart = chart
        self.param = param
        self.pchart = chart.with_params(param)
        imgs = {}
        for n in chart.names:
            if chart[n].param:
                continue
            e = images.get(n)
            if e is None:
                e = Expr.coord(self.pchart, n)
            elif isinstance(e, str):
                e = self.pchart.expr(e)
            elif e.chart != self.pchart:
                e = e.to_chart(self.pchart)
            imgs[n] = e
        for n in images:
            if n not in imgs:
                raise ActionError(f"action image given for unknown coordinate {n!r}")
        self.images = imgs

    @classmethod
    def canonical(cls, chart: Chart, component: Optional[int] = None, param: str = "t") -> "HomAction":
        """``c -> t^w c`` with ``w`` the total weight or one weight component."""
        pc = chart.with_params(param)
        t = Expr.coord(pc, param)
        return cls(
            chart,
            {c.name: (t ** _weight_of(c, component)) * Expr.coord(pc, c.name) for c in chart.geometric},
            param,
        )

    @classmethod
    def identity(cls, chart: Chart, param: str = "t") -> "HomAction":
        return cls(chart, {}, param)

    def __getitem__(self, name: str) -> Expr:
        return self.images[name]

    def at(self, value, chart: Optional[Chart] = None) -> Dict[str, Expr]:
        """Images with the parameter replaced by ``value`` (an Expr or number)."""
        target = chart or self.pchart
        if not isinstance(value, Expr):
            value = Expr.const(target, value)
        return {n: substitute(e, {self.param: value}, target) for n, e in self.images.items()}

    def pullback(self, f: Expr) -> Expr:
        """``h_t^*(f)`` on the parameter chart."""
        return substitute(f.to_chart(self.pchart) if f.chart != self.pchart else f, self.images, self.pchart)

    def is_diagonal(self, component: Optional[int] = None) -> bool:
        return self.images == HomAction.canonical(self.chart, component, self.param).images

    def render(self) -> Dict[str, str]:
        return {n: e.render() for n, e in self.images.items()}


def verify_action(h: HomAction, check_id: str = "action") -> Check:
    """Residuals of ``h_1 = id`` and ``h_t o h_s = h_{ts}``."""
    chk = Check(check_id)
    two = h.chart.with_params(h.param, "s")
    t = Expr.coord(two, h.param)
    s = Expr.coord(two, "s")
    lifted = {n: e.to_chart(two) for n, e in h.images.items()}
    h_s = {n: substitute(e, {h.param: s}, two) for n, e in lifted.items()}
    for n, e in h.images.items():
        one = substitute(e, {h.param: Expr.const(h.pchart, 1)}, h.pchart)
        chk.add(f"unit:{n}", one - Expr.coord(h.pchart, n))
    for n, e in lifted.items():
        comp = substitute(e, h_s, two)
        direct = substitute(e, {h.param: t * s}, two)
        chk.add(f"composition:{n}", comp - direct)
    return chk


def action_degree(h: HomAction) -> int:
    return max((max_power(e, h.param) for e in h.images.values()), default=0)


def _require_action(h: HomAction):
    chk = verify_action(h)
    if not chk.passed:
        raise ActionError("not a monoid action: " + "; ".join(f"{k}: {v}" for k, v in chk.residuals.items() if v != "0"))


def taylor_frame(h: HomAction) -> Dict[str, List[Expr]]:
    """For each coordinate the t-coefficients ``[h_c]_0 .. [h_c]_k`` of its image."""
    _require_action(h)
    k = action_degree(h)
    return {
        n: [coefficient_in(e, h.param, j).to_chart(h.chart) for j in range(k + 1)]
        for n, e in h.images.items()
    }


def _triangular_inverse(chart: Chart, change: Dict[str, Expr]) -> Dict[str, Expr]:
    """Invert ``c -> a*c + g(earlier coordinates)`` by forward substitution."""
    order = sorted(change, key=chart.rank)
    inv: Dict[str, Expr] = {}
    for n in order:
        e = change[n]
        lead = graded_derivative(e, n)
        a = lead.constant_term()
        rest = e - Expr.coord(chart, n) * a
        # rest only involves earlier coordinates, whose inverses are known
        rest_inv = substitute(rest, inv, chart)
        inv[n] = (Expr.coord(chart, n) - rest_inv) * (Fraction(1) / a)
    return inv


def homogenize(h: HomAction, component: Optional[int] = None) -> Dict[str, Expr]:
    """A triangular coordinate change making ``h`` canonical.

    The new coordinate replacing ``c`` (of weight ``w``) is the coefficient
    of ``t^w`` in ``h_t(c)``.  It must be a non-zero multiple of ``c`` plus
    terms in coordinates of strictly lower rank; otherwise the action is
    outside the supported class and :class:`ActionError` is raised.
    Only the coordinates that actually change are returned.
    """
    _require_action(h)
    chart = h.chart
    change: Dict[str, Expr] = {}
    for c in chart.geometric:
        w = _weight_of(c, component)
        phi = coefficient_in(h.images[c.name], h.param, w).to_chart(chart)
        lead = graded_derivative(phi, c.name)
        if lead.free_names() or lead.constant_term() == 0:
            raise ActionError(f"out of supported class: top coefficient of {c.name!r} is not invertible in {c.name!r}")
        for other in phi.free_names():
            if other != c.name and chart.rank(other) >= chart.rank(c.name):
                raise ActionError(
                    f"out of supported class: top coefficient of {c.name!r} depends on {other!r}"
                )
        change[c.name] = phi
    inv = _triangular_inverse(chart, change)
    # phi o h_t o phi^{-1} must be the canonical action
    pc = h.pchart
    canon = HomAction.canonical(chart, component, h.param)
    inv_p = {n: e.to_chart(pc) for n, e in inv.items()}
    for n, phi in change.items():
        conj = substitute(substitute(phi.to_chart(pc), h.images, pc), inv_p, pc)
        if conj != canon.images[n]:
            raise ActionError(f"out of supported class: conjugated action on {n!r} is {conj.render()}")
    return {n: e for n, e in change.items() if e != Expr.coord(chart, n)}


def apply_change(h: HomAction, change: Mapping[str, Expr]) -> HomAction:
    """The action expressed in the new coordinates ``c' = change[c]``."""
    chart = h.chart
    full = {n: change.get(n, Expr.coord(chart, n)) for n in chart.names if not chart[n].param}
    inv = _triangular_inverse(chart, full)
    pc = h.pchart
    inv_p = {n: e.to_chart(pc) for n, e in inv.items()}
    return HomAction(
        chart,
        {n: substitute(substitute(phi.to_chart(pc), h.images, pc), inv_p, pc) for n, phi in full.items()},
        h.param,
    )


def weight_vector_field(chart: Chart, component: Optional[int] = None) -> VecField:
    comps = {}
    for c in chart.geometric:
        w = _weight_of(c, component)
        if w:
            comps[c.name] = Expr.coord(chart, c.name) * w
    return VecField(chart, comps)


# ---------------------------------------------------------------------------
# chart constructions


def tangent_chart(chart: Chart, prefix: str = "d") -> Chart:
    """``TF``: each ``c`` gets a velocity ``prefix+c`` of weight ``(w(c), 1)``."""
    coords = [Coordinate(c.name, Weight(tuple(c.weight) + (0,)), c.parity) for c in chart.geometric]
    for c in chart.geometric:
        coords.append(Coordinate(prefix + c.name, Weight(tuple(c.weight) + (1,)), c.parity))
    return Chart(chart.arity + 1, tuple(coords), Weight(tuple(chart.degree_bound) + (1,)))


def cotangent_chart(chart: Chart, odd: bool = False, prefix: str = "p_", names: Optional[Mapping[str, str]] = None) -> Chart:
    """Phase-lifted cotangent chart.

    The momentum of ``c`` has weight ``(d - w(c), 1)`` with ``d`` the degree
    bound, and the parity of ``c`` (flipped when ``odd`` for the shifted
    cotangent bundle).  ``names`` may override momentum names.
    """
    d = chart.degree_bound
    coords = [Coordinate(c.name, Weight(tuple(c.weight) + (0,)), c.parity) for c in chart.geometric]
    pairs = []
    for c in chart.geometric:
        pname = (names or {}).get(c.name, prefix + c.name)
        coords.append(Coordinate(pname, Weight(tuple(d - c.weight) + (1,)), (c.parity + (1 if odd else 0)) % 2))
        pairs.append((pname, c.name))
    return Chart(chart.arity + 1, tuple(coords), Weight(tuple(d) + (1,)), tuple(pairs))


def base_of_cotangent(cot: Chart) -> Chart:
    """Strip the momenta and the last weight component."""
    moms = {p for p, _ in cot.pairs}
    coords = [Coordinate(c.name, Weight(c.weight[:-1]), c.parity) for c in cot.geometric if c.name not in moms]
    return Chart(cot.arity - 1, tuple(coords), Weight(cot.degree_bound[:-1]))


def pairing_weight(cot: Chart) -> Weight:
    """Weight of ``p_c c`` (the same for every pair on a phase-lifted chart)."""
    ws = {cot[p].weight + cot[c].weight for p, c in cot.pairs}
    if len(ws) != 1:
        raise ChartError("symplectic pairing is not homogeneous")
    return ws.pop()


def _jet_name(name: str, j: int) -> str:
    if j == 0:
        return name
    return ("d" if j == 1 else f"d{j}") + name


def higher_tangent_chart(chart: Chart, k: int, component: Optional[int] = None) -> Chart:
    """``T^k F``: copies ``c_0 .. c_k`` of each coordinate, ``c_j`` shifted by ``j``.

    With ``component=None`` the shift lives in a new last component;
    otherwise it is added to the existing weight component ``component``
    (so ``higher_tangent_chart(point, 2, component=0)`` is the usual
    ``T^2 M`` chart).  ``c_1`` is named ``d<c>``, ``c_j`` is ``d<j><c>``.
    """
    if k == 0:
        return chart
    coords = []
    for j in range(k + 1):
        for c in chart.geometric:
            if component is None:
                w = Weight(tuple(c.weight) + (j,))
            else:
                w = list(c.weight)
                w[component] += j
                w = Weight(w)
            coords.append(Coordinate(_jet_name(c.name, j), w, c.parity))
    if component is None:
        bound = Weight(tuple(chart.degree_bound) + (k,))
        arity = chart.arity + 1
    else:
        b = list(chart.degree_bound)
        b[component] += k
        bound, arity = Weight(b), chart.arity
    return Chart(arity, tuple(coords), bound)


def parity_reverse(chart: Chart, component: int, rename: Optional[Mapping[str, str]] = None) -> Chart:
    """Flip the parity of coordinates whose ``component`` weight is 1."""
    vals = {c.weight[component] for c in chart.geometric}
    if not vals <= {0, 1}:
        raise ChartError(f"weight component {component} is not linear (values {sorted(vals)})")
    coords = []
    for c in chart.coords:
        par = c.parity
        if not c.param and c.weight[component] == 1:
            par = 1 - par
        coords.append(Coordinate((rename or {}).get(c.name, c.name), c.weight, par, c.param))
    pairs = tuple(((rename or {}).get(p, p), (rename or {}).get(b, b)) for p, b in chart.pairs)
    return Chart(chart.arity, tuple(coords), chart.degree_bound, pairs)


def _fold(w: Sequence[int], comps: Sequence[int]) -> Weight:
    keep = min(comps)
    out = []
    for i, a in enumerate(w):
        if i == keep:
            out.append(sum(w[j] for j in comps))
        elif i not in comps:
            out.append(a)
    return Weight(out)


def collapse_weights(chart: Chart, components: Iterable[int]) -> Chart:
    """Sum the given weight components into one (placed at the smallest index)."""
    comps = sorted(set(components))
    if len(comps) <= 1:
        return chart
    coords = tuple(Coordinate(c.name, _fold(c.weight, comps), c.parity, c.param) for c in chart.coords)
    return Chart(chart.arity - len(comps) + 1, coords, _fold(chart.degree_bound, comps), chart.pairs)


def permute_weights(chart: Chart, order: Sequence[int]) -> Chart:
    """Reorder weight components: new component ``i`` is old component ``order[i]``."""
    if sorted(order) != list(range(chart.arity)):
        raise ChartError("not a permutation of the weight components")

    def perm(w):
        return Weight(w[i] for i in order)

    coords = tuple(Coordinate(c.name, perm(c.weight), c.parity, c.param) for c in chart.coords)
    return Chart(chart.arity, coords, perm(chart.degree_bound), chart.pairs)


def truncate_chart(chart: Chart, level: int, component: Optional[int] = None) -> Tuple[Chart, Dict[str, Expr]]:
    """Keep coordinates of weight at most ``level``; returns ``(chart, projection)``.

    The projection is the pullback of each retained coordinate (the
    coordinate itself on the original chart).
    """
    kept = [c for c in chart.geometric if _weight_of(c, component) <= level]
    if len(kept) == len(chart.geometric):
        small = chart
    else:
        names = {c.name for c in kept}
        bound = [max((c.weight[i] for c in kept), default=0) for i in range(chart.arity)]
        if component is not None:
            bound[component] = min(chart.degree_bound[component], level)
        pairs = tuple((p, b) for p, b in chart.pairs if p in names and b in names)
        small = Chart(chart.arity, tuple(kept), Weight(bound), pairs)
    return small, {c.name: Expr.coord(chart, c.name) for c in kept}


# ---------------------------------------------------------------------------
# lifts of functions, fields, maps and actions


def total_derivative(e: Expr, target: Chart, prefix: str = "d") -> Expr:
    """``d_T e = sum_c (prefix+c) * d e/dc`` on the tangent chart ``target``."""
    src = e.chart
    e_t = e.to_chart(target)
    out = Expr.zero(target)
    for c in src.geometric:
        d = graded_derivative(e_t, c.name)
        if d.terms:
            out = out + Expr.coord(target, prefix + c.name) * d
    return out


def tangent_lift_field(X: VecField, target: Optional[Chart] = None, prefix: str = "d") -> VecField:
    """Complete lift ``X^a d/da + d_T(X^a) d/d(da)`` on the tangent chart."""
    target = target or tangent_chart(X.chart, prefix)
    comps = {}
    for n, e in X.comps.items():
        comps[n] = e.to_chart(target)
        comps[prefix + n] = total_derivative(e, target, prefix)
    return VecField(target, comps)


def tangent_lift_map(
    sigma: Mapping[str, Expr], src: Chart, dst: Chart, src_t: Chart, dst_t: Chart, prefix: str = "d"
) -> Dict[str, Expr]:
    """Tangent map of the pullback ``sigma`` (dst coordinates -> exprs on src)."""
    out = {}
    for c in dst.geometric:
        f = sigma.get(c.name, None)
        if f is None:
            f = Expr.coord(src, c.name)
        out[c.name] = f.to_chart(src_t)
        out[prefix + c.name] = total_derivative(f, src_t, prefix)
    return out


def _jet_expand(e: Expr, src: Chart, jet: Chart, k: int, eps: str) -> Expr:
    """``e(x(eps))`` with ``x(eps) = sum_j eps^j x_j`` on ``jet.with_params(eps)``, truncated at ``eps^k``."""
    je = jet.with_params(eps)
    ep = Expr.coord(je, eps)
    curve = {}
    shift = {}
    for c in src.geometric:
        acc = Expr.zero(je)
        for j in range(1, k + 1):
            acc = acc + (ep ** j) * Expr.coord(je, _jet_name(c.name, j))
        shift[c.name] = acc
        curve[c.name] = Expr.coord(je, c.name) + acc

    def truncate(x: Expr) -> Expr:
        key = (1, je.rank(eps))
        return Expr(je, {m: v for m, v in x.terms.items() if dict(m).get(key, 0) <= k})

    def fn_image(f: FnApp) -> Expr:
        term = Expr.fn(je, f.name, f.args, f.derivs)
        acc = term
        for n in range(1, k + 1):
            nxt = Expr.zero(je)
            for a in set(f.args):
                nxt = nxt + shift[a] * graded_derivative(term, a)
            term = truncate(nxt * Fraction(1, n))
            acc = acc + term
        return acc

    return truncate(substitute(e, {n: curve[n] for n in curve}, je, fn_map=fn_image))


def jet_lift_map(sigma: Mapping[str, Expr], src: Chart, dst: Chart, k: int, component: Optional[int] = None, eps: str = "eps") -> Dict[str, Expr]:
    """``T^k`` of the pullback ``sigma``: ``c_j -> [sigma_c(x(eps))]_{eps^j}``."""
    src_k = higher_tangent_chart(src, k, component)
    out = {}
    for c in dst.geometric:
        f = sigma.get(c.name)
        if f is None:
            f = Expr.coord(src, c.name)
        expanded = _jet_expand(f, src, src_k, k, eps)
        for j in range(k + 1):
            out[_jet_name(c.name, j)] = coefficient_in(expanded, eps, j).to_chart(src_k)
    return out


def tangent_lift_action(h: HomAction, target: Optional[Chart] = None, prefix: str = "d") -> HomAction:
    """``Th_t``: ``dc -> d_T(h_t(c))`` with ``t`` held fixed."""
    target = target or tangent_chart(h.chart, prefix)
    tp = target.with_params(h.param)
    imgs = {}
    for n, e in h.images.items():
        imgs[n] = e.to_chart(tp)
        out = Expr.zero(tp)
        for c in h.chart.geometric:
            d = graded_derivative(e.to_chart(tp), c.name)
            if d.terms:
                out = out + Expr.coord(tp, prefix + c.name) * d
        imgs[prefix + n] = out
    return HomAction(target, imgs, h.param)


def phase_lift_action(h: HomAction, cot: Chart, component: Optional[int] = None) -> HomAction:
    """Phase lift of a diagonal action: ``p_c -> t^{d - w(c)} p_c``."""
    if not h.is_diagonal(component):
        raise ActionError("phase lift is only implemented for diagonal actions")
    pc = cot.with_params(h.param)
    t = Expr.coord(pc, h.param)
    d = h.chart.degree_bound
    dtot = d.total if component is None else d[component]
    imgs = {}
    for p, c in cot.pairs:
        w = _weight_of(h.chart[c], component)
        imgs[c] = (t ** w) * Expr.coord(pc, c)
        imgs[p] = (t ** (dtot - w)) * Expr.coord(pc, p)
    return HomAction(cot, imgs, h.param)


def tangent_lift_poisson(P: Expr, k: int = 1, prefix: str = "d") -> Expr:
    """Complete lift of a bivector written on a shifted cotangent chart, ``k`` times.

    One step: rename ``p_c -> p_{dc}`` and then apply the even derivation
    ``sum_c dc d/dc + p_c d/dp_{dc}``.
    """
    if k == 0:
        return P
    cot = P.chart
    if not cot.is_cotangent:
        raise ExprError("tangent lift of a bivector needs a cotangent chart")
    moms = [p for p, _ in cot.pairs]
    if P.terms and P.degree_in(moms) != {2}:
        raise ExprError("expression is not of momentum-degree 2")
    base = base_of_cotangent(cot)
    odd = all((cot[p].parity + cot[c].parity) % 2 == 1 for p, c in cot.pairs)
    tb = tangent_chart(base, prefix)
    mom_names = {}
    for p, c in cot.pairs:
        mom_names[c] = p
    # momentum names for velocities reuse the base naming pattern
    lifted_names = {c: mom_names[c] for c in mom_names}
    for c in list(mom_names):
        lifted_names[prefix + c] = _lift_mom_name(mom_names[c], c, prefix)
    tcot = cotangent_chart(tb, odd=odd, names=lifted_names)
    iota = {mom_names[c]: Expr.coord(tcot, lifted_names[prefix + c]) for c in mom_names}
    Q = substitute(P, iota, tcot)
    D = VecField(
        tcot,
        {
            **{c: Expr.coord(tcot, prefix + c) for c in mom_names},
            **{lifted_names[prefix + c]: Expr.coord(tcot, mom_names[c]) for c in mom_names},
        },
    )
    return tangent_lift_poisson(apply(D, Q), k - 1, prefix)


def _lift_mom_name(p: str, c: str, prefix: str) -> str:
    if p.endswith(c):
        return p[: len(p) - len(c)] + prefix + c
    return prefix + p
