"""Lie algebroids as homological fields on parity-reversed GL-bundle charts.

Charts are bi-graded ``(h, l)``: the last weight component ``l`` marks the
odd linear fibre coordinates (``l = 1``).  For a degree-``k`` algebroid the
degree bound is ``(k-1, 1)``.

The homological field is
``Q = th^a rho_a^A d/dx^A + 1/2 th^a th^b C_ba^c d/dth^c`` and the bracket of
basis sections is read off as ``[[Q, d/dth^a], d/dth^b] = C_ab^c d/dth^c``.
A section ``s`` of weight ``r`` is the vertical field ``i_s = s^I(x) d/dth^I``
of bi-weight ``(r - k, -1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .fields import (
    VecField,
    apply,
    canonical_poisson,
    derived_bracket,
    hamiltonian_field,
    is_homological,
    lie_bracket,
    symbol,
)
from .grading import EVEN, ODD, Chart, ChartError, Weight
from .lifts import HomAction, collapse_weights, cotangent_chart, parity_reverse, tangent_chart, truncate_chart
from .report import Check, Report, not_checked
from .symalg import Expr, ExprError, graded_derivative, is_homogeneous, right_derivative, substitute

__all__ = [
    "AlgebroidData",
    "AlgebroidError",
    "Section",
    "algebroid_from_structure",
    "structure_from_q",
    "verify_weighted_algebroid",
    "tower_project",
    "make_section",
    "section_bracket",
    "anchor_apply",
    "BiAlgebroidData",
    "bi_algebroid_from_algebroid",
    "triangular_bi_algebroid",
    "verify_bi_algebroid",
    "sharp_map",
    "CourantData",
    "courant_from_bi_algebroid",
    "courant_pairing",
    "courant_dorfman",
    "courant_anchor",
    "loday_residual",
]


class AlgebroidError(ValueError):
    pass


def _fiber_names(chart: Chart) -> List[str]:
    lin = chart.arity - 1
    return [c.name for c in chart.geometric if c.weight[lin] == 1]


def _base_names(chart: Chart) -> List[str]:
    lin = chart.arity - 1
    return [c.name for c in chart.geometric if c.weight[lin] == 0]


@dataclass
class AlgebroidData:
    chart: Chart
    Q: VecField
    degree: int
    action: Optional[HomAction] = None

    def __post_init__(self):
        lin = self.chart.arity - 1
        for c in self.chart.geometric:
            if c.weight[lin] not in (0, 1):
                raise AlgebroidError(f"coordinate {c.name!r} is not of linear weight 0 or 1")
            if c.weight[lin] == 1 and c.parity != ODD:
                raise AlgebroidError(f"fibre coordinate {c.name!r} must be odd")
        if self.Q.chart != self.chart:
            raise AlgebroidError("Q lives on a different chart")

    @property
    def fibers(self) -> List[str]:
        return _fiber_names(self.chart)

    @property
    def bases(self) -> List[str]:
        return _base_names(self.chart)

    def __eq__(self, other):
        return (
            isinstance(other, AlgebroidData)
            and self.chart == other.chart
            and self.Q == other.Q
            and self.degree == other.degree
        )


def _antisymmetrized(structure: Mapping[Tuple[str, str, str], Expr], chart: Chart):
    C: Dict[Tuple[str, str, str], Expr] = {}
    for (a, b, c), e in structure.items():
        if not isinstance(e, Expr):
            e = Expr.const(chart, e)
        C[(a, b, c)] = e.to_chart(chart)
    out: Dict[Tuple[str, str, str], Expr] = {}
    for (a, b, c), e in C.items():
        other = C.get((b, a, c))
        if other is None:
            out[(a, b, c)] = e
            out[(b, a, c)] = -e
        else:
            half = (e - other) * Fraction(1, 2)
            out[(a, b, c)] = half
            out[(b, a, c)] = -half
    return out


def algebroid_from_structure(
    chart: Chart,
    anchor: Mapping[Tuple[str, str], Expr],
    structure: Mapping[Tuple[str, str, str], Expr],
    degree: int = 1,
    action: Optional[HomAction] = None,
) -> AlgebroidData:
    """Assemble ``Q`` from ``anchor[(a, A)] = rho_a^A`` and ``structure[(a, b, c)] = C_ab^c``.

    Missing mirror entries ``C_ba^c`` are filled by antisymmetry; given
    pairs are antisymmetrized.
    """
    fibers = set(_fiber_names(chart))
    bases = set(_base_names(chart))
    comps: Dict[str, Expr] = {}
    for (a, A), rho in anchor.items():
        if a not in fibers or A not in bases:
            raise AlgebroidError(f"anchor index ({a}, {A}) does not match the chart")
        rho = rho if isinstance(rho, Expr) else Expr.const(chart, rho)
        term = Expr.coord(chart, a) * rho.to_chart(chart)
        comps[A] = comps[A] + term if A in comps else term
    for (a, b, c), e in _antisymmetrized(structure, chart).items():
        if not {a, b, c} <= fibers:
            raise AlgebroidError(f"structure index ({a}, {b}, {c}) does not match the chart")
        # 1/2 th^b th^a C_ab^c, summed over ordered pairs
        term = Expr.coord(chart, b) * Expr.coord(chart, a) * e * Fraction(1, 2)
        comps[c] = comps[c] + term if c in comps else term
    return AlgebroidData(chart, VecField(chart, comps), degree, action)


def structure_from_q(A: AlgebroidData):
    """Inverse of :func:`algebroid_from_structure`: ``(anchor, structure)`` dicts.

    Only non-zero entries are returned; ``structure`` holds every ordered
    pair ``(a, b)``.
    """
    chart = A.chart
    fibers, bases = A.fibers, A.bases
    for n, e in A.Q.comps.items():
        expected = 1 if n in bases else 2
        if e.degree_in(fibers) != {expected}:
            raise AlgebroidError(
                f"component along {n!r} is not of fibre degree {expected}; not an algebroid field"
            )
    anchor = {}
    for a in fibers:
        for X in bases:
            rho = graded_derivative(A.Q[X], a)
            if rho.terms:
                anchor[(a, X)] = rho
    structure = {}
    for a in fibers:
        for b in fibers:
            for c in fibers:
                # C_ab^c = d_a d_b Q^c with d_b applied first
                e = graded_derivative(graded_derivative(A.Q[c], b), a)
                if e.terms:
                    structure[(a, b, c)] = e
    return anchor, structure


def _field_residual(chk: Check, label: str, X: VecField):
    if not X.comps:
        chk.add(label, "0")
    for n, e in X.comps.items():
        chk.add(f"{label}^{n}", e)


def verify_weighted_algebroid(A: AlgebroidData, action: Optional[HomAction] = None) -> Report:
    """Homological, bi-weight ``(0, 1)`` and action-equivariance residuals.

    ``action`` defaults to ``A.action`` and then to the canonical action of
    the first weight component.
    """
    rep = Report()
    chart = A.chart
    rep.add(is_homological(A.Q, "algebroid.homological"))

    wchk = Check("algebroid.weight")
    target = Weight((0,) * (chart.arity - 1) + (1,))
    off = VecField(chart, {})
    for w, part in A.Q.weight_parts().items():
        if w != target:
            off = off + part
    _field_residual(wchk, "off-weight", off)
    wchk.audit("target", target)
    rep.add(wchk)

    dchk = Check("algebroid.degree")
    db = chart.degree_bound
    ok = sum(db[:-1]) <= A.degree - 1 and db[-1] <= 1
    dchk.add("bound", "0" if ok else f"degree bound {db} does not fit degree {A.degree}")
    dchk.audit("declared", A.degree)
    rep.add(dchk)

    h = action or A.action or HomAction.canonical(chart, 0)
    echk = Check("algebroid.equivariance")
    pc = h.pchart
    Qp = VecField(pc, {n: e.to_chart(pc) for n, e in A.Q.comps.items()})
    for c in chart.geometric:
        lhs = apply(Qp, h.images[c.name])
        rhs = h.pullback(A.Q[c.name])
        echk.add(c.name, lhs - rhs)
    rep.add(echk)
    return rep


def tower_project(A: AlgebroidData, j: int) -> AlgebroidData:
    """Restrict to the level-``j`` algebroid (coordinates with first weight ``< j``)."""
    if not 1 <= j < A.degree:
        raise AlgebroidError(f"tower level must satisfy 1 <= j < {A.degree}")
    small, _ = truncate_chart(A.chart, j - 1, component=0)
    # truncate_chart sizes the bound from the kept coordinates; keep the
    # linear component at 1
    bound = list(small.degree_bound)
    bound[-1] = 1
    small = Chart(small.arity, small.coords, Weight(bound), small.pairs)
    keep = set(small.names)
    comps = {}
    for n, e in A.Q.comps.items():
        if n not in keep:
            continue
        bad = e.free_names() - keep
        if bad:
            raise AlgebroidError(
                f"component along {n!r} depends on discarded coordinates {sorted(bad)}"
            )
        comps[n] = e.to_chart(small)
    action = None
    if A.action is not None:
        imgs = {}
        sp = small.with_params(A.action.param)
        for n in small.names:
            e = A.action.images[n]
            bad = e.free_names() - keep - {A.action.param}
            if bad:
                raise AlgebroidError(f"action on {n!r} depends on discarded coordinates {sorted(bad)}")
            imgs[n] = e.to_chart(sp)
        action = HomAction(small, imgs, A.action.param)
    return AlgebroidData(small, VecField(small, comps), j, action)


# ---------------------------------------------------------------------------
# sections


@dataclass
class Section:
    field: VecField
    weight: int


def _check_interior(A: AlgebroidData, X: VecField):
    fibers = set(A.fibers)
    for n, e in X.comps.items():
        if n not in fibers:
            raise AlgebroidError(f"not an interior product: component along base coordinate {n!r}")
        if e.free_names() & fibers:
            raise AlgebroidError(f"not an interior product: coefficient of d/d{n} depends on the fibre")


def make_section(A: AlgebroidData, coeffs: Mapping[str, Expr], weight: Optional[int] = None) -> Section:
    chart = A.chart
    X = VecField(chart, {n: (e if isinstance(e, Expr) else Expr.const(chart, e)) for n, e in coeffs.items()})
    _check_interior(A, X)
    w = X.weight()
    if w is not None:
        r = w[0] + A.degree
        if weight is not None and weight != r:
            raise AlgebroidError(f"declared section weight {weight} but the field gives {r}")
        weight = r
    elif X.comps:
        raise AlgebroidError("section is not homogeneous")
    return Section(X, weight if weight is not None else 0)


def section_bracket(A: AlgebroidData, s1: Section, s2: Section) -> Section:
    """``i_[s1,s2] = [[Q, i_s1], i_s2]`` with the weight ``r1 + r2 - k`` asserted."""
    X = derived_bracket(A.Q, s1.field, s2.field)
    _check_interior(A, X)
    expected = s1.weight + s2.weight - A.degree
    w = X.weight()
    if X.comps:
        if w is None:
            raise AlgebroidError("bracket is not homogeneous")
        target = Weight((expected - A.degree,) + tuple(w[1:-1]) + (-1,))
        if w[0] + A.degree != expected or w[-1] != -1:
            raise AlgebroidError(f"bracket has field weight {w}, expected {target}")
    return Section(X, expected)


def anchor_apply(A: AlgebroidData, s: Section, f: Expr) -> Expr:
    """``rho(s)[f] = [Q, i_s](f)`` for a base function ``f``."""
    if set(A.fibers) & f.free_names():
        raise AlgebroidError("anchor acts on base functions only")
    return apply(lie_bracket(A.Q, s.field), f.to_chart(A.chart))


# ---------------------------------------------------------------------------
# bi-algebroids


@dataclass
class BiAlgebroidData:
    """Generators on the cotangent chart of a parity-reversed GL-bundle (tri-graded)."""

    chart: Chart
    Qh: Expr
    S: Expr
    degree: int

    @property
    def base_chart(self) -> Chart:
        from .lifts import base_of_cotangent

        return base_of_cotangent(self.chart)


def bi_algebroid_from_algebroid(A: AlgebroidData, S: Optional[Expr] = None, momentum_names: Optional[Mapping[str, str]] = None) -> BiAlgebroidData:
    """``Qh = symbol(Q)`` on ``T*(Pi D)``; ``S`` defaults to 0."""
    names = dict(momentum_names or {})
    for n in A.fibers:
        names.setdefault(n, "chi_" + n)
    cot = cotangent_chart(A.chart, names=names)
    Qh = symbol(A.Q, cot)
    if S is None:
        S = Expr.zero(cot)
    elif isinstance(S, str):
        S = cot.expr(S)
    return BiAlgebroidData(cot, Qh, S.to_chart(cot), A.degree)


def triangular_bi_algebroid(A: AlgebroidData, P: Expr, momentum_names=None) -> BiAlgebroidData:
    """``S = {Qh, P}`` for a fibre-quadratic ``P`` in the dual-fibre momenta."""
    B = bi_algebroid_from_algebroid(A, None, momentum_names)
    if isinstance(P, str):
        P = B.chart.expr(P)
    P = P.to_chart(B.chart)
    return BiAlgebroidData(B.chart, B.Qh, canonical_poisson(B.Qh, P), B.degree)


def _weight_residual(e: Expr, target: Weight) -> str:
    if not e.terms:
        return "0"
    w = is_homogeneous(e)
    if w == target:
        return "0"
    return f"weight {w if w is not None else 'inhomogeneous'} instead of {target}"


def verify_bi_algebroid(B: BiAlgebroidData) -> Report:
    rep = Report()
    k = B.degree
    c = Check("bialgebroid.brackets")
    c.add("{Q,Q}", canonical_poisson(B.Qh, B.Qh))
    c.add("{S,S}", canonical_poisson(B.S, B.S))
    c.add("{Q,S}", canonical_poisson(B.Qh, B.S))
    rep.add(c)
    w = Check("bialgebroid.weights")
    tq = Weight((k - 1, 2, 1))
    ts = Weight((k - 1, 1, 2))
    w.add("Q", _weight_residual(B.Qh, tq))
    w.add("S", _weight_residual(B.S, ts))
    w.audit("Q target", tq)
    w.audit("S target", ts)
    rep.add(w)
    return rep


def sharp_map(B: BiAlgebroidData, prefix: str = "d"):
    """The fibre-wise map ``T*(Pi D) -> Pi T(Pi D)`` of ``S`` and its Q-morphism report.

    Returns ``(target_chart, pullback, report)``.  The pullback sends
    ``dx -> dS/dp_x`` and ``dth -> dS/dchi`` (left derivatives) and fixes
    ``x, th``; ``prefix`` gets underscores appended if it would clash
    with existing names.  On the target the field is ``L_Q = [i_Q, d]`` where ``d`` is
    the de Rham field and ``i_Q = Q^c d/d(dc)``; the report carries
    ``{Qh, phi^* y} - phi^*(L_Q y)`` for every generator ``y``.
    """
    cot = B.chart
    base = B.base_chart
    # extend the prefix until the tangent names are fresh (the base may already hold dx)
    while any(prefix + c in base for c in base.names):
        prefix += "_"
    lin = base.arity  # tangent direction component on the target
    target = parity_reverse(tangent_chart(base, prefix), lin)
    pull: Dict[str, Expr] = {}
    for mom, c in cot.pairs:
        pull[c] = Expr.coord(cot, c)
        pull[prefix + c] = graded_derivative(B.S, mom)
    # algebroid field from the symbol: Q^c = dQh/dp_c (right derivative)
    Qc = {c: right_derivative(B.Qh, mom) for mom, c in cot.pairs}
    Qc_t = {c: substitute(e, {}, target) if not (e.free_names() - set(base.names)) else None for c, e in Qc.items()}
    rep = Report()
    chk = Check("sharp.q-morphism")
    if any(v is None for v in Qc_t.values()):
        chk.failure = "Qh is not the symbol of a field on the base"
        rep.add(chk)
        return target, pull, rep
    d = VecField(target, {c: Expr.coord(target, prefix + c) for c in base.names})
    iQ = VecField(target, {prefix + c: e for c, e in Qc_t.items()})
    LQ = lie_bracket(iQ, d)
    for y in target.names:
        lhs = canonical_poisson(B.Qh, substitute(Expr.coord(target, y), pull, cot))
        rhs = substitute(apply(LQ, Expr.coord(target, y)), pull, cot)
        chk.add(y, lhs - rhs)
    rep.add(chk)
    wchk = Check("sharp.weights")
    for y, e in pull.items():
        wt = target[y].weight
        wchk.add(y, _weight_residual(e, wt))
    rep.add(wchk)
    return target, pull, rep


# ---------------------------------------------------------------------------
# Courant algebroids


@dataclass
class CourantData:
    chart: Chart
    theta: Expr
    lam: Fraction
    degree: int


def courant_from_bi_algebroid(B: BiAlgebroidData, lam=1) -> Tuple[CourantData, Report]:
    """``Theta = Qh + lam*S`` on the chart with the last two weights summed."""
    lam = Fraction(lam)
    chart = collapse_weights(B.chart, {1, 2})
    theta = (B.Qh + B.S * lam).to_chart(chart)
    rep = Report()
    chk = Check("courant.theta")
    chk.add("{Theta,Theta}", canonical_poisson(theta, theta))
    chk.add("weight", _weight_residual(theta, Weight((B.degree - 1, 3))))
    from .lifts import pairing_weight

    chk.audit("symplectic weight", pairing_weight(chart))
    rep.add(chk)
    return CourantData(chart, theta, lam, B.degree), rep


def _is_section(C: CourantData, s: Expr) -> bool:
    if not s.terms:
        return True
    w = is_homogeneous(s)
    return w is not None and w[1] == 1


def _require_section(C: CourantData, s: Expr):
    if not _is_section(C, s):
        raise AlgebroidError(f"{s.render()} is not a homogeneous section (bi-weight (r-1, 1))")


def _drop(C: CourantData, out: Expr, s1: Expr, s2: Expr) -> Optional[Weight]:
    if not out.terms or not s1.terms or not s2.terms:
        return None
    return is_homogeneous(out) - is_homogeneous(s1) - is_homogeneous(s2)


def courant_pairing(C: CourantData, s1: Expr, s2: Expr) -> Tuple[Expr, Check]:
    _require_section(C, s1)
    _require_section(C, s2)
    out = canonical_poisson(s1, s2)
    chk = Check("courant.pairing")
    moms = {p for p, _ in C.chart.pairs}
    fibre = {n for n in C.chart.names if C.chart[n].weight[1] > 0}
    chk.add("base function", "0" if not (out.free_names() & fibre) else out)
    drop = _drop(C, out, s1, s2)
    target = Weight((1 - C.degree, -2))
    if drop is not None:
        chk.add("weight drop", "0" if drop == target else f"{drop} instead of {target}")
    chk.audit("expected drop", target)
    return out, chk


def courant_dorfman(C: CourantData, s1: Expr, s2: Expr) -> Tuple[Expr, Check]:
    _require_section(C, s1)
    _require_section(C, s2)
    out = canonical_poisson(canonical_poisson(s1, C.theta), s2)
    chk = Check("courant.dorfman")
    if out.terms:
        w = is_homogeneous(out)
        ok = w is not None and w[1] == 1 and (
            not s1.terms or not s2.terms or w.total == C.degree
            or w.total == is_homogeneous(s1).total + is_homogeneous(s2).total - C.degree
        )
        chk.add("closure", "0" if ok else f"result {out.render()} is not a section")
    drop = _drop(C, out, s1, s2)
    target = Weight((1 - C.degree, -1))
    if drop is not None:
        chk.add("weight drop", "0" if drop == target else f"{drop} instead of {target}")
    chk.audit("expected drop", target)
    return out, chk


def courant_anchor(C: CourantData, s: Expr, f: Expr) -> Expr:
    fibre = {n for n in C.chart.names if C.chart[n].weight[1] > 0}
    f = f.to_chart(C.chart)
    if f.free_names() & fibre:
        raise AlgebroidError("anchor acts on base functions only")
    return canonical_poisson(canonical_poisson(s, C.theta), f)


def loday_residual(theta: Expr, a: Expr, b: Expr, c: Expr) -> Expr:
    """``[a,[b,c]] - [[a,b],c] - (-1)^{(|a|+1)(|b|+1)} [b,[a,c]]`` for the derived bracket."""

    def br(x, y):
        return canonical_poisson(canonical_poisson(x, theta), y)

    pa = a.parity() or 0
    pb = b.parity() or 0
    sign = -1 if ((pa + 1) * (pb + 1)) % 2 else 1
    return br(a, br(b, c)) - br(br(a, b), c) - br(b, br(a, c)) * sign
