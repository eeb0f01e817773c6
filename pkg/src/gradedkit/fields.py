"""Vector fields, graded brackets, and Hamiltonian calculus on cotangent charts.

Sign conventions (fixed once, everything else is derived):

* ``X = sum_c X^c d/dc`` acts with left derivatives.
* ``[X, Y] = X o Y - (-1)^{|X||Y|} Y o X``.
* The canonical Poisson bracket satisfies ``{p_c, c} = 1`` and is given by
  ``{F, G} = sum_c R_{p_c}(F) L_c(G) - (-1)^{|c||p_c|} R_c(F) L_{p_c}(G)``
  with right (R) and left (L) derivatives.  It covers even symplectic
  charts and odd (shifted) cotangent charts alike.
* The symbol of ``X`` is ``sum_c X^c p_c``; the Hamiltonian field of ``H``
  is ``{H, -}``.
"""
from __future__ import annotations

from typing import Dict, Mapping, Optional

from .grading import EVEN, ODD, Chart, Weight
from .report import Check
from .symalg import Expr, ExprError, graded_derivative, is_homogeneous, parity_decompose, right_derivative

__all__ = [
    "VecField",
    "apply",
    "lie_bracket",
    "is_homological",
    "canonical_poisson",
    "symbol",
    "hamiltonian_field",
    "derived_bracket",
    "derived_bracket_ham",
]


class VecField:
    """A derivation ``sum_c comps[c] d/dc`` of a chart's function algebra."""

    __slots__ = ("chart", "comps")

    def __init__(self, chart: Chart, comps: Optional[Mapping[str, Expr]] = None):
        self.chart = chart
        out: Dict[str, Expr] = {}
        for name, e in (comps or {}).items():
            if name not in chart:
                raise ExprError(f"field component along unknown coordinate {name!r}")
            if not isinstance(e, Expr):
                e = Expr.const(chart, e)
            elif e.chart != chart:
                e = e.to_chart(chart)
            if e.terms:
                out[name] = e
        # keep chart order for deterministic iteration
        self.comps = {n: out[n] for n in chart.names if n in out}

    @classmethod
    def partial(cls, chart: Chart, name: str) -> "VecField":
        return cls(chart, {name: Expr.const(chart, 1)})

    @classmethod
    def zero(cls, chart: Chart) -> "VecField":
        return cls(chart)

    def __getitem__(self, name: str) -> Expr:
        return self.comps.get(name) or Expr.zero(self.chart)

    def is_zero(self) -> bool:
        return not self.comps

    def __bool__(self):
        return bool(self.comps)

    def _same(self, other: "VecField"):
        if other.chart != self.chart:
            raise ExprError("vector fields live on different charts")

    def __add__(self, other: "VecField") -> "VecField":
        self._same(other)
        comps = dict(self.comps)
        for n, e in other.comps.items():
            comps[n] = comps[n] + e if n in comps else e
        return VecField(self.chart, comps)

    def __neg__(self):
        return VecField(self.chart, {n: -e for n, e in self.comps.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, c):
        return VecField(self.chart, {n: e * c for n, e in self.comps.items()})

    def __rmul__(self, f):
        """``f * X`` for a scalar or a function ``f`` (multiplied on the left)."""
        if isinstance(f, Expr):
            return VecField(self.chart, {n: f * e for n, e in self.comps.items()})
        return self * f

    def __eq__(self, other):
        return isinstance(other, VecField) and self.chart == other.chart and self.comps == other.comps

    def __hash__(self):
        return hash(tuple(sorted((n, hash(e)) for n, e in self.comps.items())))

    def parity(self) -> Optional[int]:
        ps = set()
        for n, e in self.comps.items():
            for p in parity_decompose(e):
                ps.add((p + self.chart[n].parity) % 2)
        if not ps:
            return EVEN
        return ps.pop() if len(ps) == 1 else None

    def parity_parts(self) -> Dict[int, "VecField"]:
        parts: Dict[int, Dict[str, Expr]] = {}
        for n, e in self.comps.items():
            for p, piece in parity_decompose(e).items():
                q = (p + self.chart[n].parity) % 2
                d = parts.setdefault(q, {})
                d[n] = d[n] + piece if n in d else piece
        return {p: VecField(self.chart, d) for p, d in parts.items()}

    def weight(self) -> Optional[Weight]:
        """The common weight shift ``weight(X^c) - weight(c)``, or None."""
        ws = set()
        for n, e in self.comps.items():
            for m in e.terms:
                ws.add(e.monomial_weight(m) - self.chart[n].weight)
        if len(ws) == 1:
            return ws.pop()
        return None

    def weight_parts(self) -> Dict[Weight, "VecField"]:
        parts: Dict[Weight, Dict[str, Dict]] = {}
        for n, e in self.comps.items():
            for m, c in e.terms.items():
                w = e.monomial_weight(m) - self.chart[n].weight
                parts.setdefault(w, {}).setdefault(n, {})[m] = c
        return {
            w: VecField(self.chart, {n: Expr(self.chart, t) for n, t in d.items()})
            for w, d in sorted(parts.items())
        }

    def substitute(self, sigma, target: Optional[Chart] = None) -> "VecField":
        from .symalg import substitute

        target = target or self.chart
        return VecField(target, {n: substitute(e, sigma, target) for n, e in self.comps.items()})

    def render(self) -> str:
        if not self.comps:
            return "0"
        return " + ".join(f"({e.render()})*d/d{n}" for n, e in self.comps.items())

    def __repr__(self):
        return f"VecField({self.render()})"


def apply(X: VecField, f: Expr) -> Expr:
    """``X(f) = sum_c X^c * dL f / dc``."""
    if f.chart != X.chart:
        raise ExprError("field and function live on different charts")
    out = Expr.zero(X.chart)
    for n, comp in X.comps.items():
        d = graded_derivative(f, n)
        if d.terms:
            out = out + comp * d
    return out


def _bracket_homogeneous(X: VecField, Y: VecField, px: int, py: int) -> VecField:
    sign = -1 if (px * py) % 2 else 1
    comps = {}
    for n in X.chart.names:
        val = apply(X, Y[n])
        if sign == 1:
            val = val - apply(Y, X[n])
        else:
            val = val + apply(Y, X[n])
        if val.terms:
            comps[n] = val
    return VecField(X.chart, comps)


def lie_bracket(X: VecField, Y: VecField) -> VecField:
    """Graded commutator, extended bilinearly over parity parts."""
    X._same(Y)
    out = VecField.zero(X.chart)
    for px, Xp in X.parity_parts().items():
        for py, Yp in Y.parity_parts().items():
            out = out + _bracket_homogeneous(Xp, Yp, px, py)
    return out


def is_homological(Q: VecField, check_id: str = "homological") -> Check:
    """Report carrying the components of ``[Q, Q]``."""
    if Q.comps and Q.parity() != ODD:
        raise ExprError("a homological vector field must be odd")
    res = lie_bracket(Q, Q)
    chk = Check(check_id)
    if not res.comps:
        chk.add("[Q,Q]", "0")
    for n, e in res.comps.items():
        chk.add(f"[Q,Q]^{n}", e)
    return chk


def _pairs(chart: Chart):
    if not chart.pairs:
        raise ExprError("chart carries no conjugate pairing; build it with cotangent_chart")
    return chart.pairs


def canonical_poisson(F: Expr, G: Expr) -> Expr:
    """The canonical (possibly odd) Poisson bracket ``{F, G}``."""
    chart = F.chart
    if G.chart != chart:
        raise ExprError("Hamiltonians live on different charts")
    out = Expr.zero(chart)
    for p, c in _pairs(chart):
        a = right_derivative(F, p)
        if a.terms:
            b = graded_derivative(G, c)
            if b.terms:
                out = out + a * b
        a = right_derivative(F, c)
        if a.terms:
            b = graded_derivative(G, p)
            if b.terms:
                term = a * b
                out = out + term if (chart[c].parity * chart[p].parity) % 2 else out - term
    return out


def hamiltonian_field(H: Expr) -> VecField:
    """The derivation ``{H, -}``."""
    chart = H.chart
    comps = {}
    for p, c in _pairs(chart):
        comps[c] = right_derivative(H, p)
        d = right_derivative(H, c)
        comps[p] = d if (chart[c].parity * chart[p].parity) % 2 else -d
    return VecField(chart, comps)


def symbol(X: VecField, cot: Chart) -> Expr:
    """``sum_c X^c p_c`` on the cotangent chart ``cot``."""
    out = Expr.zero(cot)
    for n, e in X.comps.items():
        p = cot.momentum_of(n)
        if p is None:
            raise ExprError(f"no momentum conjugate to {n!r} on the cotangent chart")
        out = out + e.to_chart(cot) * Expr.coord(cot, p)
    return out


def derived_bracket(Q: VecField, A: VecField, B: VecField) -> VecField:
    """``[[Q, A], B]``."""
    return lie_bracket(lie_bracket(Q, A), B)


def derived_bracket_ham(theta: Expr, s1: Expr, s2: Expr) -> Expr:
    """``{{s1, theta}, s2}``."""
    return canonical_poisson(canonical_poisson(s1, theta), s2)
