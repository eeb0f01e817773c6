"""Exact graded-commutative polynomials with Koszul signs.

An :class:`Expr` is a finite sum of rational multiples of monomials over a
:class:`~gradedkit.grading.Chart`.  A monomial is a product of coordinate
powers and opaque function symbols, stored as a tuple of ``(key, exponent)``
pairs sorted by key.  The stored order *is* the product order, so odd
coordinates appear in chart rank order and every sign is folded into the
coefficient.

Conventions
-----------
* Derivatives with respect to odd coordinates are *left* derivatives:
  the coordinate is first moved to the front of the monomial.
  :func:`right_derivative` is provided for the Poisson bracket.
* Function symbols may only take even weight-zero coordinates as
  arguments; they are even and of weight zero.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional

from .grading import EVEN, ODD, Chart, ChartError, Weight

__all__ = [
    "Expr",
    "FnApp",
    "ExprError",
    "normalize",
    "parse_expr",
    "parse_tree",
    "graded_derivative",
    "right_derivative",
    "substitute",
    "weight_decompose",
    "is_homogeneous",
    "parity_decompose",
]


class ExprError(ValueError):
    pass


class FnApp:
    """An opaque function symbol applied to base coordinates, possibly differentiated.

    ``derivs[i]`` counts partial derivatives taken in ``args[i]``.
    """

    __slots__ = ("name", "args", "derivs", "_key")

    def __init__(self, name: str, args: tuple, derivs: Optional[tuple] = None):
        self.name = name
        self.args = tuple(args)
        self.derivs = tuple(derivs) if derivs is not None else (0,) * len(self.args)
        if len(self.derivs) != len(self.args):
            raise ExprError("derivative multi-index does not match arguments")
        self._key = (0, self.name, self.args, self.derivs)

    def key(self):
        return self._key

    def differentiate(self, arg: str) -> "FnApp":
        i = self.args.index(arg)
        d = list(self.derivs)
        d[i] += 1
        return FnApp(self.name, self.args, tuple(d))

    def render(self) -> str:
        ds = [a for a, n in zip(self.args, self.derivs) for _ in range(n)]
        head = self.name + (f"[{','.join(ds)}]" if ds else "")
        return f"{head}({','.join(self.args)})"

    def __eq__(self, other):
        return isinstance(other, FnApp) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return self.render()


def _fn_from_key(key) -> FnApp:
    return FnApp(key[1], key[2], key[3])


# ---------------------------------------------------------------------------
# monomial helpers; a monomial is a tuple of (key, exp) sorted by key where
# key = (1, rank) for coordinates and (0, name, args, derivs) for functions.


def _mono_mul(chart: Chart, m1: tuple, m2: tuple, odd_ranks: frozenset):
    """Multiply monomials; returns (sign, monomial) or (0, None)."""
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    # sign: every odd factor of m2 must pass every odd factor of m1 with a
    # larger rank
    odd1 = [k[1] for k, _ in m1 if k[0] == 1 and k[1] in odd_ranks]
    odd2 = [k[1] for k, _ in m2 if k[0] == 1 and k[1] in odd_ranks]
    sign = 1
    if odd1 and odd2:
        s1 = set(odd1)
        for r in odd2:
            if r in s1:
                return 0, None
        swaps = 0
        for r2 in odd2:
            for r1 in odd1:
                if r1 > r2:
                    swaps += 1
        if swaps % 2:
            sign = -1
    merged: Dict = {}
    for k, e in m1:
        merged[k] = e
    for k, e in m2:
        merged[k] = merged.get(k, 0) + e
    return sign, tuple(sorted(merged.items()))


class Expr:
    """A canonical graded-commutative polynomial over a chart."""

    __slots__ = ("chart", "terms", "_hash")

    def __init__(self, chart: Chart, terms: Optional[Mapping] = None):
        self.chart = chart
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c != 0}
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def const(cls, chart: Chart, value) -> "Expr":
        return cls(chart, {(): Fraction(value)})

    @classmethod
    def zero(cls, chart: Chart) -> "Expr":
        return cls(chart)

    @classmethod
    def coord(cls, chart: Chart, name: str) -> "Expr":
        if name not in chart:
            raise ExprError(f"unbound name {name!r}")
        return cls(chart, {(((1, chart.rank(name)), 1),): Fraction(1)})

    @classmethod
    def fn(cls, chart: Chart, name: str, args: Iterable[str], derivs=None) -> "Expr":
        args = tuple(args)
        for a in args:
            if a not in chart:
                raise ExprError(f"unbound name {a!r}")
            c = chart[a]
            if c.parity != EVEN or c.weight.total != 0 or c.param:
                raise ExprError(
                    f"function {name!r} may only depend on even weight-zero coordinates, not {a!r}"
                )
        f = FnApp(name, args, derivs)
        return cls(chart, {((f.key(), 1),): Fraction(1)})

    # -- chart bookkeeping ------------------------------------------------
    def _odd_ranks(self) -> frozenset:
        return _odd_ranks(self.chart)

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.chart is not self.chart and other.chart != self.chart:
                raise ExprError("expressions live on different charts")
            return other
        if isinstance(other, (int, Fraction)):
            return Expr.const(self.chart, other)
        return NotImplemented

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return Expr(self.chart, terms)

    __radd__ = __add__

    def __neg__(self):
        return Expr(self.chart, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Expr(self.chart, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        odd = self._odd_ranks()
        terms: Dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                sign, m = _mono_mul(self.chart, m1, m2, odd)
                if sign:
                    terms[m] = terms.get(m, 0) + sign * c1 * c2
        return Expr(self.chart, terms)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ExprError("only non-negative integer powers are supported")
        out = Expr.const(self.chart, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(): Fraction(other)} if other != 0 else {})
        if not isinstance(other, Expr):
            return NotImplemented
        return self.chart == other.chart and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- inspection -------------------------------------------------------
    def monomial_weight(self, m: tuple) -> Weight:
        w = [0] * self.chart.arity
        coords = _by_rank(self.chart)
        for k, e in m:
            if k[0] == 1:
                cw = coords[k[1]].weight
                for i in range(len(w)):
                    w[i] += e * cw[i]
        return Weight(w)

    def monomial_parity(self, m: tuple) -> int:
        odd = self._odd_ranks()
        return sum(1 for k, _ in m if k[0] == 1 and k[1] in odd) % 2

    def monomial_names(self, m: tuple) -> list:
        coords = _by_rank(self.chart)
        return [coords[k[1]].name for k, _ in m if k[0] == 1]

    def free_names(self) -> set:
        """Coordinates (and function arguments) the expression depends on."""
        coords = _by_rank(self.chart)
        out = set()
        for m in self.terms:
            for k, _ in m:
                if k[0] == 1:
                    out.add(coords[k[1]].name)
                else:
                    out.update(k[2])
        return out

    def has_params(self) -> bool:
        params = set(self.chart.params)
        return bool(params & self.free_names())

    def parity(self) -> Optional[int]:
        ps = {self.monomial_parity(m) for m in self.terms}
        if not ps:
            return EVEN
        return ps.pop() if len(ps) == 1 else None

    def weight(self) -> Optional[Weight]:
        return is_homogeneous(self)

    def degree_in(self, names: Iterable[str]) -> set:
        """Set of total polynomial degrees in the given coordinates, over all terms."""
        ranks = {self.chart.rank(n) for n in names if n in self.chart}
        return {sum(e for k, e in m if k[0] == 1 and k[1] in ranks) for m in self.terms}

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def to_chart(self, chart: Chart) -> "Expr":
        """Re-express on another chart containing all names used here."""
        if chart is self.chart or chart == self.chart:
            return self
        return substitute(self, {}, chart)

    def render(self) -> str:
        return render(self)

    def __repr__(self):
        return f"Expr({render(self)!r})"

    def __str__(self):
        return render(self)


_ODD_CACHE: Dict[int, tuple] = {}


def _odd_ranks(chart: Chart) -> frozenset:
    key = id(chart)
    hit = _ODD_CACHE.get(key)
    if hit is not None and hit[0] is chart:
        return hit[1]
    odd = frozenset(chart.rank(c.name) for c in chart.coords if c.parity == ODD)
    _ODD_CACHE[key] = (chart, odd, sorted(chart.coords, key=lambda c: chart.rank(c.name)))
    return odd


def _by_rank(chart: Chart) -> list:
    _odd_ranks(chart)
    return _ODD_CACHE[id(chart)][2]


# ---------------------------------------------------------------------------
# rendering


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _term_sort_key(expr: Expr, m: tuple):
    w = expr.monomial_weight(m)
    return (w.total, tuple(w), sum(e for _, e in m), m)


def render_monomial(chart: Chart, m: tuple) -> str:
    coords = _by_rank(chart)
    parts = []
    for k, e in m:
        s = coords[k[1]].name if k[0] == 1 else _fn_from_key(k).render()
        parts.append(s if e == 1 else f"{s}^{e}")
    return "*".join(parts)


def render(expr: Expr) -> str:
    """Deterministic canonical text: terms in monomial order, reduced fractions."""
    if not expr.terms:
        return "0"
    out = []
    for m in sorted(expr.terms, key=lambda m: _term_sort_key(expr, m)):
        c = expr.terms[m]
        neg = c < 0
        a = -c if neg else c
        body = render_monomial(expr.chart, m)
        if not body:
            s = _fmt_coeff(a)
        elif a == 1:
            s = body
        else:
            s = f"{_fmt_coeff(a)}*{body}"
        if not out:
            out.append(("-" if neg else "") + s)
        else:
            out.append((" - " if neg else " + ") + s)
    return "".join(out)


# ---------------------------------------------------------------------------
# parsing: text -> raw tree -> Expr

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_']*)|(?P<op>[-+*/^()\[\],]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExprError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _Parser:
    """Recursive-descent parser producing a raw tree of tuples.

    Tree nodes: ("num", int) ("name", str) ("fn", name, args, derivs)
    ("add", a, b) ("sub", a, b) ("mul", a, b) ("div", a, b) ("neg", a)
    ("pow", a, int).
    """

    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            raise ExprError(f"expected {value!r} at column {tok[2]}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def parse(self):
        tree = self.sum()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprError(f"unexpected {tok[1]!r} at column {tok[2]}")
        return tree

    def sum(self):
        node = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.product()
            node = ("add" if op == "+" else "sub", node, rhs)
        return node

    def product(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = ("mul" if op == "*" else "div", node, rhs)
        return node

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in ("-", "+"):
            op = self.take()[1]
            inner = self.unary()
            return ("neg", inner) if op == "-" else inner
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num":
                raise ExprError(f"exponent must be a non-negative integer (column {tok[2]})")
            node = ("pow", node, int(tok[1]))
        return node

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return ("num", int(val))
        if kind == "name":
            derivs = []
            if self.peek()[1] == "[":
                self.take("[")
                while True:
                    derivs.append(self.take()[1])
                    if self.peek()[1] == ",":
                        self.take()
                        continue
                    self.take("]")
                    break
            if self.peek()[1] == "(":
                self.take("(")
                args = []
                if self.peek()[1] != ")":
                    while True:
                        t = self.take()
                        if t[0] != "name":
                            raise ExprError(f"function arguments must be coordinate names (column {t[2]})")
                        args.append(t[1])
                        if self.peek()[1] == ",":
                            self.take()
                            continue
                        break
                self.take(")")
                return ("fn", val, tuple(args), tuple(derivs), col)
            if derivs:
                raise ExprError(f"derivative marker without arguments at column {col}")
            return ("name", val, col)
        if val == "(":
            node = self.sum()
            self.take(")")
            return node
        raise ExprError(f"unexpected {val or 'end of input'!r} at column {col}")


def parse_tree(text: str):
    return _Parser(text).parse()


def normalize(tree, chart: Chart) -> Expr:
    """Evaluate a raw expression tree into canonical form on ``chart``."""
    kind = tree[0]
    if kind == "num":
        return Expr.const(chart, tree[1])
    if kind == "name":
        if tree[1] not in chart:
            raise ExprError(f"unbound name {tree[1]!r} at column {tree[2]}")
        return Expr.coord(chart, tree[1])
    if kind == "fn":
        _, name, args, dnames, col = tree
        for a in args:
            if a not in chart:
                raise ExprError(f"unbound name {a!r} at column {col}")
        counts = tuple(dnames.count(a) for a in args)
        if sum(counts) != len(dnames):
            raise ExprError(f"derivative index not among the arguments of {name!r} (column {col})")
        try:
            return Expr.fn(chart, name, args, counts)
        except ExprError as exc:
            raise ExprError(f"{exc} (column {col})") from None
    if kind == "neg":
        return -normalize(tree[1], chart)
    if kind == "pow":
        return normalize(tree[1], chart) ** tree[2]
    a = normalize(tree[1], chart)
    b = normalize(tree[2], chart)
    if kind == "add":
        return a + b
    if kind == "sub":
        return a - b
    if kind == "mul":
        return a * b
    if kind == "div":
        if b.terms and set(b.terms) == {()}:
            return a / b.terms[()]
        raise ExprError("division is only allowed by non-zero constants")
    raise ExprError(f"unknown node {kind!r}")


def parse_expr(text: str, chart: Chart) -> Expr:
    return normalize(parse_tree(text), chart)


# ---------------------------------------------------------------------------
# calculus


def _derivative(e: Expr, name: str, left: bool) -> Expr:
    chart = e.chart
    if name not in chart:
        raise ExprError(f"unbound name {name!r}")
    r = chart.rank(name)
    ckey = (1, r)
    odd = _odd_ranks(chart)
    is_odd = r in odd
    out = Expr(chart)
    terms: Dict = {}
    for m, c in e.terms.items():
        for i, (k, ex) in enumerate(m):
            if k == ckey:
                rest = list(m)
                if ex == 1:
                    del rest[i]
                else:
                    rest[i] = (k, ex - 1)
                coeff = c * ex
                if is_odd:
                    if left:
                        n = sum(1 for kk, _ in m[:i] if kk[0] == 1 and kk[1] in odd)
                    else:
                        n = sum(1 for kk, _ in m[i + 1:] if kk[0] == 1 and kk[1] in odd)
                    if n % 2:
                        coeff = -coeff
                key = tuple(rest)
                terms[key] = terms.get(key, 0) + coeff
            elif k[0] == 0 and name in k[2]:
                f = _fn_from_key(k)
                rest = list(m)
                if ex == 1:
                    del rest[i]
                else:
                    rest[i] = (k, ex - 1)
                df = f.differentiate(name)
                mult = sum(1 for a in f.args if a == name)
                # f(x, x) style repeated arguments differentiate once per slot
                piece = Expr(chart, {tuple(rest): c * ex * mult}) * Expr(chart, {((df.key(), 1),): 1})
                for mm, cc in piece.terms.items():
                    terms[mm] = terms.get(mm, 0) + cc
    out = Expr(chart, terms)
    return out


def graded_derivative(e: Expr, name: str) -> Expr:
    """Left partial derivative of ``e`` with respect to coordinate ``name``."""
    return _derivative(e, name, left=True)


def right_derivative(e: Expr, name: str) -> Expr:
    """Right partial derivative (coordinate removed from the right end)."""
    return _derivative(e, name, left=False)


def substitute(e: Expr, sigma: Mapping[str, Expr], target: Optional[Chart] = None, fn_map=None) -> Expr:
    """Apply the algebra homomorphism ``name -> sigma[name]``.

    Unmapped coordinates map to the same-named coordinate of ``target``
    (default: ``e.chart``).  Function-symbol arguments may only be renamed
    to other coordinates, unless ``fn_map`` (a callable ``FnApp -> Expr``)
    supplies the image of each function factor.
    """
    target = target or e.chart
    src = e.chart
    coords = _by_rank(src)
    images: Dict[int, Expr] = {}

    def image(rank: int) -> Expr:
        hit = images.get(rank)
        if hit is None:
            c = coords[rank]
            if c.name in sigma:
                hit = sigma[c.name]
                if not isinstance(hit, Expr):
                    hit = Expr.const(target, hit)
                elif hit.chart is not target and hit.chart != target:
                    raise ExprError(f"image of {c.name!r} lives on the wrong chart")
                p = hit.parity()
                if hit.terms and p is not None and p != c.parity:
                    raise ExprError(f"substitution for {c.name!r} changes parity")
                if p is None:
                    raise ExprError(f"substitution for {c.name!r} has mixed parity")
            else:
                if c.name not in target:
                    raise ExprError(f"coordinate {c.name!r} missing from target chart")
                hit = Expr.coord(target, c.name)
            images[rank] = hit
        return hit

    def fn_image(k) -> Expr:
        f = _fn_from_key(k)
        if fn_map is not None:
            return fn_map(f)
        new_args = []
        for a in f.args:
            if a in sigma:
                img = sigma[a]
                names = [n for n in target.names if img == Expr.coord(target, n)] if isinstance(img, Expr) else []
                if not names:
                    raise ExprError(
                        f"cannot substitute a non-coordinate into the argument {a!r} of {f.name!r}"
                    )
                new_args.append(names[0])
            else:
                new_args.append(a)
        return Expr.fn(target, f.name, new_args, f.derivs)

    out: Dict = {}
    one = Expr.const(target, 1)
    for m, c in e.terms.items():
        acc = one
        for k, ex in m:
            base = image(k[1]) if k[0] == 1 else fn_image(k)
            acc = acc * (base ** ex if ex != 1 else base)
            if not acc.terms:
                break
        for mm, cc in acc.terms.items():
            out[mm] = out.get(mm, 0) + c * cc
    return Expr(target, out)


def weight_decompose(e: Expr) -> Dict[Weight, Expr]:
    """Split ``e`` into homogeneous parts keyed by weight."""
    if e.has_params():
        raise ExprError("expression depends on a formal parameter; it has no weight decomposition")
    parts: Dict[Weight, Dict] = {}
    for m, c in e.terms.items():
        parts.setdefault(e.monomial_weight(m), {})[m] = c
    return {w: Expr(e.chart, t) for w, t in sorted(parts.items())}


def is_homogeneous(e: Expr) -> Optional[Weight]:
    """The unique weight of ``e``, or None (also None for the zero expression)."""
    parts = weight_decompose(e)
    if len(parts) == 1:
        return next(iter(parts))
    return None


def parity_decompose(e: Expr) -> Dict[int, Expr]:
    parts: Dict[int, Dict] = {}
    for m, c in e.terms.items():
        parts.setdefault(e.monomial_parity(m), {})[m] = c
    return {p: Expr(e.chart, t) for p, t in parts.items()}


def coefficient_in(e: Expr, power_of: str, n: int) -> Expr:
    """Coefficient of ``power_of**n`` in ``e`` (``power_of`` even)."""
    chart = e.chart
    key = (1, chart.rank(power_of))
    out: Dict = {}
    for m, c in e.terms.items():
        ex = dict(m).get(key, 0)
        if ex == n:
            rest = tuple((k, x) for k, x in m if k != key)
            out[rest] = out.get(rest, 0) + c
    return Expr(chart, out)


def max_power(e: Expr, name: str) -> int:
    key = (1, e.chart.rank(name))
    return max((dict(m).get(key, 0) for m in e.terms), default=0)
