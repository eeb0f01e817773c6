"""Weights, parities, coordinates and charts.

A :class:`Chart` is the symbolic model of a (multi-)graded super bundle:
an ordered list of coordinates, each carrying a weight vector of fixed
arity and a Grassmann parity.  Cotangent charts additionally record which
momentum is conjugate to which coordinate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

EVEN = 0
ODD = 1


class ChartError(ValueError):
    """Raised for malformed charts (duplicate names, arity mismatch, ...)."""


class Weight(tuple):
    """An integer weight vector with componentwise arithmetic.

    Coordinate weights are non-negative; differences of weights (vector
    field and bracket weights) may have negative entries.
    """

    def __new__(cls, components: Iterable[int] = ()):
        return super().__new__(cls, (int(c) for c in components))

    @classmethod
    def zero(cls, arity: int) -> "Weight":
        return cls((0,) * arity)

    def __add__(self, other):
        if len(self) != len(other):
            raise ChartError(f"weight arity mismatch: {self} + {other}")
        return Weight(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        if len(self) != len(other):
            raise ChartError(f"weight arity mismatch: {self} - {other}")
        return Weight(a - b for a, b in zip(self, other))

    def __neg__(self):
        return Weight(-a for a in self)

    def scale(self, n: int) -> "Weight":
        return Weight(n * a for a in self)

    @property
    def total(self) -> int:
        return sum(self)

    def is_nonnegative(self) -> bool:
        return all(a >= 0 for a in self)

    def __repr__(self):
        return "(" + ",".join(str(a) for a in self) + ")"

    __str__ = __repr__


def total_weight(w: Sequence[int]) -> int:
    return sum(w)


def parity_name(p: int) -> str:
    return "odd" if p % 2 else "even"


@dataclass(frozen=True)
class Coordinate:
    name: str
    weight: Weight
    parity: int = EVEN
    # formal parameters (t, s of a homogeneity action) are even, weight 0,
    # and never count as geometric coordinates
    param: bool = False

    def __post_init__(self):
        object.__setattr__(self, "weight", Weight(self.weight))
        if self.parity not in (EVEN, ODD):
            raise ChartError(f"bad parity {self.parity!r} for {self.name}")


@dataclass(frozen=True)
class Chart:
    """An ordered set of graded coordinates.

    ``pairs`` maps momentum names to the coordinate they are conjugate to
    (present only on cotangent charts).
    """

    arity: int
    coords: tuple
    degree_bound: Weight
    pairs: tuple = ()
    _index: dict = field(default=None, compare=False, repr=False, hash=False)
    _rank: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "degree_bound", Weight(self.degree_bound))
        object.__setattr__(self, "pairs", tuple(self.pairs))
        index = {}
        for c in self.coords:
            if c.name in index:
                raise ChartError(f"duplicate coordinate name {c.name!r}")
            if len(c.weight) != self.arity:
                raise ChartError(
                    f"coordinate {c.name!r} has weight {c.weight} but chart arity is {self.arity}"
                )
            if not c.weight.is_nonnegative():
                raise ChartError(f"coordinate {c.name!r} has a negative weight {c.weight}")
            if not c.param and any(a > b for a, b in zip(c.weight, self.degree_bound)):
                raise ChartError(f"coordinate {c.name!r} exceeds degree bound {self.degree_bound}")
            index[c.name] = c
        if len(self.degree_bound) != self.arity:
            raise ChartError("degree bound arity mismatch")
        for mom, base in self.pairs:
            if mom not in index or base not in index:
                raise ChartError(f"conjugate pair ({mom}, {base}) refers to unknown coordinates")
        ordered = sorted(self.coords, key=lambda c: (c.weight.total, c.parity, c.name))
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_rank", {c.name: i for i, c in enumerate(ordered)})

    def __hash__(self):
        return hash((self.arity, self.coords, self.degree_bound, self.pairs))

    # -- lookup -----------------------------------------------------------
    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __getitem__(self, name: str) -> Coordinate:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"no coordinate {name!r} in chart") from None

    def rank(self, name: str) -> int:
        return self._rank[name]

    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self.coords)

    @property
    def geometric(self) -> tuple:
        return tuple(c for c in self.coords if not c.param)

    @property
    def params(self) -> tuple:
        return tuple(c.name for c in self.coords if c.param)

    def coordinate(self, name: str) -> Coordinate:
        return self[name]

    def momentum_of(self, name: str):
        """The momentum conjugate to ``name``, or None."""
        for mom, base in self.pairs:
            if base == name:
                return mom
        return None

    @property
    def is_cotangent(self) -> bool:
        return bool(self.pairs)

    # -- derived charts ---------------------------------------------------
    def with_params(self, *names: str) -> "Chart":
        """This chart extended by formal even weight-zero parameters."""
        extra = [
            Coordinate(n, Weight.zero(self.arity), EVEN, param=True)
            for n in names
            if n not in self
        ]
        for n in names:
            if n in self and not self[n].param:
                raise ChartError(f"parameter {n!r} clashes with a coordinate")
        if not extra:
            return self
        return Chart(self.arity, self.coords + tuple(extra), self.degree_bound, self.pairs)

    def without_params(self) -> "Chart":
        if not self.params:
            return self
        return Chart(self.arity, self.geometric, self.degree_bound, self.pairs)

    def expr(self, text: str):
        """Parse ``text`` as an expression on this chart."""
        from .symalg import parse_expr

        return parse_expr(text, self)

    def coord_expr(self, name: str):
        from .symalg import Expr

        return Expr.coord(self, name)


def mk_chart(arity: int, coords: Iterable, degree_bound=None, pairs=(), require_parity_component=None) -> Chart:
    """Build and validate a chart.

    ``coords`` may hold :class:`Coordinate` objects or ``(name, weight,
    parity)`` triples.  The degree bound defaults to the componentwise max
    of the coordinate weights.  If ``require_parity_component`` is given,
    every coordinate's parity must equal that weight component mod 2.
    """
    cs = []
    for c in coords:
        if not isinstance(c, Coordinate):
            name, weight, *rest = c
            parity = rest[0] if rest else EVEN
            if isinstance(parity, str):
                parity = ODD if parity == "odd" else EVEN
            c = Coordinate(name, Weight(weight), parity)
        if len(c.weight) != arity:
            raise ChartError(f"coordinate {c.name!r} has weight {c.weight} but arity is {arity}")
        cs.append(c)
    if degree_bound is None:
        degree_bound = Weight(
            max((c.weight[i] for c in cs if not c.param), default=0) for i in range(arity)
        )
    if require_parity_component is not None:
        for c in cs:
            if c.weight[require_parity_component] % 2 != c.parity:
                raise ChartError(f"parity of {c.name!r} does not match weight component")
    return Chart(arity, tuple(cs), Weight(degree_bound), tuple(pairs))


def fibration_order(chart: Chart) -> list:
    """Coordinate names ordered by total weight (base first)."""
    return sorted(chart.names, key=lambda n: (chart[n].weight.total, chart.rank(n)))
