"""Line-oriented declaration language.

Blocks end with ``end``; ``#`` starts a comment.  Example::

    chart T2M
      coord x weight (0) parity even
      coord dx weight (1) parity even
    end
    chart TT = tangent T2M
    action h on T2M
      dx = t*dx
    end
    check action h

Declarations
    ``chart N [bound (..)]`` block of ``coord`` lines, or
    ``chart N = tangent|cotangent|odd-cotangent C``,
    ``chart N = higher K C [component I]``, ``chart N = reverse C component I``,
    ``chart N = collapse C components I,J``, ``chart N = permute C order I,J,..``,
    ``chart N = truncate C level L [component I]``;
    ``action N on C [param t]`` block of ``coord = expr``;
    ``field N on C`` block of ``coord : expr`` (coefficient of d/dcoord);
    ``expr N on C = expr``;
    ``map N from SRC to DST`` block of ``dst_coord = expr on SRC``;
    ``algebroid N on C degree K`` block of ``anchor TH X = expr``,
    ``structure A B C = expr``, ``field F``, ``action H``;
    ``groupoid N on GAMMA over BASE`` with sub-blocks ``source``,
    ``target``, ``unit``, ``inverse`` and ``mult on K via P1 P2`` (each
    closed by ``end``) and lines ``triple on K3 via Q1 Q2 Q3``,
    ``action H``;
    ``bialgebroid N from A`` block of ``momentum C = NAME``, ``S = expr``
    or ``P = expr`` (triangular);
    ``courant N from B lambda R``.
Checks
    ``check action H``, ``check degree H K``, ``check homogenize H``,
    ``check homological F``, ``check algebroid A``, ``check groupoid G``,
    ``check lie G A``, ``check bialgebroid B``, ``check sharp B``,
    ``check courant C``, ``check generator C E``, ``check poisson G E``,
    ``check weight E (w)``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from .algebroids import (
    AlgebroidData,
    AlgebroidError,
    BiAlgebroidData,
    CourantData,
    algebroid_from_structure,
    bi_algebroid_from_algebroid,
    courant_from_bi_algebroid,
    structure_from_q,
    triangular_bi_algebroid,
)
from .fields import VecField
from .grading import EVEN, ODD, Chart, ChartError, Coordinate, Weight
from .groupoids import GroupoidError, GroupoidSpec, WeightedGroupoid
from .lifts import (
    ActionError,
    HomAction,
    collapse_weights,
    cotangent_chart,
    higher_tangent_chart,
    parity_reverse,
    permute_weights,
    tangent_chart,
    truncate_chart,
)
from .symalg import Expr, ExprError, parse_expr

__all__ = ["DSLError", "Document", "parse", "print_document", "render_chart", "render_algebroid", "render_action"]


class DSLError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {message}" if line else message)


@dataclass
class Line:
    no: int
    indent: int
    text: str  # stripped, comment removed

    @property
    def words(self) -> List[str]:
        return self.text.split()


@dataclass
class Decl:
    kind: str
    name: str
    header: Dict[str, Any]
    body: List[Tuple[str, Any]]
    obj: Any = None
    line: int = 0


@dataclass
class Document:
    decls: List[Decl] = field(default_factory=list)
    checks: List[Tuple[str, List[str], int]] = field(default_factory=list)
    charts: Dict[str, Chart] = field(default_factory=dict)
    actions: Dict[str, HomAction] = field(default_factory=dict)
    fields: Dict[str, VecField] = field(default_factory=dict)
    exprs: Dict[str, Expr] = field(default_factory=dict)
    maps: Dict[str, Tuple[str, str, Dict[str, Expr]]] = field(default_factory=dict)
    algebroids: Dict[str, AlgebroidData] = field(default_factory=dict)
    groupoids: Dict[str, Any] = field(default_factory=dict)
    bialgebroids: Dict[str, BiAlgebroidData] = field(default_factory=dict)
    courants: Dict[str, Any] = field(default_factory=dict)
    order: List[Tuple[str, str]] = field(default_factory=list)

    def names(self) -> set:
        return {n for _, n in self.order}

    def lookup(self, name: str):
        for table in (
            self.charts, self.actions, self.fields, self.exprs, self.maps, self.algebroids,
            self.groupoids, self.bialgebroids, self.courants,
        ):
            if name in table:
                return table[name]
        raise KeyError(name)

    def chart_name(self, chart: Chart) -> Optional[str]:
        for n, c in self.charts.items():
            if c == chart:
                return n
        return None


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_']*$")
_WEIGHT = re.compile(r"\(\s*-?\d+(\s*,\s*-?\d+)*\s*\)$")


def _lines(text: str) -> List[Line]:
    out = []
    for i, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        out.append(Line(i, indent, body.strip()))
    return out


def _col(line: Line, token: str, start: int = 0) -> int:
    raw_pos = line.text.find(token, start)
    return line.indent + (raw_pos if raw_pos >= 0 else 0) + 1


def _err(line: Line, msg: str, token: Optional[str] = None) -> DSLError:
    return DSLError(msg, line.no, _col(line, token) if token else line.indent + 1)


def _name(line: Line, tok: str) -> str:
    if not _NAME.match(tok):
        raise _err(line, f"invalid identifier {tok!r}", tok)
    return tok


def _weight(line: Line, text: str) -> Weight:
    text = text.strip()
    if not _WEIGHT.match(text):
        raise _err(line, f"malformed weight {text!r}", text)
    return Weight(int(a) for a in text.strip("() ").split(","))


def _expr(line: Line, text: str, chart: Chart) -> Expr:
    try:
        return parse_expr(text, chart)
    except ExprError as exc:
        msg = str(exc)
        m = re.search(r"column (\d+)", msg)
        base = _col(line, text.strip())
        col = base + int(m.group(1)) - 1 if m else base
        msg = re.sub(r"\s*\(?at column \d+\)?|\s*\(column \d+\)", "", msg)
        raise DSLError(msg, line.no, col) from None


def _image(line: Line, lhs: str, rhs: str, dst: Chart, src: Chart) -> Expr:
    """Parse the image of coordinate ``lhs`` of ``dst``; its parity must match."""
    if lhs not in dst or dst[lhs].param:
        raise _err(line, f"unknown coordinate {lhs!r}", lhs)
    e = _expr(line, rhs, src)
    p = e.parity()
    if p is not None and e != 0 and p != dst[lhs].parity:
        want = "odd" if dst[lhs].parity else "even"
        raise _err(line, f"parity mismatch: {lhs!r} is {want} but its image is not", rhs)
    if p is None:
        raise _err(line, f"image of {lhs!r} mixes even and odd terms", rhs)
    return e


def _split_assign(line: Line, sep: str = "=") -> Tuple[str, str]:
    if sep not in line.text:
        raise _err(line, f"expected '{sep}'")
    lhs, rhs = line.text.split(sep, 1)
    if not rhs.strip():
        raise _err(line, "missing expression after '" + sep + "'")
    return lhs.strip(), rhs.strip()


class _Parser:
    def __init__(self, text: str):
        self.lines = _lines(text)
        self.i = 0
        self.doc = Document()

    # -- helpers ------------------------------------------------------------
    def next(self) -> Optional[Line]:
        if self.i >= len(self.lines):
            return None
        ln = self.lines[self.i]
        self.i += 1
        return ln

    def block(self, opener: Line) -> List[Line]:
        body = []
        while True:
            ln = self.next()
            if ln is None:
                raise _err(opener, f"block opened here is missing 'end'")
            if ln.text == "end":
                return body
            body.append(ln)

    def chart(self, line: Line, name: str) -> Chart:
        if name not in self.doc.charts:
            raise _err(line, f"unknown chart {name!r}", name)
        return self.doc.charts[name]

    def declare(self, line: Line, kind: str, name: str):
        if name in self.doc.names():
            raise _err(line, f"duplicate declaration {name!r}", name)
        self.doc.order.append((kind, name))

    def get(self, line: Line, table: str, name: str, what: str):
        t = getattr(self.doc, table)
        if name not in t:
            raise _err(line, f"unknown {what} {name!r}", name)
        return t[name]

    # -- top level ------------------------------------------------------------
    def run(self) -> Document:
        while True:
            ln = self.next()
            if ln is None:
                return self.doc
            w = ln.words
            kind = w[0]
            handler = getattr(self, "p_" + kind, None)
            if handler is None:
                raise _err(ln, f"unknown declaration {kind!r}", kind)
            handler(ln)

    def p_chart(self, ln: Line):
        w = ln.words
        if len(w) < 2:
            raise _err(ln, "chart needs a name")
        name = _name(ln, w[1])
        if len(w) >= 3 and w[2] == "=":
            chart, header = self.derived_chart(ln, w[3:])
            self.declare(ln, "chart", name)
            self.doc.charts[name] = chart
            self.doc.decls.append(Decl("chart", name, header, [], chart, ln.no))
            return
        bound = None
        rest = ln.text.split(None, 2)[2] if len(w) > 2 else ""
        if rest:
            m = re.match(r"bound\s+(\(.*\))$", rest)
            if not m:
                raise _err(ln, f"unexpected {rest!r} after chart name", rest)
            bound = _weight(ln, m.group(1))
        coords = []
        for cl in self.block(ln):
            m = re.match(r"coord\s+(\S+)\s+weight\s+(\([^)]*\))\s+parity\s+(\S+)$", cl.text)
            if not m:
                raise _err(cl, "expected 'coord NAME weight (..) parity even|odd'")
            cname = _name(cl, m.group(1))
            par = m.group(3)
            if par not in ("even", "odd"):
                raise _err(cl, f"parity must be even or odd, not {par!r}", par)
            coords.append((cl, Coordinate(cname, _weight(cl, m.group(2)), ODD if par == "odd" else EVEN)))
        if bound is None and not coords:
            raise _err(ln, "a chart without coordinates needs an explicit bound")
        arity = len(bound) if bound is not None else len(coords[0][1].weight)
        for cl, c in coords:
            if len(c.weight) != arity:
                raise _err(cl, f"weight {c.weight} does not have arity {arity}", str(c.weight).replace(",", ","))
        if bound is None:
            bound = Weight(max(c.weight[i] for _, c in coords) for i in range(arity))
        try:
            chart = Chart(arity, tuple(c for _, c in coords), bound)
        except ChartError as exc:
            raise _err(ln, str(exc)) from None
        self.declare(ln, "chart", name)
        self.doc.charts[name] = chart
        self.doc.decls.append(Decl("chart", name, {"bound": bound, "explicit": rest != ""}, [("coord", c) for _, c in coords], chart, ln.no))

    def derived_chart(self, ln: Line, w: List[str]):
        if not w:
            raise _err(ln, "missing chart construction after '='")
        op = w[0]
        try:
            if op in ("tangent", "cotangent", "odd-cotangent") and len(w) == 2:
                src = self.chart(ln, w[1])
                if op == "tangent":
                    return tangent_chart(src), {"op": op, "args": [w[1]]}
                return cotangent_chart(src, odd=(op == "odd-cotangent")), {"op": op, "args": [w[1]]}
            if op == "higher" and len(w) in (3, 5):
                k = int(w[1])
                comp = None
                if len(w) == 5:
                    if w[3] != "component":
                        raise _err(ln, "expected 'component'", w[3])
                    comp = int(w[4])
                return higher_tangent_chart(self.chart(ln, w[2]), k, comp), {"op": op, "args": w[1:]}
            if op == "reverse" and len(w) == 4 and w[2] == "component":
                return parity_reverse(self.chart(ln, w[1]), int(w[3])), {"op": op, "args": w[1:]}
            if op == "collapse" and len(w) == 4 and w[2] == "components":
                comps = [int(a) for a in w[3].split(",")]
                return collapse_weights(self.chart(ln, w[1]), comps), {"op": op, "args": w[1:]}
            if op == "permute" and len(w) == 4 and w[2] == "order":
                order = [int(a) for a in w[3].split(",")]
                return permute_weights(self.chart(ln, w[1]), order), {"op": op, "args": w[1:]}
            if op == "truncate" and len(w) in (4, 6) and w[2] == "level":
                comp = int(w[5]) if len(w) == 6 else None
                if len(w) == 6 and w[4] != "component":
                    raise _err(ln, "expected 'component'", w[4])
                return truncate_chart(self.chart(ln, w[1]), int(w[3]), comp)[0], {"op": op, "args": w[1:]}
        except ChartError as exc:
            raise _err(ln, str(exc)) from None
        except ValueError as exc:
            if isinstance(exc, DSLError):
                raise
            raise _err(ln, f"malformed chart construction: {exc}") from None
        raise _err(ln, f"unknown chart construction {' '.join(w)!r}", op)

    def p_action(self, ln: Line):
        m = re.match(r"action\s+(\S+)\s+on\s+(\S+)(?:\s+param\s+(\S+))?$", ln.text)
        if not m:
            raise _err(ln, "expected 'action NAME on CHART [param P]'")
        name = _name(ln, m.group(1))
        chart = self.chart(ln, m.group(2))
        param = m.group(3) or "t"
        pc = chart.with_params(param)
        imgs = {}
        for bl in self.block(ln):
            lhs, rhs = _split_assign(bl)
            imgs[lhs] = _image(bl, lhs, rhs, chart, pc)
        act = HomAction(chart, imgs, param)
        self.declare(ln, "action", name)
        self.doc.actions[name] = act
        self.doc.decls.append(Decl("action", name, {"chart": m.group(2), "param": param}, list(imgs.items()), act, ln.no))

    def p_field(self, ln: Line):
        m = re.match(r"field\s+(\S+)\s+on\s+(\S+)$", ln.text)
        if not m:
            raise _err(ln, "expected 'field NAME on CHART'")
        name = _name(ln, m.group(1))
        chart = self.chart(ln, m.group(2))
        comps: Dict[str, Expr] = {}
        for bl in self.block(ln):
            lhs, rhs = _split_assign(bl, ":")
            if lhs not in chart:
                raise _err(bl, f"unknown coordinate {lhs!r}", lhs)
            e = _expr(bl, rhs, chart)
            comps[lhs] = comps[lhs] + e if lhs in comps else e
        X = VecField(chart, comps)
        self.declare(ln, "field", name)
        self.doc.fields[name] = X
        self.doc.decls.append(Decl("field", name, {"chart": m.group(2)}, list(X.comps.items()), X, ln.no))

    def p_expr(self, ln: Line):
        kind = ln.words[0]
        m = re.match(r"\S+\s+(\S+)\s+on\s+(\S+)\s*=\s*(.+)$", ln.text)
        if not m:
            raise _err(ln, f"expected '{kind} NAME on CHART = EXPR'")
        name = _name(ln, m.group(1))
        chart = self._expr_chart(ln, m.group(2))
        e = _expr(ln, m.group(3), chart)
        self.declare(ln, "expr", name)
        self.doc.exprs[name] = e
        self.doc.decls.append(Decl("expr", name, {"chart": m.group(2), "kind": kind}, [("=", e)], e, ln.no))

    p_ham = p_expr

    def _expr_chart(self, ln: Line, ref: str) -> Chart:
        if ref in self.doc.charts:
            return self.doc.charts[ref]
        if ref in self.doc.bialgebroids:
            return self.doc.bialgebroids[ref].chart
        if ref in self.doc.courants:
            return self.doc.courants[ref][0].chart
        raise _err(ln, f"unknown chart {ref!r}", ref)

    def p_map(self, ln: Line):
        m = re.match(r"map\s+(\S+)\s+from\s+(\S+)\s+to\s+(\S+)$", ln.text)
        if not m:
            raise _err(ln, "expected 'map NAME from SRC to DST'")
        name = _name(ln, m.group(1))
        src = self.chart(ln, m.group(2))
        dst = self.chart(ln, m.group(3))
        imgs = {}
        for bl in self.block(ln):
            lhs, rhs = _split_assign(bl)
            imgs[lhs] = _image(bl, lhs, rhs, dst, src)
        for c in dst.geometric:
            if c.name not in imgs:
                if c.name not in src:
                    raise _err(ln, f"map {name!r} gives no image for {c.name!r}")
                imgs[c.name] = Expr.coord(src, c.name)
        imgs = {c.name: imgs[c.name] for c in dst.geometric}
        self.declare(ln, "map", name)
        self.doc.maps[name] = (m.group(2), m.group(3), imgs)
        self.doc.decls.append(Decl("map", name, {"src": m.group(2), "dst": m.group(3)}, list(imgs.items()), imgs, ln.no))

    def p_algebroid(self, ln: Line):
        m = re.match(r"algebroid\s+(\S+)\s+on\s+(\S+)\s+degree\s+(\d+)$", ln.text)
        if not m:
            raise _err(ln, "expected 'algebroid NAME on CHART degree K'")
        name = _name(ln, m.group(1))
        chart = self.chart(ln, m.group(2))
        degree = int(m.group(3))
        anchor, structure, body = {}, {}, []
        qfield = None
        action = None
        for bl in self.block(ln):
            w = bl.words
            if w[0] == "anchor":
                lhs, rhs = _split_assign(bl)
                idx = lhs.split()[1:]
                if len(idx) != 2:
                    raise _err(bl, "expected 'anchor FIBRE BASE = expr'")
                for n in idx:
                    if n not in chart:
                        raise _err(bl, f"unknown coordinate {n!r}", n)
                e = _expr(bl, rhs, chart)
                anchor[tuple(idx)] = e
                body.append(("anchor", (tuple(idx), e)))
            elif w[0] == "structure":
                lhs, rhs = _split_assign(bl)
                idx = lhs.split()[1:]
                if len(idx) != 3:
                    raise _err(bl, "expected 'structure A B C = expr'")
                for n in idx:
                    if n not in chart:
                        raise _err(bl, f"unknown coordinate {n!r}", n)
                e = _expr(bl, rhs, chart)
                structure[tuple(idx)] = e
                body.append(("structure", (tuple(idx), e)))
            elif w[0] == "field" and len(w) == 2:
                qfield = self.get(bl, "fields", w[1], "field")
                if qfield.chart != chart:
                    raise _err(bl, f"field {w[1]!r} lives on another chart", w[1])
                body.append(("field", w[1]))
            elif w[0] == "action" and len(w) == 2:
                action = self.get(bl, "actions", w[1], "action")
                if action.chart != chart:
                    raise _err(bl, f"action {w[1]!r} lives on another chart", w[1])
                body.append(("action", w[1]))
            else:
                raise _err(bl, f"unexpected {w[0]!r} in algebroid block", w[0])
        try:
            if qfield is not None:
                if anchor or structure:
                    raise _err(ln, "give either a field or anchor/structure lines, not both")
                A = AlgebroidData(chart, qfield, degree, action)
            else:
                A = algebroid_from_structure(chart, anchor, structure, degree, action)
        except AlgebroidError as exc:
            raise _err(ln, str(exc)) from None
        self.declare(ln, "algebroid", name)
        self.doc.algebroids[name] = A
        self.doc.decls.append(Decl("algebroid", name, {"chart": m.group(2), "degree": degree}, body, A, ln.no))

    def _pullback_block(self, opener: Line, src: Chart, dst: Chart) -> Dict[str, Expr]:
        imgs = {}
        for bl in self.block(opener):
            lhs, rhs = _split_assign(bl)
            imgs[lhs] = _image(bl, lhs, rhs, dst, src)
        return imgs

    def p_groupoid(self, ln: Line):
        m = re.match(r"groupoid\s+(\S+)\s+on\s+(\S+)\s+over\s+(\S+)$", ln.text)
        if not m:
            raise _err(ln, "expected 'groupoid NAME on GAMMA over BASE'")
        name = _name(ln, m.group(1))
        gamma = self.chart(ln, m.group(2))
        base = self.chart(ln, m.group(3))
        parts: Dict[str, Any] = {}
        body = []
        while True:
            bl = self.next()
            if bl is None:
                raise _err(ln, "groupoid block is missing 'end'")
            w = bl.words
            if bl.text == "end":
                break
            if w[0] in ("source", "target", "unit", "inverse") and len(w) == 1:
                if w[0] in parts:
                    raise _err(bl, f"duplicate {w[0]!r} block", w[0])
                if w[0] == "source":
                    imgs = self._pullback_block(bl, gamma, base)
                    for b, e in imgs.items():
                        if e != Expr.coord(gamma, b):
                            raise _err(bl, f"source must project onto the base coordinates; {b!r} maps to {e.render()}")
                elif w[0] == "target":
                    imgs = self._pullback_block(bl, gamma, base)
                elif w[0] == "unit":
                    imgs = self._pullback_block(bl, base, gamma)
                else:
                    imgs = self._pullback_block(bl, gamma, gamma)
                parts[w[0]] = imgs
                body.append((w[0], imgs))
            elif w[0] == "mult":
                mm = re.match(r"mult\s+on\s+(\S+)\s+via\s+(\S+)\s+(\S+)$", bl.text)
                if not mm:
                    raise _err(bl, "expected 'mult on K via P1 P2'")
                K = self.chart(bl, mm.group(1))
                p1 = self._map_ref(bl, mm.group(2), mm.group(1), m.group(2))
                p2 = self._map_ref(bl, mm.group(3), mm.group(1), m.group(2))
                imgs = self._pullback_block(bl, K, gamma)
                parts["mult"] = (mm.group(1), K, p1, p2, imgs)
                body.append(("mult", (mm.group(1), mm.group(2), mm.group(3), imgs)))
            elif w[0] == "triple":
                mm = re.match(r"triple\s+on\s+(\S+)\s+via\s+(\S+)\s+(\S+)\s+(\S+)$", bl.text)
                if not mm:
                    raise _err(bl, "expected 'triple on K3 via Q1 Q2 Q3'")
                K3 = self.chart(bl, mm.group(1))
                qs = [self._map_ref(bl, q, mm.group(1), m.group(2)) for q in mm.group(2, 3, 4)]
                parts["triple"] = (K3, *qs)
                body.append(("triple", mm.groups()))
            elif w[0] == "action" and len(w) == 2:
                act = self.get(bl, "actions", w[1], "action")
                if act.chart != gamma:
                    raise _err(bl, f"action {w[1]!r} lives on another chart", w[1])
                parts["action"] = act
                body.append(("action", w[1]))
            else:
                raise _err(bl, f"unexpected {w[0]!r} in groupoid block", w[0])
        if "mult" not in parts:
            raise _err(ln, "groupoid needs a 'mult' block")
        _, K, p1, p2, mult = parts["mult"]
        try:
            spec = GroupoidSpec(
                gamma, base, parts.get("target", {}), parts.get("unit", {}), K, p1, p2, mult,
                parts.get("inverse"), parts.get("triple"), name,
            )
            obj = WeightedGroupoid(spec, parts["action"]) if "action" in parts else spec
        except (GroupoidError, ExprError) as exc:
            raise _err(ln, str(exc)) from None
        self.declare(ln, "groupoid", name)
        self.doc.groupoids[name] = obj
        self.doc.decls.append(Decl("groupoid", name, {"gamma": m.group(2), "base": m.group(3)}, body, obj, ln.no))

    def _map_ref(self, ln: Line, name: str, src: str, dst: str) -> Dict[str, Expr]:
        if name not in self.doc.maps:
            raise _err(ln, f"unknown map {name!r}", name)
        s, d, imgs = self.doc.maps[name]
        if s != src or d != dst:
            raise _err(ln, f"map {name!r} goes from {s} to {d}, expected {src} to {dst}", name)
        return imgs

    def p_bialgebroid(self, ln: Line):
        m = re.match(r"bialgebroid\s+(\S+)\s+from\s+(\S+)$", ln.text)
        if not m:
            raise _err(ln, "expected 'bialgebroid NAME from ALGEBROID'")
        name = _name(ln, m.group(1))
        A = self.get(ln, "algebroids", m.group(2), "algebroid")
        names = {}
        lines = self.block(ln)
        rest = []
        for bl in lines:
            if bl.words[0] == "momentum":
                lhs, rhs = _split_assign(bl)
                parts = lhs.split()
                if len(parts) != 2 or parts[1] not in A.chart:
                    raise _err(bl, "expected 'momentum COORD = NAME'")
                names[parts[1]] = _name(bl, rhs)
            else:
                rest.append(bl)
        B = bi_algebroid_from_algebroid(A, None, names)
        body = [("momentum", (c, n)) for c, n in names.items()]
        S = None
        for bl in rest:
            lhs, rhs = _split_assign(bl)
            if lhs not in ("S", "P") or S is not None:
                raise _err(bl, "expected a single 'S = expr' or 'P = expr' line", lhs)
            e = _expr(bl, rhs, B.chart)
            body.append((lhs, e))
            S = (lhs, e)
        if S is not None:
            if S[0] == "P":
                B = triangular_bi_algebroid(A, S[1], names)
            else:
                B = BiAlgebroidData(B.chart, B.Qh, S[1], B.degree)
        self.declare(ln, "bialgebroid", name)
        self.doc.bialgebroids[name] = B
        self.doc.decls.append(Decl("bialgebroid", name, {"from": m.group(2)}, body, B, ln.no))

    def p_courant(self, ln: Line):
        m = re.match(r"courant\s+(\S+)\s+from\s+(\S+)(?:\s+lambda\s+(\S+))?$", ln.text)
        if not m:
            raise _err(ln, "expected 'courant NAME from BIALGEBROID [lambda R]'")
        name = _name(ln, m.group(1))
        B = self.get(ln, "bialgebroids", m.group(2), "bi-algebroid")
        try:
            lam = Fraction(m.group(3) or "1")
        except ValueError:
            raise _err(ln, f"lambda must be rational, not {m.group(3)!r}", m.group(3)) from None
        C, rep = courant_from_bi_algebroid(B, lam)
        self.declare(ln, "courant", name)
        self.doc.courants[name] = (C, rep)
        self.doc.decls.append(Decl("courant", name, {"from": m.group(2), "lambda": lam}, [], (C, rep), ln.no))

    _CHECKS = {
        "action": 1, "degree": 2, "homogenize": 1, "homological": 1, "algebroid": 1, "groupoid": 1,
        "lie": 2, "bialgebroid": 1, "sharp": 1, "courant": 1, "poisson": 2, "weight": 2, "generator": 2,
    }

    def p_check(self, ln: Line):
        w = ln.words
        if len(w) < 2 or w[1] not in self._CHECKS:
            raise _err(ln, f"unknown check kind {w[1] if len(w) > 1 else ''!r}", w[1] if len(w) > 1 else None)
        kind = w[1]
        if kind == "weight":
            mm = re.match(r"check\s+weight\s+(\S+)\s+(\(.*\))$", ln.text)
            if not mm:
                raise _err(ln, "expected 'check weight EXPR (w)'")
            args = [mm.group(1), mm.group(2)]
            _weight(ln, args[1])
        else:
            args = w[2:]
            if len(args) != self._CHECKS[kind]:
                raise _err(ln, f"check {kind} takes {self._CHECKS[kind]} argument(s)")
        need = {
            "action": ["actions"], "degree": ["actions", None], "homogenize": ["actions"],
            "homological": ["fields"], "algebroid": ["algebroids"], "groupoid": ["groupoids"],
            "lie": ["groupoids", "algebroids"], "bialgebroid": ["bialgebroids"], "sharp": ["bialgebroids"],
            "courant": ["courants"], "poisson": ["groupoids", "exprs"], "weight": ["exprs", None],
            "generator": ["courants", "exprs"],
        }[kind]
        for a, table in zip(args, need):
            if table is not None and a not in getattr(self.doc, table):
                raise _err(ln, f"unknown {table[:-1]} {a!r}", a)
        if kind == "degree" and not args[1].isdigit():
            raise _err(ln, "degree must be a natural number", args[1])
        self.doc.checks.append((kind, args, ln.no))


def parse(text: str) -> Document:
    return _Parser(text).run()


# ---------------------------------------------------------------------------
# printing


def _wtext(w) -> str:
    return "(" + ",".join(str(a) for a in w) + ")"


def render_chart(name: str, chart: Chart, explicit_bound: bool = True) -> str:
    head = f"chart {name}" + (f" bound {_wtext(chart.degree_bound)}" if explicit_bound else "")
    lines = [head]
    for c in sorted(chart.geometric, key=lambda c: chart.rank(c.name)):
        lines.append(f"  coord {c.name} weight {_wtext(c.weight)} parity {'odd' if c.parity else 'even'}")
    lines.append("end")
    return "\n".join(lines)


def render_action(name: str, chart_name: str, h: HomAction) -> str:
    head = f"action {name} on {chart_name}" + (f" param {h.param}" if h.param != "t" else "")
    lines = [head]
    for n, e in _ranked(h.images.items(), h.chart):
        if e != Expr.coord(h.pchart, n):
            lines.append(f"  {n} = {e.render()}")
    lines.append("end")
    return "\n".join(lines)


def render_algebroid(name: str, chart_name: str, A: AlgebroidData, action_name: Optional[str] = None) -> str:
    """Canonical algebroid block: anchor entries and ``C_ab^c`` for ``a`` before ``b`` in rank order."""
    anchor, structure = structure_from_q(A)
    lines = [f"algebroid {name} on {chart_name} degree {A.degree}"]
    rank = A.chart.rank
    for (a, X), e in sorted(anchor.items(), key=lambda kv: (rank(kv[0][0]), rank(kv[0][1]))):
        lines.append(f"  anchor {a} {X} = {e.render()}")
    for (a, b, c), e in sorted(structure.items(), key=lambda kv: tuple(rank(x) for x in kv[0])):
        if rank(a) < rank(b):
            lines.append(f"  structure {a} {b} {c} = {e.render()}")
    if action_name:
        lines.append(f"  action {action_name}")
    lines.append("end")
    return "\n".join(lines)


def _ranked(items, chart: Chart):
    """Coordinate-keyed items in the rank order of ``chart``."""
    return sorted(items, key=lambda kv: chart.rank(kv[0]))


def _print_decl(d: Decl, doc: Document) -> str:
    if d.kind == "chart":
        if "op" in d.header:
            return f"chart {d.name} = {d.header['op']} " + " ".join(str(a) for a in d.header["args"])
        return render_chart(d.name, d.obj, d.header.get("explicit", False))
    if d.kind == "action":
        return render_action(d.name, d.header["chart"], d.obj)
    if d.kind == "field":
        lines = [f"field {d.name} on {d.header['chart']}"]
        lines += [f"  {n}: {e.render()}" for n, e in _ranked(d.body, d.obj.chart)]
        return "\n".join(lines + ["end"])
    if d.kind == "expr":
        return f"{d.header['kind']} {d.name} on {d.header['chart']} = {d.obj.render()}"
    if d.kind == "map":
        lines = [f"map {d.name} from {d.header['src']} to {d.header['dst']}"]
        lines += [f"  {n} = {e.render()}" for n, e in _ranked(d.body, doc.charts[d.header["dst"]])]
        return "\n".join(lines + ["end"])
    if d.kind == "algebroid":
        lines = [f"algebroid {d.name} on {d.header['chart']} degree {d.header['degree']}"]
        for kind, val in d.body:
            if kind == "anchor":
                (a, X), e = val
                lines.append(f"  anchor {a} {X} = {e.render()}")
            elif kind == "structure":
                (a, b, c), e = val
                lines.append(f"  structure {a} {b} {c} = {e.render()}")
            else:
                lines.append(f"  {kind} {val}")
        return "\n".join(lines + ["end"])
    if d.kind == "groupoid":
        lines = [f"groupoid {d.name} on {d.header['gamma']} over {d.header['base']}"]
        for kind, val in d.body:
            if kind in ("source", "target", "unit", "inverse"):
                lines.append(f"  {kind}")
                dst = doc.charts[d.header["base" if kind in ("source", "target") else "gamma"]]
                lines += [f"    {n} = {e.render()}" for n, e in _ranked(val.items(), dst)]
                lines.append("  end")
            elif kind == "mult":
                k, p1, p2, imgs = val
                lines.append(f"  mult on {k} via {p1} {p2}")
                lines += [f"    {n} = {e.render()}" for n, e in _ranked(imgs.items(), doc.charts[d.header["gamma"]])]
                lines.append("  end")
            elif kind == "triple":
                lines.append("  triple on {} via {} {} {}".format(*val))
            else:
                lines.append(f"  action {val}")
        return "\n".join(lines + ["end"])
    if d.kind == "bialgebroid":
        lines = [f"bialgebroid {d.name} from {d.header['from']}"]
        for kind, val in d.body:
            if kind == "momentum":
                lines.append(f"  momentum {val[0]} = {val[1]}")
            else:
                lines.append(f"  {kind} = {val.render()}")
        return "\n".join(lines + ["end"])
    if d.kind == "courant":
        lam = d.header["lambda"]
        return f"courant {d.name} from {d.header['from']} lambda {lam}"
    raise ValueError(d.kind)


def print_document(doc: Document) -> str:
    """Canonical text: declarations in order, then checks."""
    parts = [_print_decl(d, doc) for d in doc.decls]
    parts += [" ".join(["check", kind] + list(args)) for kind, args, _ in doc.checks]
    return "\n".join(parts) + ("\n" if parts else "")
