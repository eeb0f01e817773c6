"""Execution of ``check`` directives and the derive/lift/bracket/homogenize commands."""
from __future__ import annotations

import itertools
import time
from typing import Dict, List, Optional, Tuple

from .algebroids import (
    AlgebroidData,
    AlgebroidError,
    courant_dorfman,
    courant_pairing,
    loday_residual,
    sharp_map,
    verify_bi_algebroid,
    verify_weighted_algebroid,
)
from .dsl import Document, render_action, render_algebroid, render_chart
from .fields import VecField, derived_bracket, derived_bracket_ham, is_homological
from .grading import Chart, Weight
from .groupoids import (
    GroupoidError,
    WeightedGroupoid,
    lie_functor,
    lie_functor_action,
    poisson_weight_audit,
    verify_groupoid,
    verify_weighted_groupoid,
)
from .lifts import (
    ActionError,
    HomAction,
    action_degree,
    apply_change,
    cotangent_chart,
    higher_tangent_chart,
    homogenize,
    phase_lift_action,
    tangent_chart,
    tangent_lift_action,
    verify_action,
)
from .report import Check, Report
from .symalg import Expr, ExprError, is_homogeneous

__all__ = ["run_checks", "derive_text", "lift_text", "bracket_text", "homogenize_text", "CommandError", "courant_sections"]


class CommandError(ValueError):
    """A command referred to a missing or unsuitable declaration."""


def _spec(G):
    return G.spec if isinstance(G, WeightedGroupoid) else G


def _prefixed(rep: Report, prefix: str) -> List[Check]:
    out = Report()
    out.extend(rep, prefix)
    return out.checks


def _guard(cid: str, fn) -> List[Check]:
    try:
        return fn()
    except (ActionError, AlgebroidError, GroupoidError, ExprError) as exc:
        return [Check(cid, failure=str(exc))]


def _check_degree(doc: Document, h: str, k: str) -> List[Check]:
    d = action_degree(doc.actions[h])
    chk = Check(f"{h}:degree")
    chk.add("degree", "0" if d == int(k) else f"{d} instead of {k}")
    chk.audit("degree", d)
    return [chk]


def _check_homogenize(doc: Document, h: str) -> List[Check]:
    act = doc.actions[h]
    chk = Check(f"{h}:homogenize")
    change = homogenize(act)
    for n in sorted(change):
        chk.audit(f"change {n}", change[n])
    new = apply_change(act, change)
    canon = HomAction.canonical(act.chart, param=act.param)
    for n in act.chart.names:
        if n in new.images:
            chk.add(f"canonical {n}", new.images[n] - canon.images[n])
    return [verify_action(new, f"{h}:homogenized-action"), chk]


def render_block_pair(A: AlgebroidData) -> str:
    return render_chart("C", A.chart) + "\n" + render_algebroid("A", "C", A)


def _check_lie(doc: Document, g: str, a: str) -> List[Check]:
    G = doc.groupoids[g]
    A = doc.algebroids[a]
    derived = lie_functor(_spec(G))
    chk = Check(f"{g}:lie={a}")
    got, want = render_block_pair(derived), render_block_pair(A)
    if got == want:
        chk.add("declaration", "0")
    else:
        diff = [f"{x!r} vs {y!r}" for x, y in itertools.zip_longest(got.split("\n"), want.split("\n")) if x != y]
        chk.add("declaration", "; ".join(diff))
    out = [chk]
    if isinstance(G, WeightedGroupoid):
        act = lie_functor_action(G)
        out += _prefixed(verify_weighted_algebroid(derived, act), f"{g}:lie:")
        if A.action is not None:
            achk = Check(f"{g}:lie-action={a}")
            for n, e in act.images.items():
                achk.add(n, e - A.action.images[n].to_chart(e.chart))
            out.append(achk)
    return out


def courant_sections(C) -> List[Expr]:
    """Basis sections of top degree: a fibre-linear coordinate times a base monomial of degree at most one."""
    chart = C.chart
    k = C.degree
    lin = [c for c in chart.geometric if c.weight[1] == 1]
    base = [c for c in chart.geometric if c.weight[1] == 0]
    out = []
    for c in lin:
        e = Expr.coord(chart, c.name)
        if c.weight[0] == k - 1:
            out.append(e)
        for b in base:
            if b.weight[0] > 0 and c.weight[0] + b.weight[0] == k - 1:
                out.append(Expr.coord(chart, b.name) * e)
    return out


def _check_courant(doc: Document, name: str) -> List[Check]:
    C, rep = doc.courants[name]
    out = _prefixed(rep, f"{name}:")
    secs = courant_sections(C)
    pair = Check(f"{name}:pairing")
    dorf = Check(f"{name}:dorfman")
    for (i, s1), (j, s2) in itertools.product(enumerate(secs), repeat=2):
        _, pc = courant_pairing(C, s1, s2)
        _, dc = courant_dorfman(C, s1, s2)
        for lbl, v in pc.residuals.items():
            pair.add(f"{lbl} [{s1.render()},{s2.render()}]", v)
        for lbl, v in dc.residuals.items():
            dorf.add(f"{lbl} [{s1.render()},{s2.render()}]", v)
    pair.audit("sections", len(secs))
    loday = Check(f"{name}:loday")
    for a, b, c in itertools.product(secs, repeat=3):
        r = loday_residual(C.theta, a, b, c)
        loday.add(f"[{a.render()},{b.render()},{c.render()}]", r)
    return out + [pair, dorf, loday]


def _check_weight(doc: Document, e: str, w: str) -> List[Check]:
    target = Weight(int(a) for a in w.strip("() ").split(","))
    got = is_homogeneous(doc.exprs[e])
    chk = Check(f"{e}:weight")
    chk.add("weight", "0" if got == target or not doc.exprs[e].terms else f"{got} instead of {target}")
    return [chk]


def _check_generator(doc: Document, c: str, e: str) -> List[Check]:
    C, _ = doc.courants[c]
    chk = Check(f"{c}:generator={e}")
    chk.add("Theta - expected", C.theta - doc.exprs[e].to_chart(C.chart))
    return [chk]


def _check_groupoid(doc: Document, g: str) -> List[Check]:
    G = doc.groupoids[g]
    out = _prefixed(verify_groupoid(_spec(G)), f"{g}:")
    if isinstance(G, WeightedGroupoid):
        out += _prefixed(verify_weighted_groupoid(G), f"{g}:")
    return out


def _check_poisson(doc: Document, g: str, e: str) -> List[Check]:
    G = doc.groupoids[g]
    if not isinstance(G, WeightedGroupoid):
        return [Check(f"{g}:poisson", failure="the Poisson weight audit needs a weighted groupoid")]
    return _prefixed(poisson_weight_audit(G, doc.exprs[e]), f"{g}:")


def _run_one(doc: Document, kind: str, args: List[str]) -> List[Check]:
    cid = f"{args[0]}:{kind}"
    if kind == "action":
        return _guard(cid, lambda: [verify_action(doc.actions[args[0]], cid)])
    if kind == "degree":
        return _guard(cid, lambda: _check_degree(doc, *args))
    if kind == "homogenize":
        return _guard(cid, lambda: _check_homogenize(doc, args[0]))
    if kind == "homological":
        return _guard(cid, lambda: [is_homological(doc.fields[args[0]], cid)])
    if kind == "algebroid":
        return _guard(cid, lambda: _prefixed(verify_weighted_algebroid(doc.algebroids[args[0]]), f"{args[0]}:"))
    if kind == "groupoid":
        return _guard(cid, lambda: _check_groupoid(doc, args[0]))
    if kind == "lie":
        return _guard(cid, lambda: _check_lie(doc, *args))
    if kind == "bialgebroid":
        return _guard(cid, lambda: _prefixed(verify_bi_algebroid(doc.bialgebroids[args[0]]), f"{args[0]}:"))
    if kind == "sharp":
        return _guard(cid, lambda: _prefixed(sharp_map(doc.bialgebroids[args[0]])[2], f"{args[0]}:"))
    if kind == "courant":
        return _guard(cid, lambda: _check_courant(doc, args[0]))
    if kind == "poisson":
        return _guard(cid, lambda: _check_poisson(doc, *args))
    if kind == "weight":
        return _guard(cid, lambda: _check_weight(doc, *args))
    if kind == "generator":
        return _guard(cid, lambda: _check_generator(doc, *args))
    raise CommandError(f"unknown check kind {kind!r}")


def run_checks(doc: Document) -> Report:
    """All check directives, in declaration order."""
    rep = Report()
    for kind, args, line in doc.checks:
        start = time.perf_counter()
        checks = _run_one(doc, kind, args)
        for c in checks:
            rep.add(c)
        rep.timing[f"line {line}: check {kind} {' '.join(args)}"] = round(time.perf_counter() - start, 6)
    return rep


# ---------------------------------------------------------------------------
# commands producing declarations


def _pick(doc: Document, table: str, name: Optional[str], what: str) -> Tuple[str, object]:
    t = getattr(doc, table)
    if name is None:
        if len(t) != 1:
            raise CommandError(f"--name is required: the file declares {len(t)} {what}s")
        name = next(iter(t))
    if name not in t:
        raise CommandError(f"no {what} named {name!r}")
    return name, t[name]


def derive_text(doc: Document, name: Optional[str] = None) -> str:
    """The Lie functor of a groupoid as chart, algebroid and (weighted case) action blocks."""
    name, G = _pick(doc, "groupoids", name, "groupoid")
    A = lie_functor(_spec(G))
    blocks = [render_chart(f"{name}_lie_chart", A.chart)]
    act_name = None
    if isinstance(G, WeightedGroupoid):
        act_name = f"{name}_lie_action"
        blocks.append(render_action(act_name, f"{name}_lie_chart", lie_functor_action(G)))
    blocks.append(render_algebroid(f"{name}_lie", f"{name}_lie_chart", A, act_name))
    return "\n".join(blocks) + "\n"


def lift_text(doc: Document, name: Optional[str], kind: str, k: int = 1, prefix: str = "d") -> str:
    """Tangent, cotangent or higher tangent lift of a chart or an action."""
    if name is None:
        raise CommandError("--name is required for lift")
    if name in doc.charts:
        chart, act = doc.charts[name], None
    elif name in doc.actions:
        act = doc.actions[name]
        chart = act.chart
    else:
        raise CommandError(f"no chart or action named {name!r}")
    if kind == "tangent":
        lifted = tangent_chart(chart, prefix)
    elif kind == "cotangent":
        lifted = cotangent_chart(chart)
    elif kind == "odd-cotangent":
        lifted = cotangent_chart(chart, odd=True)
    elif kind == "higher":
        lifted = higher_tangent_chart(chart, k)
    else:
        raise CommandError(f"unknown lift {kind!r}")
    cname = f"{name}_{kind.replace('-', '_')}" if kind != "higher" else f"{name}_T{k}"
    blocks = [render_chart(cname, lifted)]
    if act is not None:
        if kind == "tangent":
            lifted_act = tangent_lift_action(act, lifted, prefix)
        elif kind in ("cotangent", "odd-cotangent"):
            lifted_act = phase_lift_action(act, lifted)
        else:
            if not act.is_diagonal():
                raise CommandError("higher lifts of actions are implemented for diagonal actions only")
            lifted_act = HomAction.canonical(lifted, 0, act.param) if chart.arity == 1 else None
            if lifted_act is None:
                raise CommandError("higher lifts of actions need a single weight component")
        blocks.append(render_action(f"{cname}_action", cname, lifted_act))
    return "\n".join(blocks) + "\n"


def _field_block(name: str, chart_name: str, X: VecField) -> str:
    lines = [f"field {name} on {chart_name}"]
    lines += [f"  {n}: {e.render()}" for n, e in X.comps.items()]
    return "\n".join(lines + ["end"])


def bracket_text(doc: Document, name: Optional[str], s1: str, s2: str) -> str:
    """Derived bracket ``[[Q, s1], s2]`` of two fields, or ``{{s1, Theta}, s2}`` for a Courant generator."""
    if name is not None and name in doc.courants:
        C, _ = doc.courants[name]
        for s in (s1, s2):
            if s not in doc.exprs:
                raise CommandError(f"no expression named {s!r}")
        e = derived_bracket_ham(C.theta, doc.exprs[s1].to_chart(C.chart), doc.exprs[s2].to_chart(C.chart))
        return e.render() + "\n"
    if name is not None and name in doc.algebroids:
        Q = doc.algebroids[name].Q
    else:
        name, Q = _pick(doc, "fields", name, "field")
    for s in (s1, s2):
        if s not in doc.fields:
            raise CommandError(f"no field named {s!r}")
    X = derived_bracket(Q, doc.fields[s1], doc.fields[s2])
    cname = doc.chart_name(Q.chart) or "C"
    return _field_block(f"{s1}_{s2}_bracket", cname, X) + "\n"


def homogenize_text(doc: Document, name: Optional[str]) -> str:
    name, act = _pick(doc, "actions", name, "action")
    change = homogenize(act)
    if not change:
        return "# already canonical\n"
    return "".join(f"{n} = {change[n].render()}\n" for n in act.chart.names if n in change)
