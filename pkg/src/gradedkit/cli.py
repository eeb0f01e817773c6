"""Command line entry point.

Exit codes: 0 when every check passes, 1 when any check fails or a
construction is refused, 2 on parse or usage errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .algebroids import AlgebroidError
from .dsl import DSLError, parse
from .grading import ChartError
from .groupoids import GroupoidError
from .lifts import ActionError
from .runner import CommandError, bracket_text, derive_text, homogenize_text, lift_text, run_checks
from .symalg import ExprError


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradedkit", description="Verify graded-bundle, algebroid and groupoid declarations.")
    p.add_argument("--version", action="version", version=f"gradedkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", type=Path)
        sp.add_argument("--name", help="declaration to operate on")

    c = sub.add_parser("check", help="run every check directive")
    common(c)
    c.add_argument("--json", type=Path, help="write the JSON report here ('-' for stdout)")
    c.add_argument("--timing", action="store_true", help="include a timing section in the JSON report")

    d = sub.add_parser("derive", help="Lie functor of a groupoid, printed as declarations")
    common(d)

    li = sub.add_parser("lift", help="tangent, cotangent or higher tangent lift of a chart or action")
    common(li)
    li.add_argument("kind", choices=["tangent", "cotangent", "odd-cotangent", "higher"])
    li.add_argument("k", nargs="?", type=int, default=1)
    li.add_argument("--prefix", default="d", help="name prefix for tangent coordinates (default: d)")

    b = sub.add_parser("bracket", help="derived bracket of two fields (or Courant sections)")
    common(b)
    b.add_argument("s1")
    b.add_argument("s2")

    h = sub.add_parser("homogenize", help="coordinate change making an action canonical")
    common(h)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = args.file.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"gradedkit: cannot read {args.file}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        doc = parse(text)
    except DSLError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: error: {exc.message}", file=sys.stderr)
        return 2

    try:
        if args.command == "check":
            rep = run_checks(doc)
            sys.stdout.write(rep.render())
            if args.json is not None:
                js = rep.to_json(with_timing=args.timing)
                if str(args.json) == "-":
                    sys.stdout.write(js)
                else:
                    args.json.write_text(js, encoding="utf-8")
            return 0 if rep.passed else 1
        if args.command == "derive":
            sys.stdout.write(derive_text(doc, args.name))
        elif args.command == "lift":
            sys.stdout.write(lift_text(doc, args.name, args.kind, args.k, args.prefix))
        elif args.command == "bracket":
            sys.stdout.write(bracket_text(doc, args.name, args.s1, args.s2))
        elif args.command == "homogenize":
            sys.stdout.write(homogenize_text(doc, args.name))
        return 0
    except (CommandError, ChartError) as exc:
        print(f"gradedkit: {exc}", file=sys.stderr)
        return 2
    except (ActionError, AlgebroidError, GroupoidError, ExprError) as exc:
        print(f"gradedkit: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
