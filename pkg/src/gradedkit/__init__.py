"""Symbolic graded bundles, homogeneity structures and weighted Lie algebroids and groupoids."""
from .grading import EVEN, ODD, Chart, ChartError, Coordinate, Weight, mk_chart
from .symalg import Expr, ExprError, parse_expr
from .fields import VecField, is_homological, lie_bracket
from .report import Check, Report

__version__ = "0.1.0"

__all__ = [
    "EVEN", "ODD", "Chart", "ChartError", "Coordinate", "Weight", "mk_chart",
    "Expr", "ExprError", "parse_expr", "VecField", "is_homological", "lie_bracket",
    "Check", "Report", "__version__",
]
