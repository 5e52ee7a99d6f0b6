"""Interpretable sequence-feature language: AST, parser, evaluator, metrics."""
from importlib import resources

from .ast import (
    NAMED_SETS, Add, And, Count, Expr, MotifCount, MotifPresent, Not, NucSet, Or,
    PosIn, Prop, Raw, Scale, StackEnergy, Sub, Transitions, depth, is_indicator,
    kind, render, walk, window_count,
)
from .evaluate import eval_expr, evaluate, stacking_table
from .halstead import HalsteadMetrics, complexity
from .parser import (
    DEFAULT_MAX_DEPTH, DEFAULT_MAX_WINDOWS, ArityError, DepthError, DSLError,
    DSLSyntaxError, DSLTypeError, MotifCharacterError, SetLiteralError,
    UnknownFunctionError, WindowCountError, WindowRangeError, parse, parse_valid,
    validate,
)


def grammar_text() -> str:
    """The BNF grammar shipped with the package (embedded in code-generation prompts)."""
    return resources.files("seqtree.assets").joinpath("grammar.bnf").read_text()


__all__ = [
    "NAMED_SETS", "Add", "And", "ArityError", "Count", "DEFAULT_MAX_DEPTH",
    "DEFAULT_MAX_WINDOWS", "DSLError", "DSLSyntaxError", "DSLTypeError", "DepthError",
    "Expr", "HalsteadMetrics", "MotifCharacterError", "MotifCount", "MotifPresent",
    "Not", "NucSet", "Or", "PosIn", "Prop", "Raw", "Scale", "SetLiteralError",
    "StackEnergy", "Sub", "Transitions", "UnknownFunctionError", "WindowCountError",
    "WindowRangeError", "complexity", "depth", "eval_expr", "evaluate", "grammar_text",
    "is_indicator", "kind", "parse", "parse_valid", "render", "stacking_table",
    "validate", "walk", "window_count",
]
