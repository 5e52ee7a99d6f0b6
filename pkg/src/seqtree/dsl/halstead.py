from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .ast import SIGNATURES, Expr, args, kind, render_const, walk


@dataclass(frozen=True)
class HalsteadMetrics:
    volume: float
    difficulty: float
    effort: float
    n1: int = 0
    n2: int = 0
    N1: int = 0
    N2: int = 0


def _operand_tokens(e: Expr) -> list[str]:
    out = []
    for k, v in zip(SIGNATURES[kind(e)][1], args(e)):
        if k == "set":
            out.append(v.render())
        elif k == "int":
            out.append(str(v))
        elif k == "motif":
            out.append(f'"{v}"')
        elif k == "const":
            out.append(render_const(v))
    return out


def complexity(e: Expr) -> HalsteadMetrics:
    """Halstead volume, difficulty and effort of an expression.

    Operators are node kinds (``prop``, ``and``, ...); operands are the literal
    tokens: sets, positions, motifs and constants.
    """
    operators = Counter(kind(node) for node in walk(e))
    operands = Counter(tok for node in walk(e) for tok in _operand_tokens(node))
    n1, n2 = len(operators), len(operands)
    N1, N2 = sum(operators.values()), sum(operands.values())
    vocab = n1 + n2
    volume = (N1 + N2) * math.log2(vocab) if vocab > 1 else 0.0
    difficulty = (n1 / 2) * (N2 / n2) if n2 else 0.0
    return HalsteadMetrics(volume, difficulty, volume * difficulty, n1, n2, N1, N2)
