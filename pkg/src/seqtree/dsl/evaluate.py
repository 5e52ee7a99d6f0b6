"""Feature evaluation.

Two independent routes: :func:`evaluate` works column-wise on an integer-coded
``(n, L)`` matrix and is what induction uses; :func:`eval_expr` walks a single
string in plain Python. Tests cross-check them.
"""
from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

from .ast import (
    BASES, Add, And, Count, Expr, MotifCount, MotifPresent, Not, Or, PosIn, Prop,
    Raw, Scale, StackEnergy, Sub, Transitions,
)


@lru_cache(maxsize=None)
def stacking_table() -> dict[str, float]:
    """Dinucleotide -> stacking free energy (kcal/mol), from the shipped asset."""
    text = resources.files("seqtree.assets").joinpath("stacking_energy.txt").read_text()
    table = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, value = line.split()
            table[key] = float(value)
    if sorted(table) != sorted(a + b for a in BASES for b in BASES):
        raise RuntimeError("stacking table must cover all 16 dinucleotides")
    return table


@lru_cache(maxsize=None)
def _stacking_lut() -> np.ndarray:
    t = stacking_table()
    return np.array([t[a + b] for a in BASES for b in BASES], dtype=np.float64)


def _isin(block: np.ndarray, codes: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(4, dtype=bool)
    mask[list(codes)] = True
    return mask[block]


def _motif_hits(X: np.ndarray, motif: str, a: int, b: int) -> np.ndarray:
    k = len(motif)
    n_starts = b - a + 2 - k
    hits = np.ones((X.shape[0], max(n_starts, 0)), dtype=bool)
    for off, base in enumerate(motif):
        c = BASES.index(base)
        hits &= X[:, a + off : a + off + n_starts] == c
    return hits


def evaluate(e: Expr, X: np.ndarray) -> np.ndarray:
    """Evaluate ``e`` on every row of the integer-coded matrix ``X``."""
    if isinstance(e, Count):
        return _isin(X[:, e.start : e.end + 1], e.nucs.codes()).sum(axis=1).astype(np.float64)
    if isinstance(e, Prop):
        width = e.end - e.start + 1
        return _isin(X[:, e.start : e.end + 1], e.nucs.codes()).sum(axis=1).astype(np.float64) / width
    if isinstance(e, PosIn):
        return _isin(X[:, e.pos], e.nucs.codes()).astype(np.float64)
    if isinstance(e, MotifCount):
        return _motif_hits(X, e.motif, e.start, e.end).sum(axis=1).astype(np.float64)
    if isinstance(e, MotifPresent):
        return _motif_hits(X, e.motif, e.start, e.end).any(axis=1).astype(np.float64)
    if isinstance(e, Transitions):
        left = _isin(X[:, e.start : e.end], e.src.codes())
        right = _isin(X[:, e.start + 1 : e.end + 1], e.dst.codes())
        return (left & right).sum(axis=1).astype(np.float64)
    if isinstance(e, StackEnergy):
        pairs = X[:, e.start : e.end].astype(np.intp) * 4 + X[:, e.start + 1 : e.end + 1]
        # sequential left-to-right sum so results match the scalar route bit for bit
        out = np.zeros(X.shape[0], dtype=np.float64)
        lut = _stacking_lut()
        for col in range(pairs.shape[1]):
            out += lut[pairs[:, col]]
        return out
    if isinstance(e, Raw):
        pos, base = divmod(e.index, 4)
        return (X[:, pos] == base).astype(np.float64)
    if isinstance(e, Add):
        return evaluate(e.left, X) + evaluate(e.right, X)
    if isinstance(e, Sub):
        return evaluate(e.left, X) - evaluate(e.right, X)
    if isinstance(e, Scale):
        return float(e.factor) * evaluate(e.expr, X)
    if isinstance(e, And):
        return np.minimum(evaluate(e.left, X), evaluate(e.right, X))
    if isinstance(e, Or):
        return np.maximum(evaluate(e.left, X), evaluate(e.right, X))
    if isinstance(e, Not):
        return 1.0 - evaluate(e.expr, X)
    raise TypeError(f"not a feature expression: {e!r}")


def eval_expr(e: Expr, seq: str) -> float:
    """Evaluate ``e`` on one sequence (expression must be validated for ``len(seq)``)."""
    if isinstance(e, Count):
        return float(sum(seq[p] in e.nucs.bases for p in range(e.start, e.end + 1)))
    if isinstance(e, Prop):
        n = sum(seq[p] in e.nucs.bases for p in range(e.start, e.end + 1))
        return float(n) / (e.end - e.start + 1)
    if isinstance(e, PosIn):
        return 1.0 if seq[e.pos] in e.nucs.bases else 0.0
    if isinstance(e, (MotifCount, MotifPresent)):
        k = len(e.motif)
        hits = sum(
            seq[p : p + k] == e.motif for p in range(e.start, e.end - k + 2)
        )
        if isinstance(e, MotifPresent):
            return 1.0 if hits else 0.0
        return float(hits)
    if isinstance(e, Transitions):
        return float(sum(
            seq[p] in e.src.bases and seq[p + 1] in e.dst.bases
            for p in range(e.start, e.end)
        ))
    if isinstance(e, StackEnergy):
        table = stacking_table()
        total = 0.0
        for p in range(e.start, e.end):
            total += table[seq[p : p + 2]]
        return total
    if isinstance(e, Raw):
        pos, base = divmod(e.index, 4)
        return 1.0 if seq[pos] == BASES[base] else 0.0
    if isinstance(e, Add):
        return eval_expr(e.left, seq) + eval_expr(e.right, seq)
    if isinstance(e, Sub):
        return eval_expr(e.left, seq) - eval_expr(e.right, seq)
    if isinstance(e, Scale):
        return float(e.factor) * eval_expr(e.expr, seq)
    if isinstance(e, And):
        return min(eval_expr(e.left, seq), eval_expr(e.right, seq))
    if isinstance(e, Or):
        return max(eval_expr(e.left, seq), eval_expr(e.right, seq))
    if isinstance(e, Not):
        return 1.0 - eval_expr(e.expr, seq)
    raise TypeError(f"not a feature expression: {e!r}")
