from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from ..dsl import Expr, Raw, complexity, evaluate, render
from ..dsl.ast import BASES
from ..splits import SemanticRep, best_thresholds, tie_key

ORIGINS = ("llm_init", "llm_explore", "llm_exploit", "raw", "bank")


@dataclass(frozen=True)
class Candidate:
    expr: Expr
    semantics: SemanticRep
    origin: str
    order: int = 0
    score: Optional[float] = None
    threshold: Optional[float] = None
    volume: float = field(default=None)

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        if self.volume is None:
            object.__setattr__(self, "volume", complexity(self.expr).volume)

    @property
    def feasible(self) -> bool:
        return self.score is not None and math.isfinite(self.score)

    @property
    def text(self) -> str:
        return render(self.expr)

    def sort_key(self):
        score = self.score if self.feasible else math.inf
        return (float(tie_key(score)), self.volume, self.order)


def raw_semantics(j: int) -> SemanticRep:
    pos, base = divmod(j, 4)
    b = BASES[base]
    return SemanticRep(
        rationale="One-hot coordinate of the raw sequence.",
        name=f"pos_{pos}_is_{b}",
        description=f"Position {pos} is base {b}: 1 if the nucleotide at position {pos} is {b}, otherwise 0.",
    )


def raw_candidates(seq_len: int, start_order: int = 0) -> list[Candidate]:
    vol = complexity(Raw(0)).volume
    return [
        Candidate(Raw(j), raw_semantics(j), "raw", start_order + j, volume=vol)
        for j in range(4 * seq_len)
    ]


def one_hot_codes(X: np.ndarray) -> np.ndarray:
    n, L = X.shape
    return (X[:, :, None] == np.arange(4, dtype=X.dtype)).reshape(n, 4 * L).astype(np.float64)


def score_candidates(cands: Iterable[Candidate], X: np.ndarray, y: np.ndarray,
                     min_child: int) -> list[Candidate]:
    """Attach the best threshold and score on the node rows to every candidate."""
    cands = list(cands)
    if not cands:
        return []
    raw_ix = [i for i, c in enumerate(cands) if isinstance(c.expr, Raw)]
    other_ix = [i for i, c in enumerate(cands) if not isinstance(c.expr, Raw)]
    taus = np.full(len(cands), np.nan)
    scores = np.full(len(cands), np.inf)
    if raw_ix:
        oh = one_hot_codes(X)
        cols = [cands[i].expr.index for i in raw_ix]
        t, s = best_thresholds(oh[:, cols], y, min_child)
        taus[raw_ix], scores[raw_ix] = t, s
    if other_ix:
        F = np.column_stack([evaluate(cands[i].expr, X) for i in other_ix])
        t, s = best_thresholds(F, y, min_child)
        taus[other_ix], scores[other_ix] = t, s
    out = []
    for c, t, s in zip(cands, taus, scores):
        out.append(replace(c, score=float(s), threshold=None if np.isnan(t) else float(t)))
    return out


class Population:
    """Candidates kept sorted by (score, Halstead volume, generation order)."""

    def __init__(self, candidates: Iterable[Candidate] = (), capacity: int = 10):
        if capacity < 1:
            raise ValueError("population capacity must be >= 1")
        self.capacity = capacity
        self.candidates = sorted(candidates, key=Candidate.sort_key)

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]

    def __eq__(self, other):
        return isinstance(other, Population) and self.candidates == other.candidates

    @property
    def min_score(self) -> float:
        return self.candidates[0].score if self.candidates and self.candidates[0].feasible else math.inf

    def texts(self) -> set[str]:
        return {c.text for c in self.candidates}

    def top(self, m: Optional[int] = None) -> list[Candidate]:
        return self.candidates[: self.capacity if m is None else m]

    def select(self, new: Iterable[Candidate]) -> "Population":
        """Top-M of the union of incumbents and ``new``."""
        merged = sorted([*self.candidates, *new], key=Candidate.sort_key)
        return Population(merged[: self.capacity], self.capacity)

    def best(self) -> Optional[Candidate]:
        if self.candidates and self.candidates[0].feasible:
            return self.candidates[0]
        return None
