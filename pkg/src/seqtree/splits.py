"""Gini impurity, weighted split scores and threshold search.

Scores are compared through :func:`tie_key`, which rounds to 12 decimals so
that mathematically equal scores reached by different float paths tie
exactly. Among tied thresholds the smallest wins; among tied features the
lower Halstead volume, then the earlier generation order.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dsl import Expr, complexity, render

IMPROVEMENT_EPS = 1e-12
TIE_DECIMALS = 12


@dataclass(frozen=True)
class ImpurityCounts:
    n0: int
    n1: int

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0:
            raise ValueError("class counts must be non-negative")


def gini(c: ImpurityCounts) -> float:
    n = c.n0 + c.n1
    if n < 1:
        raise ValueError("gini of an empty node is undefined outside split weighting")
    return 1.0 - (c.n0 / n) ** 2 - (c.n1 / n) ** 2


def gini_of_labels(labels) -> float:
    y = np.asarray(labels)
    n1 = int(y.sum())
    return gini(ImpurityCounts(len(y) - n1, n1))


def tie_key(score):
    return np.round(score, TIE_DECIMALS)


def _weighted_gini(l0, l1, r0, r1):
    l0, l1, r0, r1 = (np.asarray(c, dtype=np.float64) for c in (l0, l1, r0, r1))
    nl = l0 + l1
    nr = r0 + r1
    n = nl + nr
    with np.errstate(divide="ignore", invalid="ignore"):
        gl = 1.0 - (l0 / nl) ** 2 - (l1 / nl) ** 2
        gr = 1.0 - (r0 / nr) ** 2 - (r1 / nr) ** 2
    gl = np.where(nl > 0, gl, 0.0)
    gr = np.where(nr > 0, gr, 0.0)
    return (nl / n) * gl + (nr / n) * gr


def split_score(values: Sequence[float], labels: Sequence[int], threshold: float) -> float:
    """Size-weighted Gini of the partition ``values <= threshold`` / ``> threshold``."""
    v = np.asarray(values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if v.shape != y.shape:
        raise ValueError(f"{v.size} values but {y.size} labels")
    if v.size == 0:
        raise ValueError("split_score needs at least one row")
    left = v <= threshold
    l1 = int(y[left].sum())
    r1 = int(y[~left].sum())
    nl = int(left.sum())
    return float(_weighted_gini(nl - l1, l1, (v.size - nl) - r1, r1))


def best_thresholds(F: np.ndarray, labels, min_child: int = 1):
    """Best threshold and score for every column of ``F`` at once.

    Returns ``(thresholds, scores)``; infeasible columns (constant, or no cut
    leaving ``min_child`` rows on both sides) get ``nan`` and ``inf``.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    y = np.asarray(labels, dtype=np.int64)
    n, m = F.shape
    taus = np.full(m, np.nan)
    scores = np.full(m, np.inf)
    if n < 2 or m == 0:
        return taus, scores
    order = np.argsort(F, axis=0, kind="stable")
    Fs = np.take_along_axis(F, order, axis=0)
    l1 = np.cumsum(y[order], axis=0)[:-1]
    nl = np.arange(1, n, dtype=np.int64)[:, None]
    total1 = int(y.sum())
    s = _weighted_gini(nl - l1, l1, (n - nl) - (total1 - l1), total1 - l1)
    lo = max(min_child, 1)
    valid = (Fs[1:] != Fs[:-1]) & (nl >= lo) & (n - nl >= lo)
    s = np.where(valid, s, np.inf)
    idx = np.argmin(tie_key(s), axis=0)
    cols = np.arange(m)
    best = s[idx, cols]
    ok = np.isfinite(best)
    scores[ok] = best[ok]
    taus[ok] = (Fs[idx, cols][ok] + Fs[idx + 1, cols][ok]) / 2.0
    return taus, scores


def best_threshold(values, labels, min_child: int = 1) -> Optional[tuple[float, float]]:
    """``(threshold, score)`` minimising the split score, or ``None`` if infeasible."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0 or v.size != len(labels):
        raise ValueError("values and labels must be non-empty and aligned")
    taus, scores = best_thresholds(v[:, None], labels, min_child)
    if not np.isfinite(scores[0]):
        return None
    return float(taus[0]), float(scores[0])


def argmin_feature(scores, volumes=None) -> Optional[int]:
    """Index of the best feature under (score, volume, position) order."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0 or not np.isfinite(scores).any():
        return None
    vol = np.zeros_like(scores) if volumes is None else np.asarray(volumes, dtype=np.float64)
    order = np.lexsort((np.arange(scores.size), vol, tie_key(scores)))
    return int(order[0])


@dataclass(frozen=True)
class SemanticRep:
    rationale: str
    name: str
    description: str

    def __post_init__(self):
        if not self.name or len(self.name) > 80 or "\n" in self.name or "\r" in self.name:
            raise ValueError(f"invalid feature name {self.name!r}")
        if not self.description:
            raise ValueError("feature description must be non-empty")


@dataclass(frozen=True)
class SplitSpec:
    expr: Expr
    semantics: SemanticRep
    threshold: float
    score: float
    op: str = "<="
    origin: str = "raw"
    volume: float = field(default=None)

    def __post_init__(self):
        if self.op not in ("<=", ">"):
            raise ValueError(f"op must be '<=' or '>', got {self.op!r}")
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.volume is None:
            object.__setattr__(self, "volume", complexity(self.expr).volume)

    @property
    def text(self) -> str:
        return render(self.expr)

    def branch(self, op: str) -> "SplitSpec":
        return replace(self, op=op)


@dataclass
class SplitChoice:
    """What a split finder hands back to induction for one node."""

    spec: SplitSpec
    raw_best: float = np.inf
    log: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NodeContext:
    """Root-to-node split conditions plus the rows that reached the node."""

    path: tuple[SplitSpec, ...]
    indices: tuple[int, ...]
    depth: int

    def __post_init__(self):
        if len(self.path) != self.depth:
            raise ValueError("path length must equal node depth")

    @property
    def label(self) -> str:
        return "root" + "".join("/L" if s.op == "<=" else "/R" for s in self.path)
