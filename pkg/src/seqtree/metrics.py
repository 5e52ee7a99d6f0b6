from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auprc: float

    def as_dict(self) -> dict:
        return asdict(self)


def average_precision(scores, labels) -> float:
    """Step-wise average precision of the ranking by descending score.

    Ties in ``scores`` keep the original row order. Raises if there is no
    positive label.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape or s.size == 0:
        raise MetricsError("scores and labels must be aligned and non-empty")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricsError("average precision is undefined without positive labels")
    order = np.argsort(-s, kind="stable")
    hits = y[order]
    tp = np.cumsum(hits)
    precision_at = tp / np.arange(1, s.size + 1)
    return float(precision_at[hits == 1].sum() / n_pos)


def compute_metrics(p1s, labels, threshold: float = 0.5) -> Metrics:
    p = np.asarray(p1s, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape or p.size == 0:
        raise MetricsError("predictions and labels must be aligned and non-empty")
    pred = (p > threshold).astype(np.int64)
    tp = int(((pred == 1) & (y == 1)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(
        accuracy=float((pred == y).mean()),
        precision=precision,
        recall=recall,
        f1=f1,
        auprc=average_precision(p, y),
    )
