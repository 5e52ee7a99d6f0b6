"""Split finders over a fixed feature set (classic CART baselines and the root bank)."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..dsl import MotifCount, Raw, complexity
from ..seqdata import kmer_names
from ..splits import NodeContext, SemanticRep, SplitChoice, SplitSpec, argmin_feature, best_thresholds
from .generator import raw_best_score
from .population import Candidate, one_hot_codes, raw_candidates, raw_semantics, score_candidates


class RawSplitFinder:
    """Axis-aligned CART over the 4*L one-hot coordinates."""

    def __init__(self, seq_len: int):
        self.seq_len = seq_len
        self.raw_volume = complexity(Raw(0)).volume

    def find_split(self, ctx: NodeContext, X: np.ndarray, y: np.ndarray,
                   min_child: int) -> Optional[SplitChoice]:
        taus, scores = best_thresholds(one_hot_codes(X), y, min_child)
        j = argmin_feature(scores)
        if j is None:
            return None
        spec = SplitSpec(Raw(j), raw_semantics(j), float(taus[j]), float(scores[j]),
                         origin="raw", volume=self.raw_volume)
        return SplitChoice(spec, float(scores.min()))


def kmer_semantics(kmer: str, seq_len: int) -> SemanticRep:
    return SemanticRep(
        rationale=f"{len(kmer)}-mer count baseline feature.",
        name=f"count_{kmer}",
        description=f"Number of overlapping occurrences of {kmer} in positions 0 to {seq_len - 1}.",
    )


class KmerSplitFinder:
    """CART over overlapping k-mer counts, each written as ``motif_count(kmer,0,L-1)``."""

    def __init__(self, seq_len: int, k: int = 2):
        if not 1 <= k <= seq_len:
            raise ValueError(f"k={k} outside [1, {seq_len}]")
        self.seq_len, self.k = seq_len, k
        self.kmers = kmer_names(k)
        self.exprs = [MotifCount(km, 0, seq_len - 1) for km in self.kmers]
        self.volumes = np.array([complexity(e).volume for e in self.exprs])

    def features(self, X: np.ndarray) -> np.ndarray:
        n, L = X.shape
        idx = np.zeros((n, L - self.k + 1), dtype=np.int64)
        for off in range(self.k):
            idx = idx * 4 + X[:, off : L - self.k + 1 + off]
        out = np.zeros((n, 4**self.k))
        np.add.at(out, (np.repeat(np.arange(n), idx.shape[1]), idx.ravel()), 1.0)
        return out

    def find_split(self, ctx, X, y, min_child) -> Optional[SplitChoice]:
        taus, scores = best_thresholds(self.features(X), y, min_child)
        j = argmin_feature(scores, self.volumes)
        if j is None:
            return None
        spec = SplitSpec(self.exprs[j], kmer_semantics(self.kmers[j], self.seq_len),
                         float(taus[j]), float(scores[j]), origin="raw",
                         volume=float(self.volumes[j]))
        return SplitChoice(spec, raw_best_score(X, y, min_child))


class BankSplitFinder:
    """CART over a static bank of generated features plus every raw coordinate."""

    def __init__(self, bank: Sequence[Candidate], seq_len: int):
        generated = [c for c in bank if c.origin != "raw"]
        seen = set()
        cands = []
        for c in generated:
            if c.text not in seen:
                seen.add(c.text)
                cands.append(Candidate(c.expr, c.semantics, "bank", len(cands)))
        self.bank = cands
        self.candidates = cands + raw_candidates(seq_len, start_order=len(cands))

    def find_split(self, ctx, X, y, min_child) -> Optional[SplitChoice]:
        scored = score_candidates(self.candidates, X, y, min_child)
        scores = np.array([c.score for c in scored])
        j = argmin_feature(scores, [c.volume for c in scored])
        if j is None:
            return None
        best = scored[j]
        spec = SplitSpec(best.expr, best.semantics, best.threshold, best.score,
                         origin="raw" if best.origin == "raw" else "generated",
                         volume=best.volume)
        return SplitChoice(spec, raw_best_score(X, y, min_child))
