"""scikit-learn style classifier around tree induction."""
from __future__ import annotations

from dataclasses import asdict

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .featgen import (
    BankSplitFinder, GenerationConfig, KmerSplitFinder, NodeGenerator, RawSplitFinder,
    TaskContext, Transcript, root_feature_bank,
)
from .seqdata import SequenceDataset, check_sequences, encode
from .tree import (
    DecisionTree, InductionConfig, apply_codes, bank_to_dicts, grow_tree, predict_proba,
    save_tree,
)

DEFAULT_TASK = (
    "Each sample is a DNA sequence and the label is binary. Given a current node that we "
    "want to split in the tree, construct a feature of the sequence that separates the two "
    "classes at this node."
)


def check_sequence_input(X) -> list[str]:
    """Coerce ``X`` (list, array or Series of strings) to a validated list."""
    if isinstance(X, str):
        raise TypeError("expected a collection of sequences, got a single string")
    seqs = [str(s) for s in np.asarray(X, dtype=object).ravel()] if not isinstance(X, list) else X
    check_sequences(seqs)
    return list(seqs)


def check_binary_labels(y, n: int) -> np.ndarray:
    arr = np.asarray(y).ravel()
    if arr.shape[0] != n:
        raise ValueError(f"got {arr.shape[0]} labels for {n} sequences")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return arr.astype(np.int64)


def build_finder(mode: str, train: SequenceDataset, cfg: InductionConfig,
                 gen_cfg: GenerationConfig, backend, task: TaskContext,
                 transcript: Transcript | None = None):
    """Split finder for ``mode`` plus the bank (no-adapt mode only)."""
    if mode == "cart_onehot":
        return RawSplitFinder(train.seq_len), None
    if mode == "cart_kmer":
        return KmerSplitFinder(train.seq_len, cfg.kmer_k), None
    if backend is None:
        raise ValueError(f"mode {mode!r} needs a backend")
    gen = NodeGenerator(backend, task, gen_cfg, transcript or Transcript())
    if mode == "deft":
        return gen, None
    bank = root_feature_bank(train.codes, train.y, gen, cfg.min_leaf(len(train)))
    finder = BankSplitFinder(bank, train.seq_len)
    return finder, finder.bank


class FeatureTreeClassifier(ClassifierMixin, BaseEstimator):
    """Decision tree over fixed-length DNA sequences.

    ``X`` is a sequence of equal-length ``ACGT`` strings and ``y`` holds 0/1
    labels. In ``deft`` mode each node's split feature comes from the
    generator loop driven by ``backend``; ``cart_onehot`` and ``cart_kmer``
    are the classical baselines and never touch the backend.
    """

    def __init__(self, mode="deft", max_depth=3, min_leaf_frac=0.01, kmer_k=2,
                 population_size=10, n_reflections=20, interpretability="standard",
                 ablation="none", max_parse_retries=2, backend=None, task_description=None,
                 regions=(), n_jobs=1, transcript_path=None, random_state=0):
        self.mode = mode
        self.max_depth = max_depth
        self.min_leaf_frac = min_leaf_frac
        self.kmer_k = kmer_k
        self.population_size = population_size
        self.n_reflections = n_reflections
        self.interpretability = interpretability
        self.ablation = ablation
        self.max_parse_retries = max_parse_retries
        self.backend = backend
        self.task_description = task_description
        self.regions = regions
        self.n_jobs = n_jobs
        self.transcript_path = transcript_path
        self.random_state = random_state

    def _configs(self):
        cfg = InductionConfig(
            max_depth=self.max_depth, min_leaf_frac=self.min_leaf_frac, seed=self.random_state,
            mode=self.mode, kmer_k=self.kmer_k, n_jobs=self.n_jobs,
        )
        gen_cfg = GenerationConfig(
            population_size=self.population_size, n_reflections=self.n_reflections,
            interpretability=self.interpretability, ablation=self.ablation,
            max_parse_retries=self.max_parse_retries,
        )
        return cfg, gen_cfg

    def fit(self, X, y, name: str = "train"):
        seqs = check_sequence_input(X)
        labels = check_binary_labels(y, len(seqs))
        train = SequenceDataset(tuple(seqs), tuple(labels.tolist()), len(seqs[0]), name)
        cfg, gen_cfg = self._configs()
        task = TaskContext(self.task_description or DEFAULT_TASK, train.seq_len, len(train),
                           tuple(self.regions or ()))
        self.transcript_ = Transcript(self.transcript_path)
        finder, bank = build_finder(self.mode, train, cfg, gen_cfg, self.backend, task,
                                    self.transcript_)
        tree = grow_tree(train, cfg, finder)
        if self.mode in ("deft", "deft_no_adapt"):
            tree.generation = asdict(gen_cfg)
        if bank is not None:
            tree.bank = bank_to_dicts(bank)
        self.tree_ = tree
        self.classes_ = np.array([0, 1])
        self.seq_len_ = train.seq_len
        return self

    @classmethod
    def from_tree(cls, tree: DecisionTree) -> "FeatureTreeClassifier":
        cfg = tree.config
        est = cls(mode=cfg.get("mode", "deft"), max_depth=cfg.get("max_depth", 3),
                  min_leaf_frac=cfg.get("min_leaf_frac", 0.01))
        est.tree_ = tree
        est.classes_ = np.array([0, 1])
        est.seq_len_ = tree.seq_len
        return est

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "tree_")
        p1 = predict_proba(self.tree_, check_sequence_input(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)

    def apply(self, X) -> np.ndarray:
        """Leaf id for every sequence."""
        check_is_fitted(self, "tree_")
        seqs = check_sequence_input(X)
        check_sequences(seqs, self.seq_len_)
        return apply_codes(self.tree_, encode(seqs))

    def save(self, path) -> None:
        check_is_fitted(self, "tree_")
        save_tree(self.tree_, path)
