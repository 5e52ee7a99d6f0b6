"""Greedy top-down induction, prediction and (de)serialisation of feature trees."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Protocol

import numpy as np

from .dsl import DSLError, eval_expr, evaluate, parse, render, validate
from .featgen.generator import PERF_MAX_DEPTH
from .featgen.population import Candidate
from .seqdata import SequenceDataset, check_sequences, encode
from .splits import (
    IMPROVEMENT_EPS, ImpurityCounts, NodeContext, SemanticRep, SplitChoice, SplitSpec, gini,
)

logger = logging.getLogger(__name__)

SCHEMA = "seqtree.tree"
SCHEMA_VERSION = 1
MODES = ("deft", "cart_onehot", "cart_kmer", "deft_no_adapt")


class TreeDocumentError(ValueError):
    pass


class SplitFinder(Protocol):
    def find_split(self, ctx: NodeContext, X: np.ndarray, y: np.ndarray,
                   min_child: int) -> Optional[SplitChoice]: ...


@dataclass
class InductionConfig:
    max_depth: int = 3
    min_leaf_frac: float = 0.01
    impurity: str = "gini"
    label_threshold: float = 0.5
    seed: int = 0
    mode: str = "deft"
    kmer_k: int = 2
    n_jobs: int = 1

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not 0 < self.min_leaf_frac < 0.5:
            raise ValueError("min_leaf_frac must be in (0, 0.5)")
        if self.impurity != "gini":
            raise ValueError("only gini impurity is supported")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")

    def min_leaf(self, n_train: int) -> int:
        # round first so that e.g. (1/n)*n does not ceil to 2
        return max(1, math.ceil(round(self.min_leaf_frac * n_train, 9)))


@dataclass
class Node:
    id: int
    depth: int
    n: int
    n1: int
    split: Optional[SplitSpec] = None
    left: Optional[int] = None
    right: Optional[int] = None
    raw_best: Optional[float] = None
    note: str = ""

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def p1(self) -> float:
        return self.n1 / self.n if self.n else 0.0


@dataclass
class DecisionTree:
    nodes: list[Node]
    seq_len: int
    config: dict
    dataset: str = ""
    n_train: int = 0
    min_leaf: int = 1
    generation: Optional[dict] = None
    bank: Optional[list[dict]] = None
    log: list[str] = field(default_factory=list)
    # row -> leaf id recorded during growth; not serialised
    train_leaves: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def internal_nodes(self) -> list[Node]:
        return [nd for nd in self.nodes if not nd.is_leaf]

    def leaves(self) -> list[Node]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def depth(self) -> int:
        return max((nd.depth for nd in self.leaves()), default=0)

    def path_to(self, node_id: int) -> list[SplitSpec]:
        parent = {}
        for nd in self.nodes:
            if not nd.is_leaf:
                parent[nd.left] = (nd.id, "<=")
                parent[nd.right] = (nd.id, ">")
        path = []
        cur = node_id
        while cur in parent:
            pid, op = parent[cur]
            path.append(self.nodes[pid].split.branch(op))
            cur = pid
        return path[::-1]


def grow_tree(train: SequenceDataset, cfg: InductionConfig, finder: SplitFinder) -> DecisionTree:
    """Grow a tree breadth-first; every frontier node asks ``finder`` for a split."""
    if len(train) == 0:
        raise ValueError("training set is empty")
    X = train.codes
    y = train.y
    n = len(train)
    min_leaf = cfg.min_leaf(n)
    nodes: list[Node] = []
    log: list[str] = []
    leaf_of = np.full(n, -1, dtype=np.int64)

    def new_node(depth, idx):
        nd = Node(len(nodes), depth, len(idx), int(y[idx].sum()))
        nodes.append(nd)
        return nd

    frontier = [(new_node(0, np.arange(n)), np.arange(n), ())]
    pool = ThreadPoolExecutor(cfg.n_jobs) if cfg.n_jobs > 1 else None
    try:
        while frontier:
            to_split = []
            for nd, idx, path in frontier:
                if nd.n1 in (0, nd.n):
                    nd.note = "pure"
                elif nd.depth >= cfg.max_depth:
                    nd.note = "max_depth"
                elif nd.n < 2 * min_leaf:
                    nd.note = "min_samples"
                else:
                    to_split.append((nd, idx, path))
                    continue
                leaf_of[idx] = nd.id

            def run(item):
                nd, idx, path = item
                ctx = NodeContext(path, tuple(idx.tolist()), nd.depth)
                return finder.find_split(ctx, X[idx], y[idx], min_leaf)

            choices = list(pool.map(run, to_split)) if pool else [run(it) for it in to_split]

            frontier = []
            for (nd, idx, path), choice in zip(to_split, choices):
                parent_q = gini(ImpurityCounts(nd.n - nd.n1, nd.n1))
                if choice is None:
                    nd.note = "no_feasible_split"
                    log.append(f"node {nd.id}: no candidate admits an eligible threshold; leaf")
                elif not choice.spec.score < parent_q - IMPROVEMENT_EPS:
                    nd.note = "no_improvement"
                    nd.raw_best = choice.raw_best
                else:
                    spec = choice.spec
                    values = evaluate(spec.expr, X[idx])
                    go_left = values <= spec.threshold
                    nd.split = spec
                    nd.raw_best = choice.raw_best
                    left = new_node(nd.depth + 1, idx[go_left])
                    right = new_node(nd.depth + 1, idx[~go_left])
                    nd.left, nd.right = left.id, right.id
                    frontier.append((left, idx[go_left], path + (spec.branch("<="),)))
                    frontier.append((right, idx[~go_left], path + (spec.branch(">"),)))
                    continue
                leaf_of[idx] = nd.id
    finally:
        if pool:
            pool.shutdown()

    return DecisionTree(
        nodes=nodes,
        seq_len=train.seq_len,
        config=asdict(cfg),
        dataset=train.name,
        n_train=n,
        min_leaf=min_leaf,
        log=log,
        train_leaves=leaf_of,
    )


def apply_codes(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Leaf id reached by every row of the integer-coded matrix ``X``."""
    out = np.zeros(X.shape[0], dtype=np.int64)
    rows_at = {0: np.arange(X.shape[0])}
    for nd in tree.nodes:
        idx = rows_at.pop(nd.id, None)
        if idx is None or idx.size == 0:
            continue
        if nd.is_leaf:
            out[idx] = nd.id
            continue
        go_left = evaluate(nd.split.expr, X[idx]) <= nd.split.threshold
        rows_at[nd.left] = idx[go_left]
        rows_at[nd.right] = idx[~go_left]
    return out


def predict_proba(tree: DecisionTree, sequences) -> np.ndarray:
    seqs = list(sequences)
    check_sequences(seqs, tree.seq_len)
    leaves = apply_codes(tree, encode(seqs))
    p1 = np.array([nd.p1 for nd in tree.nodes])
    return p1[leaves]


def predict(tree: DecisionTree, seq: str, label_threshold: float = 0.5) -> tuple[float, int]:
    """Walk one sequence from the root to a leaf: ``(p1, label)``."""
    check_sequences([seq], tree.seq_len)
    nd = tree.root
    while not nd.is_leaf:
        value = eval_expr(nd.split.expr, seq)
        nd = tree.nodes[nd.left if value <= nd.split.threshold else nd.right]
    return nd.p1, int(nd.p1 > label_threshold)


# -- serialisation ---------------------------------------------------------

def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _split_to_dict(spec: SplitSpec, raw_best) -> dict:
    return {
        "expr": render(spec.expr),
        "threshold": float(spec.threshold),
        "score": float(spec.score),
        "origin": spec.origin,
        "volume": float(spec.volume),
        "raw_best": _finite_or_none(raw_best),
        "semantics": asdict(spec.semantics),
    }


def to_document(tree: DecisionTree) -> dict:
    nodes = []
    for nd in tree.nodes:
        d = {"id": nd.id, "depth": nd.depth, "n": nd.n, "n1": nd.n1, "p1": nd.p1}
        if nd.is_leaf:
            d["leaf"] = True
            d["note"] = nd.note
            if nd.raw_best is not None:
                d["raw_best"] = _finite_or_none(nd.raw_best)
        else:
            d["leaf"] = False
            d["split"] = _split_to_dict(nd.split, nd.raw_best)
            d["left"], d["right"] = nd.left, nd.right
        nodes.append(d)
    doc = {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "seq_len": tree.seq_len,
        "dataset": tree.dataset,
        "n_train": tree.n_train,
        "min_leaf": tree.min_leaf,
        "config": tree.config,
        "nodes": nodes,
        "log": list(tree.log),
    }
    if tree.generation is not None:
        doc["generation"] = tree.generation
    if tree.bank is not None:
        doc["bank"] = tree.bank
    return doc


def dumps(tree: DecisionTree) -> str:
    return json.dumps(to_document(tree), indent=2, sort_keys=True, allow_nan=False) + "\n"


def save_tree(tree: DecisionTree, path) -> None:
    Path(path).write_text(dumps(tree), encoding="utf-8")


def _require(d: dict, key: str, types, where: str):
    if key not in d:
        raise TreeDocumentError(f"{where}: missing field {key!r}")
    value = d[key]
    types = types if isinstance(types, tuple) else (types,)
    if not isinstance(value, types) or (isinstance(value, bool) and bool not in types):
        raise TreeDocumentError(f"{where}.{key}: wrong type {type(value).__name__}")
    return value


def from_document(doc: dict) -> DecisionTree:
    """Rebuild a tree; every split expression is re-parsed and re-validated."""
    if not isinstance(doc, dict):
        raise TreeDocumentError("document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise TreeDocumentError(f"schema must be {SCHEMA!r}")
    if doc.get("version") != SCHEMA_VERSION:
        raise TreeDocumentError(f"unsupported version {doc.get('version')!r}")
    seq_len = _require(doc, "seq_len", int, "tree")
    config = _require(doc, "config", dict, "tree")
    max_depth = PERF_MAX_DEPTH
    raw_nodes = _require(doc, "nodes", list, "tree")
    if not raw_nodes:
        raise TreeDocumentError("tree has no nodes")
    nodes = []
    for i, d in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(d, dict):
            raise TreeDocumentError(f"{where}: must be an object")
        if _require(d, "id", int, where) != i:
            raise TreeDocumentError(f"{where}: id must equal position {i}")
        nd = Node(i, _require(d, "depth", int, where), _require(d, "n", int, where),
                  _require(d, "n1", int, where))
        if not 0 <= nd.n1 <= nd.n:
            raise TreeDocumentError(f"{where}: need 0 <= n1 <= n")
        if _require(d, "leaf", bool, where):
            nd.note = d.get("note", "")
            nd.raw_best = d.get("raw_best")
        else:
            s = _require(d, "split", dict, where)
            text = _require(s, "expr", str, where + ".split")
            try:
                expr = validate(parse(text), seq_len, max_depth=max_depth)
            except DSLError as exc:
                raise TreeDocumentError(f"{where}.split.expr: {exc}") from exc
            sem = _require(s, "semantics", dict, where + ".split")
            try:
                semantics = SemanticRep(sem["rationale"], sem["name"], sem["description"])
            except (KeyError, TypeError, ValueError) as exc:
                raise TreeDocumentError(f"{where}.split.semantics: {exc}") from exc
            nd.split = SplitSpec(
                expr, semantics,
                float(_require(s, "threshold", (int, float), where + ".split")),
                float(_require(s, "score", (int, float), where + ".split")),
                origin=s.get("origin", "raw"),
                volume=s.get("volume"),
            )
            rb = s.get("raw_best")
            nd.raw_best = math.inf if rb is None else float(rb)
            nd.left = _require(d, "left", int, where)
            nd.right = _require(d, "right", int, where)
        nodes.append(nd)
    n_nodes = len(nodes)
    for nd in nodes:
        if not nd.is_leaf:
            for child in (nd.left, nd.right):
                if not nd.id < child < n_nodes:
                    raise TreeDocumentError(f"nodes[{nd.id}]: child {child} out of range")
    for nd in nodes:
        if nd.is_leaf and nd.raw_best is not None and not isinstance(nd.raw_best, (int, float)):
            raise TreeDocumentError(f"nodes[{nd.id}].raw_best: must be a number")
    return DecisionTree(
        nodes=nodes,
        seq_len=seq_len,
        config=config,
        dataset=doc.get("dataset", ""),
        n_train=doc.get("n_train", 0),
        min_leaf=doc.get("min_leaf", 1),
        generation=doc.get("generation"),
        bank=doc.get("bank"),
        log=list(doc.get("log", [])),
    )


def loads(text: str) -> DecisionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeDocumentError(f"invalid JSON: {exc}") from exc
    return from_document(doc)


def load_tree(path) -> DecisionTree:
    return loads(Path(path).read_text(encoding="utf-8"))


def bank_to_dicts(bank: list[Candidate]) -> list[dict]:
    return [
        {"expr": c.text, "origin": c.origin, "semantics": asdict(c.semantics)} for c in bank
    ]


def bank_from_dicts(items: list[dict], seq_len: int) -> list[Candidate]:
    out = []
    for i, d in enumerate(items):
        expr = validate(parse(d["expr"]), seq_len, max_depth=PERF_MAX_DEPTH)
        s = d["semantics"]
        out.append(Candidate(expr, SemanticRep(s["rationale"], s["name"], s["description"]),
                             d.get("origin", "bank"), i))
    return out


def format_tree(tree: DecisionTree) -> str:
    """Indented human-readable rendering: name, description, threshold, DSL per node."""
    lines = [f"tree over sequences of length {tree.seq_len} "
             f"({len(tree.internal_nodes())} internal nodes, {len(tree.leaves())} leaves)"]

    def visit(node_id: int, indent: str, edge: str):
        nd = tree.nodes[node_id]
        if nd.is_leaf:
            lines.append(f"{indent}{edge}leaf p1={nd.p1:.3f} (n={nd.n})")
            return
        s = nd.split
        lines.append(f"{indent}{edge}[{s.semantics.name}] {render(s.expr)}  (threshold {s.threshold:.3f})")
        lines.append(f"{indent}    {s.semantics.description}")
        visit(nd.left, indent + "    ", f"<= {s.threshold:.3f}: ")
        visit(nd.right, indent + "    ", f"> {s.threshold:.3f}: ")

    visit(0, "", "")
    return "\n".join(lines)
