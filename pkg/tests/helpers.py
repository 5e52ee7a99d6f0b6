"""Independent oracles and generators shared by the test modules.

Nothing here calls the package's split search, tree growth or metric code;
the oracles are deliberately naive (exact fractions, brute force).
"""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from seqtree.dsl import (
    Add, And, Count, MotifCount, MotifPresent, Not, NucSet, Or, PosIn, Prop, Raw, Scale,
    StackEnergy, Sub, Transitions,
)

BASES = "ACGT"
SET_SPECS = ["S", "W", "R", "Y", "N", "A", "C", "G", "T", "AC", "GT", "ACG", "CGT", "AT"]

TATA_FEATURES = [
    {"name": "tata_present", "description": "1 if TATA occurs anywhere in the sequence",
     "rationale": "canonical promoter box", "code": 'motif_present("TATA",0,100)'},
    {"name": "gc_upstream", "description": "fraction of G or C in positions 0 to 49",
     "rationale": "GC content", "code": "prop(S,0,49)"},
    {"name": "broken", "description": "a reply that is not valid code",
     "rationale": "noise", "code": "this is prose, not a feature"},
]


def rand_seq(rng: random.Random, L: int) -> str:
    return "".join(rng.choice(BASES) for _ in range(L))


# -- exact split oracles ---------------------------------------------------

def gini_frac(n0: int, n1: int) -> Fraction:
    n = n0 + n1
    if n == 0:
        return Fraction(0)
    return 1 - Fraction(n0, n) ** 2 - Fraction(n1, n) ** 2


def score_frac(values, labels, tau) -> Fraction:
    left = [y for v, y in zip(values, labels) if v <= tau]
    right = [y for v, y in zip(values, labels) if v > tau]
    n = len(values)
    out = Fraction(0)
    for side in (left, right):
        if side:
            out += Fraction(len(side), n) * gini_frac(len(side) - sum(side), sum(side))
    return out


def brute_best_threshold(values, labels, min_child=1):
    """Exhaustive search over midpoints with exact scores; ties -> smaller tau."""
    vals = [Fraction(v) for v in values]
    distinct = sorted(set(vals))
    best = None
    for a, b in zip(distinct, distinct[1:]):
        tau = (a + b) / 2
        nl = sum(v <= tau for v in vals)
        if nl < min_child or len(vals) - nl < min_child:
            continue
        s = score_frac(vals, labels, tau)
        if best is None or s < best[1]:
            best = (tau, s)
    return best


# -- naive CART over one-hot columns ---------------------------------------

def naive_cart(seqs, labels, max_depth, min_leaf):
    """Greedy CART over the 4L indicator columns (pos-major, ACGT), exact arithmetic.

    Returns a nested tuple: ("leaf", n, n1) or ("split", j, tau, left, right).
    Ties: smaller threshold (always 0.5 here), then column index.
    """
    L = len(seqs[0])

    def grow(rows, depth):
        ys = [labels[i] for i in rows]
        n, n1 = len(ys), sum(ys)
        if n1 in (0, n) or depth >= max_depth or n < 2 * min_leaf:
            return ("leaf", n, n1)
        best = None
        for j in range(4 * L):
            pos, base = divmod(j, 4)
            vals = [1 if seqs[i][pos] == BASES[base] else 0 for i in rows]
            if len(set(vals)) < 2:
                continue
            n_left = vals.count(0)
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            s = score_frac(vals, ys, Fraction(1, 2))
            if best is None or s < best[0]:
                best = (s, j)
        if best is None or not best[0] < gini_frac(n - n1, n1):
            return ("leaf", n, n1)
        j = best[1]
        pos, base = divmod(j, 4)
        left = [i for i in rows if seqs[i][pos] != BASES[base]]
        right = [i for i in rows if seqs[i][pos] == BASES[base]]
        return ("split", j, 0.5, grow(left, depth + 1), grow(right, depth + 1))

    return grow(list(range(len(seqs))), 0)


def tree_as_tuple(tree):
    def conv(i):
        nd = tree.nodes[i]
        if nd.is_leaf:
            return ("leaf", nd.n, nd.n1)
        e = nd.split.expr
        assert isinstance(e, Raw), e
        return ("split", e.index, nd.split.threshold, conv(nd.left), conv(nd.right))
    return conv(0)


def independent_raw_best(X: np.ndarray, y: np.ndarray, min_child: int) -> float:
    """Best Gini split over indicator columns from class counts per (position, base)."""
    n = len(y)
    n1 = int(y.sum())
    best = np.inf
    for b in range(4):
        ind = X == b                                    # (n, L); indicator == 1 goes right
        right_n = ind.sum(axis=0)
        right_1 = (ind & (y[:, None] == 1)).sum(axis=0)
        for rn, r1 in zip(right_n.tolist(), right_1.tolist()):
            ln, l1 = n - rn, n1 - r1
            if rn < max(min_child, 1) or ln < max(min_child, 1):
                continue
            s = (ln / n) * float(gini_frac(ln - l1, l1)) + (rn / n) * float(gini_frac(rn - r1, r1))
            best = min(best, s)
    return best


# -- average precision oracle ----------------------------------------------

def brute_average_precision(scores, labels) -> float:
    """Enumerate ranking prefixes; precision of each prefix ending on a positive."""
    ranked = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    n_pos = sum(labels)
    total = Fraction(0)
    for k in range(1, len(ranked) + 1):
        prefix = ranked[:k]
        if labels[prefix[-1]] == 1:
            total += Fraction(sum(labels[i] for i in prefix), k)
    return float(total / n_pos)


# -- random DSL expressions -------------------------------------------------

def rand_set(rng):
    return NucSet.of(rng.choice(SET_SPECS))


def rand_window(rng, L, min_len=1):
    a = rng.randrange(0, L - min_len + 1)
    b = rng.randrange(a + min_len - 1, L)
    return a, b


def rand_motif(rng, L, max_len=4):
    return "".join(rng.choice(BASES) for _ in range(rng.randint(1, min(max_len, L))))


def rand_indicator(rng, L, depth=3):
    choice = rng.randrange(5) if depth > 1 else rng.randrange(2)
    if choice == 0:
        return PosIn(rng.randrange(L), rand_set(rng))
    if choice == 1:
        m = rand_motif(rng, L)
        a, b = rand_window(rng, L, len(m))
        return MotifPresent(m, a, b)
    if choice == 2:
        return And(rand_indicator(rng, L, depth - 1), rand_indicator(rng, L, depth - 1))
    if choice == 3:
        return Or(rand_indicator(rng, L, depth - 1), rand_indicator(rng, L, depth - 1))
    return Not(rand_indicator(rng, L, depth - 1))


def rand_expr(rng, L, depth=4):
    """Random AST valid for sequences of length ``L`` (depth <= ``depth``, few windows)."""
    options = [0, 1, 2, 3, 4] + ([5, 6] if L >= 2 else []) + ([7, 8, 9, 10] if depth > 1 else [])
    choice = rng.choice(options)
    if choice == 0:
        a, b = rand_window(rng, L)
        return Count(rand_set(rng), a, b)
    if choice == 1:
        a, b = rand_window(rng, L)
        return Prop(rand_set(rng), a, b)
    if choice == 2:
        return Raw(rng.randrange(4 * L))
    if choice == 3:
        m = rand_motif(rng, L)
        a, b = rand_window(rng, L, len(m))
        return MotifCount(m, a, b)
    if choice == 4:
        return rand_indicator(rng, L, min(depth, 2))
    if choice == 5:
        a, b = rand_window(rng, L, 2)
        return Transitions(rand_set(rng), rand_set(rng), a, b)
    if choice == 6:
        a, b = rand_window(rng, L, 2)
        return StackEnergy(a, b)
    sub = depth - 1
    if choice == 7:
        return Add(rand_expr(rng, L, sub), rand_expr(rng, L, sub))
    if choice == 8:
        return Sub(rand_expr(rng, L, sub), rand_expr(rng, L, sub))
    if choice == 9:
        num = rng.choice([1, 2, 3, -1, -5, 7])
        den = rng.choice([1, 2, 3, 49, 10])
        return Scale(Fraction(num, den), rand_expr(rng, L, sub))
    return rand_indicator(rng, L, min(depth, 3))


def random_feature_fixture(rng, L, n_features, valid_frac=0.7):
    """Feature script mixing valid random features with adversarial junk."""
    from seqtree.dsl import render, window_count

    junk = ["", "not code at all", "prop(S,0,%d)" % (L + 50), "raw(-1)", "and(count(A,0,1),raw(0))",
            "pos_in(0,{U})", "motif_present(\"ZZ\",0,1)", "prop({G},5,1)"]
    feats = []
    for i in range(n_features):
        if rng.random() < valid_frac:
            e = rand_expr(rng, L, 3)
            while window_count(e) > 6:
                e = rand_expr(rng, L, 3)
            code = render(e)
        else:
            code = rng.choice(junk)
        feats.append({"name": f"f{i}", "description": f"feature {i}", "rationale": "", "code": code})
    return feats


# -- prompt fixtures ----------------------

def sample_task():
    from seqtree.featgen import TaskContext
    return TaskContext(
        description=("Sequences are 101-nt windows centred on a candidate site and the label "
                     "marks whether the site is active."),
        seq_len=101,
        dataset_size=1644,
        regions=((0, 49, "upstream region"), (50, 50, "site"), (51, 100, "downstream region")),
    )


def sample_path():
    from seqtree.dsl import parse
    from seqtree.splits import SemanticRep, SplitSpec
    sem = SemanticRep("Guanine richness upstream may matter.", "upstream_G_content_20_49",
                      "Fraction of G among positions 20 to 49 (count of G divided by 30).")
    return (SplitSpec(parse("prop({G},20,49)"), sem, 0.25, 0.41, op="<=", origin="generated"),)


def sample_population():
    from seqtree.dsl import parse
    from seqtree.featgen.population import Candidate
    from seqtree.splits import SemanticRep
    a = Candidate(parse("prop(S,10,29)"),
                  SemanticRep("", "upstream_GC_content_10_29",
                              "Fraction of G or C among positions 10 to 29."),
                  "llm_init", 0, score=0.26666666, threshold=0.4)
    b = Candidate(parse("and(pos_in(50,{G}),pos_in(51,{T}))"),
                  SemanticRep("", "pos_50_is_G_and_pos_51_is_T",
                              "1 if position 50 is G and position 51 is T, otherwise 0."),
                  "llm_explore", 1, score=0.195, threshold=0.5)
    return [a, b]
