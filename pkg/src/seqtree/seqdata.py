"""Fixed-length DNA sequence datasets: loading, synthesis, encoding, splitting."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

ALPHABET = "ACGT"
BASE_INDEX = {b: i for i, b in enumerate(ALPHABET)}
_LUT = np.full(256, 255, dtype=np.uint8)
for _b, _i in BASE_INDEX.items():
    _LUT[ord(_b)] = _i


class DatasetError(ValueError):
    """Base class for dataset validation failures."""


class LengthMismatchError(DatasetError):
    pass


class InvalidCharacterError(DatasetError):
    pass


class InvalidLabelError(DatasetError):
    pass


class DatasetIOError(DatasetError, OSError):
    pass


class BalanceError(DatasetError):
    """Rejection sampling could not reach the requested class balance."""


def check_sequences(sequences: Sequence[str], seq_len: int | None = None) -> int:
    """Validate alphabet and length of ``sequences``; return the common length."""
    if len(sequences) == 0:
        raise DatasetError("dataset must contain at least one sequence")
    if seq_len is None:
        seq_len = len(sequences[0])
    if seq_len < 1:
        raise LengthMismatchError("sequences must have length >= 1")
    for i, s in enumerate(sequences):
        if not isinstance(s, str):
            raise InvalidCharacterError(f"row {i}: expected a string, got {type(s).__name__}")
        if len(s) != seq_len:
            raise LengthMismatchError(f"row {i}: length {len(s)} != {seq_len}")
        bad = set(s) - set(ALPHABET)
        if bad:
            raise InvalidCharacterError(f"row {i}: invalid characters {sorted(bad)}")
    return seq_len


def encode(sequences: Sequence[str]) -> np.ndarray:
    """Integer-code sequences as a (n, L) uint8 array with A,C,G,T -> 0..3."""
    raw = np.frombuffer("".join(sequences).encode("ascii"), dtype=np.uint8)
    codes = _LUT[raw]
    if np.any(codes == 255):
        raise InvalidCharacterError("sequence contains characters outside ACGT")
    n = len(sequences)
    return codes.reshape(n, -1) if n else codes.reshape(0, 0)


@dataclass(frozen=True)
class SequenceDataset:
    sequences: tuple[str, ...]
    labels: tuple[int, ...]
    seq_len: int
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
        if len(self.labels) != len(self.sequences):
            raise DatasetError(
                f"{len(self.sequences)} sequences but {len(self.labels)} labels"
            )
        check_sequences(self.sequences, self.seq_len)
        for i, y in enumerate(self.labels):
            if y not in (0, 1):
                raise InvalidLabelError(f"row {i}: label {y!r} is not 0/1")

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def codes(self) -> np.ndarray:
        return encode(self.sequences)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def subset(self, indices, name: str | None = None) -> "SequenceDataset":
        return SequenceDataset(
            tuple(self.sequences[i] for i in indices),
            tuple(self.labels[i] for i in indices),
            self.seq_len,
            name or self.name,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["raw_sequence", "label"])
            for s, y in zip(self.sequences, self.labels):
                w.writerow([s, y])


@dataclass(frozen=True)
class SubsetRef:
    parent: SequenceDataset
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(set(idx)) != len(idx):
            raise DatasetError("subset indices must be unique")
        n = len(self.parent)
        if any(i < 0 or i >= n for i in idx):
            raise DatasetError("subset index out of range")

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class EncodedMatrix:
    values: np.ndarray
    col_names: tuple[str, ...]

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def load_csv(path, name: str | None = None) -> SequenceDataset:
    """Read a ``raw_sequence,label`` CSV (header required, LF or CRLF)."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    try:
        si, li = header.index("raw_sequence"), header.index("label")
    except ValueError:
        raise DatasetError(f"{path}: header must contain raw_sequence,label") from None
    seqs, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        seq = row[si].strip()
        lab = row[li].strip()
        if lab not in ("0", "1"):
            raise InvalidLabelError(f"{path}:{lineno}: label {lab!r} is not 0/1")
        seqs.append(seq)
        labels.append(int(lab))
    if not seqs:
        raise DatasetError(f"{path}: no data rows")
    try:
        seq_len = check_sequences(seqs)
    except DatasetError as exc:
        raise type(exc)(f"{path}: {exc}") from None
    return SequenceDataset(tuple(seqs), tuple(labels), seq_len, name or path.stem)


def _motif_automaton(motif: str) -> np.ndarray:
    """KMP transition table ``delta[state, base]``; state ``len(motif)`` is absorbing."""
    m = len(motif)
    delta = np.zeros((m + 1, 4), dtype=np.int64)
    for state in range(m + 1):
        for b, ch in enumerate(ALPHABET):
            if state == m:
                delta[state, b] = m
                continue
            text = motif[:state] + ch
            k = min(len(text), m)
            while k and text[len(text) - k:] != motif[:k]:
                k -= 1
            delta[state, b] = k
    return delta


def conditional_motif_sample(rng: np.random.Generator, count: int, seq_len: int, motif: str,
                             label: int) -> list[str]:
    """Draw ``count`` sequences uniformly among those that do (``label=1``) or do not
    contain ``motif``; the same law as rejection sampling restricted to that class."""
    delta = _motif_automaton(motif)
    m = len(motif)
    # ways[p][s]: completions of positions p.. from automaton state s ending in the class
    ways = [[0] * (m + 1) for _ in range(seq_len + 1)]
    for s in range(m + 1):
        ways[seq_len][s] = int((s == m) == bool(label))
    for p in range(seq_len - 1, -1, -1):
        for s in range(m + 1):
            ways[p][s] = sum(ways[p + 1][int(delta[s, b])] for b in range(4))
    if ways[0][0] == 0:
        raise BalanceError(f"no sequence of length {seq_len} has label {label} for {motif!r}")
    # per-step conditional base probabilities (exact integer ratios rounded once)
    probs = np.zeros((seq_len, m + 1, 4))
    for p in range(seq_len):
        for s in range(m + 1):
            if ways[p][s]:
                probs[p, s] = [ways[p + 1][int(delta[s, b])] / ways[p][s] for b in range(4)]
    cum = np.cumsum(probs, axis=2)
    state = np.zeros(count, dtype=np.int64)
    out = np.zeros((count, seq_len), dtype=np.uint8)
    for p in range(seq_len):
        u = rng.random(count)
        c = cum[p, state]
        base = np.minimum((u[:, None] >= c[:, :3]).sum(axis=1), 3)
        # skip bases with zero probability that rounding could select
        bad = probs[p, state, base] == 0
        while bad.any():
            base[bad] = np.argmax(probs[p, state[bad]], axis=1)
            bad = probs[p, state, base] == 0
        out[:, p] = base
        state = delta[state, base]
    return ["".join(ALPHABET[c] for c in row) for row in out]


def synth_motif(
    n: int,
    seq_len: int,
    motif: str = "TATA",
    balance: bool = True,
    seed: int = 0,
    max_attempts: int = 1_000_000,
    exact_fill: bool = True,
) -> SequenceDataset:
    """Uniform random sequences labelled by presence of ``motif``.

    With ``balance`` the sampler rejects draws of the over-represented class
    until the class counts are ``ceil(n/2)`` positives and ``floor(n/2)``
    negatives. ``max_attempts`` bounds the number of rejection draws; if a
    class is still short after that, ``exact_fill`` draws the missing rows
    from the exact conditional law of that class (what further rejection
    would produce), otherwise :class:`BalanceError` is raised.
    """
    if not motif or set(motif) - set(ALPHABET):
        raise DatasetError(f"invalid motif {motif!r}")
    if not 1 <= len(motif) <= seq_len:
        raise DatasetError("motif length must be in [1, seq_len]")
    if n < 2:
        raise DatasetError("n must be >= 2")
    rng = np.random.default_rng(seed)
    want = {1: (n + 1) // 2, 0: n // 2} if balance else None
    got = {0: 0, 1: 0}
    seqs: list[str] = []
    labels: list[int] = []
    attempts = 0
    batch = max(64, n)
    while len(seqs) < n and attempts < max_attempts:
        draws = rng.integers(0, 4, size=(min(batch, max_attempts - attempts), seq_len),
                             dtype=np.uint8)
        for row in draws:
            attempts += 1
            s = "".join(ALPHABET[c] for c in row)
            y = int(motif in s)
            if want is not None and got[y] >= want[y]:
                continue
            got[y] += 1
            seqs.append(s)
            labels.append(y)
            if len(seqs) == n:
                break
    if len(seqs) < n:
        if not exact_fill:
            raise BalanceError(
                f"could not balance motif {motif!r} classes within {max_attempts} draws"
            )
        for y in (1, 0):
            short = want[y] - got[y]
            if short > 0:
                seqs += conditional_motif_sample(rng, short, seq_len, motif, y)
                labels += [y] * short
    return SequenceDataset(tuple(seqs), tuple(labels), seq_len, f"synth_{motif}_{n}x{seq_len}_s{seed}")


def one_hot(ds: SequenceDataset | Sequence[str]) -> EncodedMatrix:
    """Position-major one-hot encoding with base order A,C,G,T (4*L columns)."""
    seqs = ds.sequences if isinstance(ds, SequenceDataset) else tuple(ds)
    codes = encode(seqs)
    n, L = codes.shape
    out = np.zeros((n, L, 4), dtype=np.float64)
    np.put_along_axis(out, codes[:, :, None].astype(np.intp), 1.0, axis=2)
    names = tuple(f"pos{p}:{b}" for p in range(L) for b in ALPHABET)
    return EncodedMatrix(out.reshape(n, 4 * L), names)


def kmer_names(k: int) -> list[str]:
    return ["".join(t) for t in itertools.product(ALPHABET, repeat=k)]


def kmer_counts(ds: SequenceDataset | Sequence[str], k: int) -> EncodedMatrix:
    """Overlapping k-mer occurrence counts, columns in lexicographic order."""
    seqs = ds.sequences if isinstance(ds, SequenceDataset) else tuple(ds)
    codes = encode(seqs)
    n, L = codes.shape
    if not 1 <= k <= L:
        raise DatasetError(f"k={k} outside [1, {L}]")
    idx = np.zeros((n, L - k + 1), dtype=np.int64)
    for off in range(k):
        idx = idx * 4 + codes[:, off : L - k + 1 + off]
    out = np.zeros((n, 4**k), dtype=np.float64)
    rows = np.repeat(np.arange(n), L - k + 1)
    np.add.at(out, (rows, idx.ravel()), 1.0)
    return EncodedMatrix(out, tuple(kmer_names(k)))


def train_test_split(ds: SequenceDataset, test_frac: float = 0.2, seed: int = 0):
    """Seeded random partition; test size is ``round(test_frac * n)``."""
    if not 0 < test_frac < 1:
        raise DatasetError("test_frac must be in (0, 1)")
    n = len(ds)
    n_test = int(round(test_frac * n))
    if n_test < 1 or n_test > n - 1:
        raise DatasetError(f"test_frac={test_frac} leaves an empty side for n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = sorted(perm[:n_test].tolist())
    train_idx = sorted(perm[n_test:].tolist())
    return (
        ds.subset(train_idx, f"{ds.name}_train"),
        ds.subset(test_idx, f"{ds.name}_test"),
    )


class OneHotEncoder(TransformerMixin, BaseEstimator):
    """sklearn transformer wrapping :func:`one_hot` for baseline pipelines."""

    def fit(self, X, y=None):
        self.seq_len_ = check_sequences(list(X))
        return self

    def transform(self, X):
        check_sequences(list(X), self.seq_len_)
        return one_hot(list(X)).values


class KmerCounter(TransformerMixin, BaseEstimator):
    def __init__(self, k: int = 2):
        self.k = k

    def fit(self, X, y=None):
        self.seq_len_ = check_sequences(list(X))
        if not 1 <= self.k <= self.seq_len_:
            raise DatasetError(f"k={self.k} outside [1, {self.seq_len_}]")
        return self

    def transform(self, X):
        check_sequences(list(X), self.seq_len_)
        return kmer_counts(list(X), self.k).values
