"""AST node types of the sequence-feature language.

Every node is an immutable dataclass, so structural equality and hashing come
for free and ``parse(render(e)) == e`` is a plain ``==`` check.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Iterator, Union

BASES = "ACGT"

NAMED_SETS = {
    "S": frozenset("GC"),
    "W": frozenset("AT"),
    "R": frozenset("AG"),
    "Y": frozenset("CT"),
    "N": frozenset("ACGT"),
}
_NAME_OF_SET = {v: k for k, v in NAMED_SETS.items()}


@dataclass(frozen=True)
class NucSet:
    bases: frozenset

    def __post_init__(self):
        object.__setattr__(self, "bases", frozenset(self.bases))
        if not self.bases or not self.bases <= set(BASES):
            raise ValueError(f"invalid nucleotide set {sorted(self.bases)}")

    @classmethod
    def of(cls, spec: str) -> "NucSet":
        """``NucSet.of("S")`` or ``NucSet.of("AG")``."""
        if spec in NAMED_SETS:
            return cls(NAMED_SETS[spec])
        return cls(frozenset(spec))

    def render(self) -> str:
        name = _NAME_OF_SET.get(self.bases)
        if name is not None:
            return name
        return "{" + ",".join(b for b in BASES if b in self.bases) + "}"

    def codes(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(BASES) if b in self.bases)


@dataclass(frozen=True)
class Count:
    nucs: NucSet
    start: int
    end: int


@dataclass(frozen=True)
class Prop:
    nucs: NucSet
    start: int
    end: int


@dataclass(frozen=True)
class PosIn:
    pos: int
    nucs: NucSet


@dataclass(frozen=True)
class MotifCount:
    motif: str
    start: int
    end: int


@dataclass(frozen=True)
class MotifPresent:
    motif: str
    start: int
    end: int


@dataclass(frozen=True)
class Transitions:
    src: NucSet
    dst: NucSet
    start: int
    end: int


@dataclass(frozen=True)
class StackEnergy:
    start: int
    end: int


@dataclass(frozen=True)
class Raw:
    index: int


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Scale:
    factor: Fraction
    expr: "Expr"

    def __post_init__(self):
        object.__setattr__(self, "factor", Fraction(self.factor))


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    expr: "Expr"


Expr = Union[
    Count, Prop, PosIn, MotifCount, MotifPresent, Transitions, StackEnergy,
    Raw, Add, Sub, Scale, And, Or, Not,
]

# surface name -> node class; argument kinds drive the parser and renderer
SIGNATURES: dict[str, tuple[type, tuple[str, ...]]] = {
    "count": (Count, ("set", "int", "int")),
    "prop": (Prop, ("set", "int", "int")),
    "pos_in": (PosIn, ("int", "set")),
    "motif_count": (MotifCount, ("motif", "int", "int")),
    "motif_present": (MotifPresent, ("motif", "int", "int")),
    "transitions": (Transitions, ("set", "set", "int", "int")),
    "stack_energy": (StackEnergy, ("int", "int")),
    "raw": (Raw, ("int",)),
    "add": (Add, ("expr", "expr")),
    "sub": (Sub, ("expr", "expr")),
    "scale": (Scale, ("const", "expr")),
    "and": (And, ("expr", "expr")),
    "or": (Or, ("expr", "expr")),
    "not": (Not, ("expr",)),
}
NAME_OF = {cls: name for name, (cls, _) in SIGNATURES.items()}

INDICATOR_TYPES = (PosIn, MotifPresent, And, Or, Not)
WINDOW_TYPES = (Count, Prop, MotifCount, MotifPresent, Transitions, StackEnergy)
BOOLEAN_TYPES = (And, Or, Not)


def kind(e: Expr) -> str:
    return NAME_OF[type(e)]


def args(e: Expr) -> tuple:
    return tuple(getattr(e, f.name) for f in fields(e))


def children(e: Expr) -> Iterator[Expr]:
    for v in args(e):
        if type(v) in NAME_OF:
            yield v


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def is_indicator(e: Expr) -> bool:
    return isinstance(e, INDICATOR_TYPES)


def depth(e: Expr) -> int:
    return 1 + max((depth(c) for c in children(e)), default=0)


def window_count(e: Expr) -> int:
    return sum(isinstance(n, WINDOW_TYPES) for n in walk(e))


def render_const(c: Fraction) -> str:
    return str(c)


def render(e: Expr) -> str:
    """Canonical text; ``parse(render(e)) == e`` for every AST."""
    name = NAME_OF[type(e)]
    parts = []
    for kind_, value in zip(SIGNATURES[name][1], args(e)):
        if kind_ == "set":
            parts.append(value.render())
        elif kind_ == "int":
            parts.append(str(value))
        elif kind_ == "motif":
            parts.append(f'"{value}"')
        elif kind_ == "const":
            parts.append(render_const(value))
        else:
            parts.append(render(value))
    return f"{name}({','.join(parts)})"
