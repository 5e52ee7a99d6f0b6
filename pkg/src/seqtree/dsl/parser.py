"""Tokenizer, LL(1) parser and validator for the feature language."""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .ast import (
    BASES, BOOLEAN_TYPES, NAMED_SETS, SIGNATURES, WINDOW_TYPES, Expr, MotifCount,
    MotifPresent, NucSet, PosIn, Raw, depth, is_indicator, walk, window_count,
)

DEFAULT_MAX_DEPTH = 8
DEFAULT_MAX_WINDOWS = 6


class DSLError(ValueError):
    """Base class for parse and validation failures."""


class DSLSyntaxError(DSLError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class UnknownFunctionError(DSLError):
    pass


class ArityError(DSLError):
    pass


class MotifCharacterError(DSLError):
    pass


class SetLiteralError(DSLError):
    pass


class WindowRangeError(DSLError):
    pass


class DSLTypeError(DSLError):
    pass


class DepthError(DSLError):
    pass


class WindowCountError(DSLError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<string>"[^"]*"|'[^']*')
  | (?P<punct>[(){},/])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind if kind != "punct" else m.group(), m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def take(self, kind: str) -> Token:
        t = self.tok
        if t.kind != kind:
            want = "end of input" if kind == "eof" else repr(kind)
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise DSLSyntaxError(f"expected {want}, got {got}", t.pos)
        self.i += 1
        return t

    def expr(self) -> Expr:
        t = self.take("ident")
        if t.text not in SIGNATURES:
            raise UnknownFunctionError(f"unknown function {t.text!r} at position {t.pos}")
        cls, kinds = SIGNATURES[t.text]
        self.take("(")
        values = []
        while self.tok.kind != ")":
            if values:
                self.take(",")
            if len(values) == len(kinds):
                raise ArityError(
                    f"{t.text} takes {len(kinds)} arguments, got more (position {self.tok.pos})"
                )
            values.append(self.arg(kinds[len(values)]))
        if len(values) != len(kinds):
            raise ArityError(f"{t.text} takes {len(kinds)} arguments, got {len(values)}")
        self.take(")")
        return cls(*values)

    def arg(self, kind: str):
        if kind == "expr":
            return self.expr()
        if kind == "int":
            tok = self.take("number")
            if not re.fullmatch(r"\d+", tok.text):
                raise DSLSyntaxError(f"expected a non-negative integer, got {tok.text!r}", tok.pos)
            return int(tok.text)
        if kind == "const":
            tok = self.take("number")
            value = Fraction(tok.text)
            if self.tok.kind == "/":
                self.take("/")
                den = self.take("number")
                if not re.fullmatch(r"\d+", den.text) or int(den.text) == 0:
                    raise DSLSyntaxError("denominator must be a positive integer", den.pos)
                if "." in tok.text:
                    raise DSLSyntaxError("numerator of a fraction must be an integer", tok.pos)
                value = value / int(den.text)
            return value
        if kind == "motif":
            tok = self.take("string")
            motif = tok.text[1:-1]
            if not motif or set(motif) - set(BASES):
                raise MotifCharacterError(
                    f"motif {motif!r} at position {tok.pos} must be a non-empty ACGT string"
                )
            return motif
        if kind == "set":
            return self.nucset()
        raise AssertionError(kind)  # pragma: no cover

    def nucset(self) -> NucSet:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            if t.text not in NAMED_SETS:
                raise SetLiteralError(f"unknown nucleotide class {t.text!r} at position {t.pos}")
            return NucSet(NAMED_SETS[t.text])
        if t.kind != "{":
            raise SetLiteralError(f"expected a set literal at position {t.pos}")
        self.i += 1
        bases: list[str] = []
        while True:
            b = self.tok
            if b.kind != "ident" or b.text not in BASES:
                raise SetLiteralError(f"expected one of A,C,G,T at position {b.pos}")
            if b.text in bases:
                raise SetLiteralError(f"duplicate base {b.text!r} at position {b.pos}")
            bases.append(b.text)
            self.i += 1
            if self.tok.kind == "}":
                self.i += 1
                return NucSet(frozenset(bases))
            if self.tok.kind != ",":
                raise SetLiteralError(f"malformed set literal at position {self.tok.pos}")
            self.i += 1


def parse(text: str) -> Expr:
    """Parse one expression; raises a :class:`DSLError` subclass on failure."""
    p = _Parser(text.strip())
    e = p.expr()
    p.take("eof")
    return e


def validate(
    e: Expr,
    seq_len: int,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_windows: int = DEFAULT_MAX_WINDOWS,
) -> Expr:
    """Check bounds, operand types and size caps against ``seq_len``.

    Returns ``e`` unchanged so calls can be chained.
    """
    d = depth(e)
    if d > max_depth:
        raise DepthError(f"expression depth {d} exceeds {max_depth}")
    w = window_count(e)
    if w > max_windows:
        raise WindowCountError(f"expression uses {w} windows, at most {max_windows} allowed")
    for node in walk(e):
        if isinstance(node, WINDOW_TYPES):
            a, b = node.start, node.end
            if not 0 <= a <= b < seq_len:
                raise WindowRangeError(
                    f"window [{a},{b}] invalid for sequence length {seq_len}"
                )
            if isinstance(node, (MotifCount, MotifPresent)) and len(node.motif) > b - a + 1:
                raise WindowRangeError(
                    f"motif {node.motif!r} longer than window [{a},{b}]"
                )
        elif isinstance(node, PosIn):
            if not 0 <= node.pos < seq_len:
                raise WindowRangeError(f"position {node.pos} outside [0,{seq_len})")
        elif isinstance(node, Raw):
            if not 0 <= node.index < 4 * seq_len:
                raise WindowRangeError(f"raw index {node.index} outside [0,{4 * seq_len})")
        if isinstance(node, BOOLEAN_TYPES):
            for operand in (node.expr,) if hasattr(node, "expr") else (node.left, node.right):
                if not is_indicator(operand):
                    raise DSLTypeError(
                        f"{type(node).__name__.lower()} requires indicator operands"
                    )
    return e


def parse_valid(text: str, seq_len: int, **caps) -> Expr:
    return validate(parse(text), seq_len, **caps)
