"""Freely reduced words over r generators.

A word is a sequence of letters (i, e) with generator index i in 1..r and
exponent e in {+1, -1}, stored letter by letter so that prefix iteration is
O(1) per step.  Words are immutable once built.

Text grammar (whitespace or juxtaposition separates terms)::

    word   := term*
    term   := atom ('^' suffix)?
    atom   := sK  |  'e'  |  '[' word ',' word ']'  |  '(' word ')'
    suffix := nonzero integer  |  atom      # power / conjugation

``sK^M`` expands to |M| letters.  ``w^u`` denotes the conjugate u w u^-1.
``[u,v]`` is the commutator u v u^-1 v^-1.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Letter = tuple[int, int]  # (generator index, +1 or -1)


class WordError(ValueError):
    pass


def _reduce(letters: Iterable[Letter], rank: int) -> tuple[Letter, ...]:
    stack: list[Letter] = []
    for i, e in letters:
        if not (1 <= i <= rank):
            raise WordError(f"generator index {i} out of range 1..{rank}")
        if e not in (1, -1):
            raise WordError(f"letter exponent must be +-1, got {e}")
        if stack and stack[-1][0] == i and stack[-1][1] == -e:
            stack.pop()
        else:
            stack.append((i, e))
    return tuple(stack)


@dataclass(frozen=True)
class ReducedWord:
    """A freely reduced word in the free group on ``rank`` generators."""

    rank: int
    letters: tuple[Letter, ...]

    def __post_init__(self):
        for i, e in self.letters:
            if not (1 <= i <= self.rank) or e not in (1, -1):
                raise WordError(f"bad letter ({i},{e}) for rank {self.rank}")
        for (i, e), (j, f) in zip(self.letters, self.letters[1:]):
            if i == j and e == -f:
                raise WordError("word is not freely reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        if self.rank != other.rank:
            raise WordError("rank mismatch")
        return ReducedWord(self.rank, _reduce(self.letters + other.letters, self.rank))

    def inverse(self) -> "ReducedWord":
        return ReducedWord(self.rank, tuple((i, -e) for i, e in reversed(self.letters)))

    def __pow__(self, n: int) -> "ReducedWord":
        base = self if n >= 0 else self.inverse()
        out = empty_word(self.rank)
        for _ in range(abs(n)):
            out = out * base
        return out

    def conjugate_by(self, u: "ReducedWord") -> "ReducedWord":
        """u * self * u^-1."""
        return u * self * u.inverse()

    def __str__(self) -> str:
        if not self.letters:
            return "e"
        parts = []
        for i, e in self.letters:
            parts.append(f"s{i}" if e == 1 else f"s{i}^-1")
        return " ".join(parts)


def empty_word(rank: int) -> ReducedWord:
    return ReducedWord(rank, ())


def generator_word(rank: int, i: int, exponent: int = 1) -> ReducedWord:
    if not (1 <= i <= rank):
        raise WordError(f"generator index {i} out of range 1..{rank}")
    if exponent == 0:
        return empty_word(rank)
    sign = 1 if exponent > 0 else -1
    return ReducedWord(rank, ((i, sign),) * abs(exponent))


def reduce_letters(tokens: Sequence[Letter], rank: int) -> ReducedWord:
    """Free reduction of an arbitrary letter stream.  Idempotent."""
    return ReducedWord(rank, _reduce(tokens, rank))


def commutator(u: ReducedWord, v: ReducedWord) -> ReducedWord:
    if u.rank != v.rank:
        raise WordError("rank mismatch")
    return u * v * u.inverse() * v.inverse()


_TOKEN = re.compile(r"s(\d+)|\^|\[|\]|\(|\)|,|(-?\d+)|e|\s+|.")


def _tokenize(text: str) -> list:
    toks = []
    for m in _TOKEN.finditer(text):
        t = m.group(0)
        if t.isspace():
            continue
        if m.group(1) is not None:
            toks.append(("gen", int(m.group(1))))
        elif m.group(2) is not None:
            toks.append(("int", int(m.group(2))))
        elif t == "e":
            toks.append(("e", None))
        elif t in "^[](),":
            toks.append((t, t))
        else:
            raise WordError(f"unexpected character {t!r}")
    return toks


class _Parser:
    def __init__(self, tokens: list, rank: int):
        self.tokens = tokens
        self.pos = 0
        self.rank = rank

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse_word(self, stop: tuple = ()) -> ReducedWord:
        out = empty_word(self.rank)
        while self.peek() is not None and self.peek() not in stop:
            out = out * self.parse_term()
        return out

    def parse_term(self) -> ReducedWord:
        atom = self.parse_atom()
        if self.peek() == "^":
            self.next()
            if self.peek() == "int":
                n = self.next()[1]
                if n == 0:
                    raise WordError("zero exponent is not allowed")
                return atom**n
            return atom.conjugate_by(self.parse_atom())
        return atom

    def parse_atom(self) -> ReducedWord:
        kind, val = self.next() if self.peek() is not None else (None, None)
        if kind == "gen":
            return generator_word(self.rank, val)
        if kind == "e":
            return empty_word(self.rank)
        if kind == "[":
            u = self.parse_word(stop=(",",))
            self.expect(",")
            v = self.parse_word(stop=("]",))
            self.expect("]")
            return commutator(u, v)
        if kind == "(":
            w = self.parse_word(stop=(")",))
            self.expect(")")
            return w
        raise WordError(f"unexpected token {kind!r} in word")

    def expect(self, kind: str):
        if self.peek() != kind:
            raise WordError(f"expected {kind!r}")
        self.next()


def parse_word(text: str, rank: int) -> ReducedWord:
    """Parse the text grammar above into a freely reduced word."""
    parser = _Parser(_tokenize(text), rank)
    word = parser.parse_word()
    if parser.peek() is not None:
        raise WordError("trailing tokens in word")
    return word


def random_word(rank: int, length: int, rng: random.Random) -> ReducedWord:
    """Uniform random letters, then freely reduced (output may be shorter)."""
    letters = [(rng.randint(1, rank), rng.choice((1, -1))) for _ in range(length)]
    return reduce_letters(letters, rank)
