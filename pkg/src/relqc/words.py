"""Alphabets, plain words over X and mixed relative words over X and the parabolic letters.

A plain letter is an ``int``: generator ``k`` of an alphabet is ``2k`` and its
formal inverse is ``2k + 1``, so ``x ^ 1`` inverts.  A parabolic letter is a
:class:`Par` holding a peripheral index (0-based) and a backend normal form.
Words are tuples.
"""

from __future__ import annotations

import re
from typing import Callable, Hashable, Iterable, Iterator, NamedTuple, Sequence, Union

from .errors import MalformedInput

INVERSE_SUFFIXES = ("^-1", "⁻¹")
_PAR_TOKEN = re.compile(r"^P(\d+)\[(.*)\]$")


class Par(NamedTuple):
    index: int
    payload: Hashable

    def __repr__(self):
        return f"P{self.index + 1}[{self.payload!r}]"


Letter = Union[int, Par]
Word = tuple


def inverse_letter(x: int) -> int:
    return x ^ 1


def is_parabolic(letter) -> bool:
    return isinstance(letter, Par)


class Alphabet:
    """Symmetric alphabet built from a list of base names."""

    def __init__(self, names: Sequence[str]):
        names = list(names)
        if len(set(names)) != len(names):
            raise MalformedInput(f"duplicate generator names: {names}")
        for name in names:
            if not name or any(ch.isspace() for ch in name) or name.endswith(INVERSE_SUFFIXES):
                raise MalformedInput(f"bad generator name {name!r}")
            if _PAR_TOKEN.match(name) or "," in name:
                raise MalformedInput(f"generator name {name!r} clashes with word syntax")
        self.names = names
        self._index = {}
        for k, name in enumerate(names):
            self._index[name] = 2 * k
            for suffix in INVERSE_SUFFIXES:
                self._index[name + suffix] = 2 * k + 1

    def __len__(self):
        """Number of letters, i.e. twice the number of generators."""
        return 2 * len(self.names)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and other.names == self.names

    def __hash__(self):
        return hash(tuple(self.names))

    def letters(self) -> range:
        return range(len(self))

    def letter(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise MalformedInput(f"unknown letter {token!r}") from None

    def name(self, x: int) -> str:
        self.check_letter(x)
        base = self.names[x >> 1]
        return base + "^-1" if x & 1 else base

    def check_letter(self, x) -> None:
        if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < len(self):
            raise MalformedInput(f"letter {x!r} outside alphabet of size {len(self)}")

    def check_word(self, w: Iterable) -> None:
        for x in w:
            self.check_letter(x)

    def parse(self, text: str) -> tuple:
        return tuple(self.letter(tok) for tok in text.split())

    def format(self, w: Iterable[int]) -> str:
        return " ".join(self.name(x) for x in w)

    def inverse(self, w: Sequence[int]) -> tuple:
        return tuple(x ^ 1 for x in reversed(w))

    def free_reduce(self, w: Iterable[int]) -> tuple:
        return free_reduce(w, self)


def free_reduce(w: Iterable[int], alphabet: Alphabet | None = None) -> tuple:
    """Cancel adjacent inverse pairs until none remain."""
    stack: list[int] = []
    for x in w:
        if alphabet is not None:
            alphabet.check_letter(x)
        elif not isinstance(x, int) or x < 0:
            raise MalformedInput(f"letter {x!r} is not a plain generator letter")
        if stack and stack[-1] == x ^ 1:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def subwords(w: Sequence, max_len: int) -> Iterator[tuple]:
    """Every non-empty contiguous subword of length <= max_len, by start then length."""
    w = tuple(w)
    n = len(w)
    for start in range(n):
        for length in range(1, min(max_len, n - start) + 1):
            yield w[start:start + length]


def reduced_words(size: int, length: int) -> Iterator[tuple]:
    """Freely reduced words of exactly ``length`` over an alphabet with ``size`` letters, lex order."""
    if length == 0:
        yield ()
        return

    def extend(prefix):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for x in range(size):
            if prefix and prefix[-1] == x ^ 1:
                continue
            prefix.append(x)
            yield from extend(prefix)
            prefix.pop()

    yield from extend([])


# --- relative word text format -------------------------------------------------

PayloadParser = Callable[[int, str], Hashable]
PayloadFormatter = Callable[[int, Hashable], str]


def parse_relword(text: str, alphabet: Alphabet, parse_payload: PayloadParser | None = None) -> tuple:
    """Parse space separated letters; parabolic letters are written ``P<i>[<payload>]``."""
    out = []
    for tok in text.split():
        m = _PAR_TOKEN.match(tok)
        if m:
            if parse_payload is None:
                raise MalformedInput(f"parabolic letter {tok!r} not allowed here")
            i = int(m.group(1)) - 1
            out.append(Par(i, parse_payload(i, m.group(2))))
        else:
            out.append(alphabet.letter(tok))
    return tuple(out)


def format_relword(w: Iterable, alphabet: Alphabet, format_payload: PayloadFormatter | None = None) -> str:
    toks = []
    for x in w:
        if isinstance(x, Par):
            payload = format_payload(x.index, x.payload) if format_payload else repr(x.payload)
            toks.append(f"P{x.index + 1}[{payload}]")
        else:
            toks.append(alphabet.name(x))
    return " ".join(toks)
