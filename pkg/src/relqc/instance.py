"""The ambient pair (G, P): relative presentation, word problem, relative words."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .errors import BudgetExceeded, ConfigError, MalformedInput, UnsupportedInstance
from .parabolics import ParabolicOracle
from .words import Alphabet, Par, format_relword, parse_relword

NATIVE_KINDS = ("free_product",)


@dataclass
class Budgets:
    max_ball_radius: int = 8
    max_component_bound: int = 64
    max_ball_vertices: int = 400_000
    max_search_states: int = 200_000
    exact_distortion_limit: int = 10
    default_fuel: int = 2_000_000


@dataclass(frozen=True)
class SubgroupSpec:
    """H = <Y> with Y a non-empty list of freely reduced X-words."""

    gens: tuple

    def __post_init__(self):
        if not self.gens:
            raise ConfigError("a subgroup needs at least one generator")
        for y in self.gens:
            for a, b in zip(y, y[1:]):
                if isinstance(a, int) and isinstance(b, int) and a == b ^ 1:
                    raise ConfigError(f"subgroup generator {y} is not freely reduced")

    @property
    def alphabet_size(self) -> int:
        return 2 * len(self.gens)

    def expand(self, yword: Iterable[int]) -> tuple:
        """The X-word spelled by a word over Y (letter 2k is Y[k], 2k+1 its inverse)."""
        out = []
        for y in yword:
            g = self.gens[y >> 1]
            if y & 1:
                out.extend(x ^ 1 for x in reversed(g))
            else:
                out.extend(g)
        return tuple(out)

    def max_len(self) -> int:
        return max(len(y) for y in self.gens)


class FreeProductReducer:
    """Incremental normal form in (*P_i) * F(free letters).

    ``convert`` controls whether X-letters of some X_i are read as parabolic
    elements (the instance's native normal form) or kept as free letters (the
    free product F(X) * (*P_i) over which relative relators act).
    """

    __slots__ = ("stack", "_inst", "_convert")

    def __init__(self, inst: "GroupInstance", convert: bool = True, start=()):
        self._inst = inst
        self._convert = convert
        self.stack = list(start)

    def push(self, x):
        stack = self.stack
        if not isinstance(x, Par):
            hit = self._inst._letter_par.get(x) if self._convert else None
            if hit is None:
                if stack and stack[-1] == x ^ 1:
                    stack.pop()
                else:
                    stack.append(x)
                return
            x = hit
        backend = self._inst.oracles[x.index].backend
        if stack and isinstance(stack[-1], Par) and stack[-1].index == x.index:
            p = backend.mul(stack.pop().payload, x.payload)
            if not backend.is_identity(p):
                stack.append(Par(x.index, p))
        elif not backend.is_identity(x.payload):
            stack.append(x)

    def extend(self, w):
        for x in w:
            self.push(x)
        return self

    def __len__(self):
        return len(self.stack)

    def result(self) -> tuple:
        return tuple(self.stack)


class GroupInstance:
    def __init__(
        self,
        alphabet: Alphabet,
        oracles: Sequence[ParabolicOracle],
        relators: Sequence[tuple] = (),
        constants=None,
        native: str | None = None,
        budgets: Budgets | None = None,
        name: str = "",
        native_word_problem: Callable[[tuple], bool] | None = None,
    ):
        self.alphabet = alphabet
        self.oracles = list(oracles)
        self.relators = [tuple(r) for r in relators]
        self.constants = constants
        self.native = native
        self.budgets = budgets or Budgets()
        self.name = name
        self._custom_wp = native_word_problem
        if native is not None and native not in NATIVE_KINDS:
            raise ConfigError(f"unknown native word problem {native!r}")
        self._letter_par: dict = {}
        for o in self.oracles:
            for x in o.gen_letters:
                alphabet.check_letter(x)
                for letter in (x, x ^ 1):
                    if letter in self._letter_par:
                        raise ConfigError(f"letter {alphabet.name(letter)} lies in two X_i")
                    self._letter_par[letter] = Par(o.index, o.letter_value(letter))
        for k, o in enumerate(self.oracles):
            if o.index != k:
                raise ConfigError("oracle indices must be 0..n-1 in order")
        for r in self.relators:
            if not r:
                raise ConfigError("relators must be non-empty")
            self.check_relword(r)
        if self.native == "free_product":
            for r in self.relators:
                if self.normal_form(r):
                    raise ConfigError(f"relator {self.format(r)} is not trivial in the free product")

    # -- syntax ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.oracles)

    def parse_payload(self, i: int, text: str):
        if not 0 <= i < self.n:
            raise MalformedInput(f"no peripheral subgroup P{i + 1}")
        return self.oracles[i].backend.parse_payload(text)

    def format_payload(self, i: int, p) -> str:
        return self.oracles[i].backend.format_payload(p)

    def parse(self, text: str) -> tuple:
        return parse_relword(text, self.alphabet, self.parse_payload)

    def parse_xword(self, text: str) -> tuple:
        return self.alphabet.parse(text)

    def format(self, w) -> str:
        return format_relword(w, self.alphabet, self.format_payload)

    def check_relword(self, w) -> None:
        for x in w:
            if isinstance(x, Par):
                if not 0 <= x.index < self.n:
                    raise MalformedInput(f"no peripheral subgroup P{x.index + 1}")
                backend = self.oracles[x.index].backend
                backend.check(x.payload)
                if backend.is_identity(x.payload):
                    raise MalformedInput("parabolic letters must be non-trivial")
            else:
                self.alphabet.check_letter(x)

    def parabolic_of_letter(self, x: int):
        """The parabolic letter an X-letter of some X_i stands for, else None."""
        return self._letter_par.get(x)

    def par(self, i: int, payload) -> Par:
        return Par(i, payload)

    # -- group operations -------------------------------------------------------

    def inverse(self, w) -> tuple:
        out = []
        for x in reversed(w):
            if isinstance(x, Par):
                out.append(Par(x.index, self.oracles[x.index].backend.inv(x.payload)))
            else:
                out.append(x ^ 1)
        return tuple(out)

    @property
    def has_normal_form(self) -> bool:
        return self.native == "free_product"

    def _require_native(self):
        if not self.has_normal_form:
            raise UnsupportedInstance(f"instance {self.name!r} has no native normal form")

    def reducer(self, start=()) -> FreeProductReducer:
        self._require_native()
        return FreeProductReducer(self, True, start)

    def normal_form(self, w) -> tuple:
        """Canonical representative of the element spelled by ``w``; used as element handle."""
        self._require_native()
        return FreeProductReducer(self, True).extend(w).result()

    def mul(self, a, b) -> tuple:
        return FreeProductReducer(self, True, a).extend(b).result()

    def is_trivial_in_G(self, w) -> bool:
        self.check_relword(w)
        if self.has_normal_form:
            return not self.normal_form(w)
        if self._custom_wp is not None:
            return self._custom_wp(tuple(w))
        return self._dehn_search(tuple(w))

    def element_equal(self, w1, w2) -> bool:
        return self.is_trivial_in_G(tuple(w1) + self.inverse(w2))

    def to_relative(self, xword) -> tuple:
        """Replace each maximal run of X_i-letters by one parabolic letter (dropped when trivial)."""
        self.alphabet.check_word(xword)
        out = []
        run_index, run = None, []

        def flush():
            if run:
                backend = self.oracles[run_index].backend
                p = backend.product(v for v in run)
                if not backend.is_identity(p):
                    out.append(Par(run_index, p))
                run.clear()

        for x in xword:
            hit = self._letter_par.get(x)
            if hit is None:
                flush()
                run_index = None
                out.append(x)
            else:
                if hit.index != run_index:
                    flush()
                    run_index = hit.index
                run.append(hit.payload)
        flush()
        return tuple(out)

    def parabolic_x_length(self, i: int, p) -> int:
        """|p|_{X_i}; an upper bound for |p|_X, equal to it in free-product instances."""
        return self.oracles[i].backend.length(p)

    def x_length(self, w) -> int:
        """Exact |g|_X for the element spelled by ``w`` (free-product instances)."""
        total = 0
        for x in self.normal_form(w):
            total += self.parabolic_x_length(x.index, x.payload) if isinstance(x, Par) else 1
        return total

    def native_relative_length(self, w) -> int:
        """|g|_{X u P}: one edge per syllable of the free-product normal form."""
        return len(self.normal_form(w))

    def native_parabolic_value(self, i: int, w):
        """Payload p in P_i equal to ``w`` in G, or None when w is not in P_i."""
        nf = self.normal_form(w)
        if not nf:
            return self.oracles[i].backend.identity
        if len(nf) == 1 and isinstance(nf[0], Par) and nf[0].index == i:
            return nf[0].payload
        return None

    def x_ball(self, radius: int) -> dict:
        """Normal form -> |g|_X for every g with |g|_X <= radius."""
        self._require_native()
        cache = self.__dict__.setdefault("_x_ball_cache", {})
        if radius in cache:
            return cache[radius]
        dist = {(): 0}
        frontier = [()]
        for r in range(1, radius + 1):
            nxt = []
            for v in frontier:
                for x in self.alphabet.letters():
                    u = self.mul(v, (x,))
                    if u not in dist:
                        dist[u] = r
                        nxt.append(u)
            if len(dist) > self.budgets.max_ball_vertices:
                raise BudgetExceeded("X-ball exceeded the vertex budget", partial=r - 1)
            frontier = nxt
        cache[radius] = dist
        return dist

    # -- generic word problem ----------------------------------------------------

    def _reduce_formal(self, w) -> tuple:
        return FreeProductReducer(self, False).extend(w).result()

    def _dehn_search(self, w: tuple) -> bool:
        """Bounded derivation search: w = 1 iff it is a product of <= K|w| relator conjugates."""
        cert = self.constants
        K = getattr(cert, "dehn_K", None) if cert is not None else None
        if not K or not self.relators:
            raise UnsupportedInstance("no native word problem and no certified Dehn constant")
        start = self._reduce_formal(w)
        if not start:
            return True
        pieces = set()
        for r in self.relators:
            for rr in (r, self.inverse(r)):
                for s in range(len(rr)):
                    pieces.add(rr[s:] + rr[:s])
        pieces = sorted(pieces, key=lambda t: (len(t), repr(t)))
        depth_limit = K * len(w)
        seen = {start}
        frontier = [start]
        for _ in range(depth_limit):
            nxt = []
            for word in frontier:
                for pos in range(len(word) + 1):
                    for piece in pieces:
                        cand = self._reduce_formal(word[:pos] + piece + word[pos:])
                        if not cand:
                            return True
                        if cand not in seen:
                            seen.add(cand)
                            nxt.append(cand)
                            if len(seen) > self.budgets.max_search_states:
                                raise BudgetExceeded("Dehn search exceeded its state budget")
            frontier = nxt
        return False
