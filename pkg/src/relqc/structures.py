"""Peripheral structures on H, the canonical map and the checks behind the detector.

Conventions: an entry (i, g, S) stands for O = <S> <= H cap g^-1 P_i g, so a
generator s satisfies g s g^-1 in P_i and an element o = g^-1 p g of O is sent
by the canonical map to the word g^-1 P_i[p] g.

The searches are written as generators that yield once per unit of work, so the
detector can meter them; :func:`run` drains one to completion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import BudgetExceeded, ContractError
from .metrics import Surd, embedding_C, o_membership_direct
from .relcayley import QuasiTest
from .words import Par

SLICE_END = "slice-end"


def run(steps, max_ticks: int | None = None):
    """Drain a metered search and return its result."""
    ticks = 0
    while True:
        try:
            next(steps)
        except StopIteration as stop:
            return stop.value
        ticks += 1
        if max_ticks is not None and ticks > max_ticks:
            raise BudgetExceeded(f"search needed more than {max_ticks} steps")


# --- candidates ---------------------------------------------------------------------

@dataclass(frozen=True)
class PeripheralEntry:
    index: int  # 0-based peripheral index i
    conjugator: tuple  # X-word g
    gens: tuple  # Y-words generating O

    def __post_init__(self):
        object.__setattr__(self, "conjugator", tuple(self.conjugator))
        object.__setattr__(self, "gens", tuple(tuple(s) for s in self.gens))


@dataclass(frozen=True)
class PeripheralCandidate:
    entries: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @property
    def m(self) -> int:
        return len(self.entries)


def generator_values(instance, subgroup, entry: PeripheralEntry) -> list:
    """Values in P_i of g s g^-1 for the generators s of the entry; ContractError if one is not parabolic."""
    g = entry.conjugator
    inv_g = instance.inverse(g)
    out = []
    for s in entry.gens:
        p = instance.native_parabolic_value(entry.index, g + subgroup.expand(s) + inv_g)
        if p is None:
            raise ContractError(
                f"generator {format_yword(subgroup, s)} of entry P{entry.index + 1} is not in H cap P^g"
            )
        out.append(p)
    return out


def validate_candidate(instance, subgroup, cand: PeripheralCandidate) -> None:
    for e in cand.entries:
        if not 0 <= e.index < instance.n:
            raise ContractError(f"no peripheral subgroup P{e.index + 1}")
        instance.alphabet.check_word(e.conjugator)
        for s in e.gens:
            for y in s:
                if not 0 <= y < subgroup.alphabet_size:
                    raise ContractError(f"Y-letter {y} out of range")
        generator_values(instance, subgroup, e)


def format_yword(subgroup, s) -> str:
    return " ".join(f"y{(y >> 1) + 1}" + ("^-1" if y & 1 else "") for y in s) or "1"


def mu(subgroup, cand: PeripheralCandidate) -> int:
    values = [len(y) for y in subgroup.gens] + [2 * len(e.conjugator) + 1 for e in cand.entries]
    return max(values)


# --- embedding constants -----------------------------------------------------------------

def initial_N(mu_value: int) -> int:
    return 2 * (mu_value + 1) ** 2


@dataclass
class EmbeddingConstants:
    mu: int
    N: int
    L: int = 0
    C: Surd | None = None
    D: int = 0
    lam: Fraction = Fraction(1)  # lambda returned for the embedding, mu times the local-to-global constant
    c: Fraction = Fraction(0)
    epsilon: int = 0
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < initial_N(self.mu):
            raise ContractError("N must be at least 2(mu+1)^2")
        self.C = embedding_C(self.N, self.mu)
        if self.C.sign() <= 0:
            raise ContractError("C must be positive")

    @property
    def certified(self) -> bool:
        return all(self.flags.values())

    def to_json(self) -> dict:
        return {
            "mu": self.mu, "N": self.N, "L": self.L, "C": self.C.to_json(), "D": self.D,
            "lambda": str(self.lam), "c": str(self.c), "epsilon": self.epsilon,
            "certified": dict(sorted(self.flags.items())),
        }


def compute_nu(epsilon: int, mu_value: int) -> int:
    return epsilon + mu_value


def nu_parameters(mu_value: int, lam, c) -> tuple:
    """Quasigeodesic constants of the backtracking-free paths used for nu."""
    lam, c = Fraction(lam), Fraction(c)
    return mu_value * lam, 2 * mu_value + 2 * mu_value * mu_value * lam + mu_value * lam * c


# --- H elements ------------------------------------------------------------------------

class HEnumerator:
    """Elements of H in breadth-first order over Y (letters y1, y1^-1, y2, ...).

    Each element is recorded with its first shortest Y-word.  Shared between
    candidates; callers charge their own ticks for the elements they read.
    """

    def __init__(self, instance, subgroup, limit: int | None = None):
        self.instance = instance
        self.subgroup = subgroup
        self.limit = limit or instance.budgets.max_ball_vertices
        self.steps = [instance.normal_form(subgroup.expand((y,))) for y in range(subgroup.alphabet_size)]
        self.elements = [()]
        self.ywords = [()]
        self.depth = [0]
        self.index = {(): 0}
        self._expanded = 0

    def ensure(self, count: int) -> bool:
        """Make at least ``count`` elements available; False when H is exhausted first."""
        while len(self.elements) < count:
            if self._expanded >= len(self.elements):
                return False
            k = self._expanded
            v, word, d = self.elements[k], self.ywords[k], self.depth[k]
            for y, step in enumerate(self.steps):
                if word and word[-1] == y ^ 1:
                    continue
                u = self.instance.mul(v, step)
                if u not in self.index:
                    self.index[u] = len(self.elements)
                    self.elements.append(u)
                    self.ywords.append(word + (y,))
                    self.depth.append(d + 1)
            self._expanded += 1
            if len(self.elements) > self.limit:
                raise BudgetExceeded("H enumeration exceeded its element budget", partial=d)
        return True

    def within(self, bound: int):
        """Indices of elements with |h|_Y <= bound, in order (lazily)."""
        k = 0
        while self.ensure(k + 1) and self.depth[k] <= bound:
            yield k
            k += 1

    def y_length(self, element, max_depth: int):
        """|element|_Y if it is at most max_depth, else None."""
        while True:
            if element in self.index:
                d = self.depth[self.index[element]]
                return d if d <= max_depth else None
            if not self.ensure(len(self.elements) + 1) or self.depth[-1] > max_depth:
                return None


# --- canonical map ------------------------------------------------------------------------

class OLetter(NamedTuple):
    """Element o of O_j, named by its shortest Y-word, with p = g o g^-1 in P_i."""

    entry: int
    yword: tuple
    value: object


def canonical_map(instance, subgroup, cand: PeripheralCandidate, w) -> tuple:
    """iota: Y-letters (ints) spell their X-words; an OLetter o of entry j becomes g^-1 P[p] g."""
    out = []
    for x in w:
        if isinstance(x, OLetter):
            e = cand.entries[x.entry]
            backend = instance.oracles[e.index].backend
            if backend.is_identity(x.value):
                raise ContractError("O-letters must be non-trivial")
            out.extend(instance.inverse(e.conjugator))
            out.append(Par(e.index, x.value))
            out.extend(e.conjugator)
        else:
            out.extend(subgroup.expand((x,)))
    return tuple(out)


def short_O_letters_steps(instance, subgroup, cand, j: int, D: int, henum: HEnumerator):
    """All non-trivial o in O_j with |o|_Y <= D, one tick per element examined."""
    e = cand.entries[j]
    values = generator_values(instance, subgroup, e)
    backend = instance.oracles[e.index].backend
    out = []
    if D <= 0 or all(backend.is_identity(v) for v in values):
        return out
    g, inv_g = e.conjugator, instance.inverse(e.conjugator)
    for k in henum.within(D):
        yield
        if k == 0:
            continue
        h = henum.elements[k]
        if o_membership_direct(instance, h, g, e.index, values):
            p = instance.native_parabolic_value(e.index, g + h + inv_g)
            out.append(OLetter(j, henum.ywords[k], p))
    return out


def enumerate_short_O_letters(instance, subgroup, cand, j: int, D: int, henum: HEnumerator | None = None) -> list:
    henum = henum or HEnumerator(instance, subgroup)
    return run(short_O_letters_steps(instance, subgroup, cand, j, D, henum))


# --- step 3: parabolic witnesses ------------------------------------------------------------

class Witness(NamedTuple):
    j: int
    k: int
    h: tuple  # Y-word


def parabolic_witness_steps(instance, subgroup, cand, bound: int, henum: HEnumerator):
    """First (j, k, h) with |h|_Y <= bound, g_j h g_k^-1 in P_i and h not in O_j when j = k."""
    pairs = [
        (j, k)
        for j, ej in enumerate(cand.entries)
        for k, ek in enumerate(cand.entries)
        if ej.index == ek.index
    ]
    if not pairs:
        return None
    values = [generator_values(instance, subgroup, e) for e in cand.entries]
    inv_conj = [instance.inverse(e.conjugator) for e in cand.entries]
    for idx in henum.within(bound):
        h = henum.elements[idx]
        for j, k in pairs:
            yield
            ej = cand.entries[j]
            if instance.native_parabolic_value(ej.index, ej.conjugator + h + inv_conj[k]) is None:
                continue
            if j == k and o_membership_direct(instance, h, ej.conjugator, ej.index, values[j]):
                continue
            return Witness(j, k, henum.ywords[idx])
    return None


def find_parabolic_witness(instance, subgroup, cand, bound: int, henum: HEnumerator | None = None):
    henum = henum or HEnumerator(instance, subgroup)
    return run(parabolic_witness_steps(instance, subgroup, cand, bound, henum))


def _reduce_y(w) -> tuple:
    stack = []
    for y in w:
        if stack and stack[-1] == y ^ 1:
            stack.pop()
        else:
            stack.append(y)
    return tuple(stack)


def refine_structure(instance, subgroup, cand: PeripheralCandidate, witness: Witness) -> PeripheralCandidate:
    """Add h to Y_j when j = k; otherwise replace Y_k by Y_j^h u Y_k and drop entry j."""
    j, k, h = witness
    entries = list(cand.entries)
    if not (0 <= j < len(entries) and 0 <= k < len(entries)) or entries[j].index != entries[k].index:
        raise ContractError("witness does not name two entries of the same peripheral")
    ej, ek = entries[j], entries[k]
    if instance.native_parabolic_value(ej.index, ej.conjugator + subgroup.expand(h) + instance.inverse(ek.conjugator)) is None:
        raise ContractError("witness element is not in g_j^-1 P_i g_k")
    if j == k:
        values = generator_values(instance, subgroup, ej)
        if o_membership_direct(instance, subgroup.expand(h), ej.conjugator, ej.index, values):
            raise ContractError("witness element already lies in O_j")
        entries[j] = PeripheralEntry(ej.index, ej.conjugator, ej.gens + (tuple(h),))
        return PeripheralCandidate(tuple(entries))
    moved = tuple(_reduce_y(tuple(y ^ 1 for y in reversed(h)) + s + tuple(h)) for s in ej.gens)
    merged = list(moved)
    for s in ek.gens:
        if s not in merged:
            merged.append(s)
    entries[k] = PeripheralEntry(ek.index, ek.conjugator, tuple(merged))
    del entries[j]
    return PeripheralCandidate(tuple(entries))


# --- step 4: truncated geodesic words -----------------------------------------------------------

class Counterexample(NamedTuple):
    word: tuple  # letters: Y-letters (ints) and OLetters
    image: tuple  # iota(word)
    subword: tuple  # first violating subword of the image


def _suffix_check(instance, image, inv_letters, new_count, test: QuasiTest):
    """Test the subwords of ``image`` ending at each of its last ``new_count`` letters.

    ``inv_letters[k]`` is the inverse of ``image[k]``; the syllable count of the
    inverse of a subword equals its relative length.
    """
    n = len(image)
    for end in range(n - new_count + 1, n + 1):
        red = instance.reducer()
        for start in range(end - 1, -1, -1):
            red.push(inv_letters[start])
            if test.violates(len(red), end - start):
                return image[start:end]
    return None


def truncated_geodesic_steps(instance, subgroup, cand, letters: Sequence, L: int, lam, c):
    """Check iota(w) for every geodesic word of length <= L over the truncated alphabet.

    The alphabet is the Y-letters followed by ``letters`` (short O-letters); a Y-letter
    and an O-letter are different letters even when they are equal in H.  Only maximal
    paths of the geodesic DAG are checked: every geodesic word is a prefix of one and
    every subword of a prefix's image is a subword of the full image.  One tick per
    vertex reached and per letter appended.
    """
    alphabet = list(range(subgroup.alphabet_size)) + list(letters)
    images = [canonical_map(instance, subgroup, cand, (x,)) for x in alphabet]
    steps = [instance.normal_form(im) for im in images]
    dist = {(): 0}
    children: dict = {(): []}
    frontier = [()]
    for r in range(1, L + 1):
        nxt = []
        for v in frontier:
            for a, step in enumerate(steps):
                yield
                u = instance.mul(v, step)
                d = dist.get(u)
                if d is None:
                    dist[u] = r
                    children[u] = []
                    nxt.append(u)
                    children[v].append((a, u))
                elif d == r:
                    children[v].append((a, u))
        if len(dist) > instance.budgets.max_ball_vertices:
            raise BudgetExceeded("truncated H-ball exceeded its budget", partial=r - 1)
        frontier = nxt
        if not frontier:
            break
    # depth-first over DAG paths, checking the image incrementally
    test = QuasiTest(lam, c)
    inv_images = [instance.inverse(im) for im in images]
    stack = [((), (), iter(children[()]), None, ())]
    while stack:
        vertex, image, it, _, inv_letters = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            stack.pop()
            continue
        a, u = nxt
        yield
        new_image = image + images[a]
        new_inv = inv_letters + tuple(reversed(inv_images[a]))
        bad = _suffix_check(instance, new_image, new_inv, len(images[a]), test)
        if bad is not None:
            word = tuple(alphabet[frame[3]] for frame in stack[1:]) + (alphabet[a],)
            return Counterexample(word, new_image, bad)
        stack.append((u, new_image, iter(children[u]), a, new_inv))
    return None


def check_short_geodesics(instance, subgroup, cand, L: int, C, letters: Sequence = ()):
    """None when every truncated-geodesic word of length <= L maps to a (C,C)-quasigeodesic."""
    return run(truncated_geodesic_steps(instance, subgroup, cand, letters, L, C, C))


# --- relative quasiconvexity on a ball --------------------------------------------------------

class QCViolation(NamedTuple):
    endpoint: tuple  # H-element (normal form)
    vertex: tuple  # vertex of a geodesic from 1 to endpoint
    distance: int  # lower bound for d_X(vertex, H)


def verify_quasiconvexity(instance, subgroup, nu: int, radius: int, B: int = 2, h_depth: int | None = None):
    """Brute-force check of the quasiconvexity condition on a ball.

    For each h in H within relative distance ``radius`` of 1 (all pairs at that
    distance, by translation), every vertex on every geodesic from 1 to h in the
    ball graph must lie within d_X-distance nu of H.  H-elements come from a
    Y-search of depth ``h_depth`` (default: the X-radius the test needs).
    Returns None or the first violation.
    """
    from .relcayley import ball as rel_ball

    rb = rel_ball(instance, radius, B)
    henum = HEnumerator(instance, subgroup)
    order = sorted(rb.dist, key=lambda v: (rb.dist[v], instance.format(v)))
    x_len = {v: instance.x_length(v) for v in order}
    need = max(x_len.values(), default=0) + nu
    depth = need if h_depth is None else h_depth
    h_elems = [henum.elements[k] for k in henum.within(depth)]
    h_set = set(h_elems)
    h_by_len: dict = {}
    for h in h_elems:
        h_by_len.setdefault(instance.x_length(h), []).append(h)

    def near_H(v) -> bool:
        if x_len[v] <= nu or v in h_set:
            return True
        for ln in range(x_len[v] - nu, x_len[v] + nu + 1):
            for h in h_by_len.get(ln, ()):
                if instance.x_length(instance.inverse(v) + h) <= nu:
                    return True
        return False

    checked: dict = {}
    for h in order:
        if h not in h_set:
            continue
        # vertices on some geodesic from 1 to h: ancestors in the parent DAG
        seen = {h}
        todo = [h]
        while todo:
            v = todo.pop()
            for prev, _ in rb.parents[v]:
                if prev not in seen:
                    seen.add(prev)
                    todo.append(prev)
        for v in sorted(seen, key=lambda t: (rb.dist[t], instance.format(t))):
            if v not in checked:
                checked[v] = near_H(v)
            if not checked[v]:
                return QCViolation(h, v, nu + 1)
    return None
