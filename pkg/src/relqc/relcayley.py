"""Geometry of the relative Cayley graph Gamma(G, X u P).

Vertices are element handles (free-product normal forms).  A relative word is
a path from the identity; its letters are edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .errors import BudgetExceeded, ContractError, UnsupportedInstance
from .metrics import Surd, bcp_epsilon, parabolic_membership, sign_of_sum
from .words import Par


class Component(NamedTuple):
    """Maximal run of P_i letters, occupying positions start..stop-1 of the word."""

    index: int
    start: int
    stop: int
    value: object


def components(instance, w) -> list:
    out = []
    pos = 0
    w = tuple(w)
    while pos < len(w):
        x = w[pos]
        if not isinstance(x, Par):
            pos += 1
            continue
        backend = instance.oracles[x.index].backend
        value = x.payload
        stop = pos + 1
        while stop < len(w) and isinstance(w[stop], Par) and w[stop].index == x.index:
            value = backend.mul(value, w[stop].payload)
            stop += 1
        out.append(Component(x.index, pos, stop, value))
        pos = stop
    return out


def gap_value(instance, w, s: Component, t: Component, route: str = "auto"):
    """Value in P_i of the subword between s and t, or None when it is not in P_i."""
    return parabolic_membership(instance, s.index, tuple(w[s.stop:t.start]), route)


def are_connected(instance, w, s: Component, t: Component, route: str = "auto") -> bool:
    if s.index != t.index:
        return False
    if s.start > t.start:
        s, t = t, s
    if s == t:
        return True
    return gap_value(instance, w, s, t, route) is not None


def has_backtracking(instance, w, route: str = "auto"):
    """First connected pair (s, t) of distinct same-index components, or None."""
    comps = components(instance, w)
    for a, s in enumerate(comps):
        for t in comps[a + 1:]:
            if t.index == s.index and are_connected(instance, w, s, t, route):
                return s, t
    return None


def merge_components(instance, w) -> tuple:
    """Replace each component by one letter holding its value (dropped when trivial)."""
    w = tuple(w)
    out, pos = [], 0
    for comp in components(instance, w):
        out.extend(w[pos:comp.start])
        if not instance.oracles[comp.index].backend.is_identity(comp.value):
            out.append(Par(comp.index, comp.value))
        pos = comp.stop
    out.extend(w[pos:])
    return tuple(out)


def remove_backtracking(instance, w, route: str = "auto") -> tuple:
    """Collapse the first connected pair of components into one edge until none is left."""
    w = merge_components(instance, w)
    while True:
        hit = has_backtracking(instance, w, route)
        if hit is None:
            return w
        s, t = hit
        backend = instance.oracles[s.index].backend
        middle = gap_value(instance, w, s, t, route)
        value = backend.mul(backend.mul(s.value, middle), t.value)
        joined = () if backend.is_identity(value) else (Par(s.index, value),)
        w = merge_components(instance, w[:s.start] + joined + w[t.stop:])


def path_vertices(instance, w) -> list:
    """Element handles of the vertices visited by the path labelled w."""
    red = instance.reducer()
    out = [red.result()]
    for x in w:
        red.push(x)
        out.append(red.result())
    return out


# --- balls -------------------------------------------------------------------------

def edge_letters(instance, B: int) -> list:
    """X-letters and the parabolic letters p with 0 < |p|_{X_i} <= B, in a fixed order."""
    letters = list(instance.alphabet.letters())
    for i, oracle in enumerate(instance.oracles):
        ball = oracle.pb_enumerate(B)
        for p in sorted(ball, key=lambda v: (ball[v], repr(v))):
            if ball[p] > 0:
                letters.append(Par(i, p))
    return letters


@dataclass
class RelBall:
    radius: int
    B: int
    dist: dict = field(default_factory=dict)
    parents: dict = field(default_factory=dict)  # vertex -> [(previous vertex, letter)]
    center: tuple = ()

    def __len__(self):
        return len(self.dist)

    def __contains__(self, v):
        return v in self.dist

    def geodesic_word(self, v) -> tuple:
        """One geodesic word from the center to v (first parent each step)."""
        word = []
        while self.dist[v]:
            prev, letter = self.parents[v][0]
            word.append(letter)
            v = prev
        return tuple(reversed(word))


def ball(instance, radius: int, B: int) -> RelBall:
    """Exact ball of Gamma(G, X u {p : |p|_{X_i} <= B}) around the identity."""
    if not instance.has_normal_form:
        raise UnsupportedInstance("ball enumeration needs element handles")
    budgets = instance.budgets
    if radius > budgets.max_ball_radius or B > budgets.max_component_bound:
        raise BudgetExceeded(f"ball({radius}, {B}) exceeds the configured radius or component bound")
    letters = edge_letters(instance, B)
    rb = RelBall(radius, B, {(): 0}, {(): []})
    frontier = [()]
    for r in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for x in letters:
                u = instance.mul(v, (x,))
                d = rb.dist.get(u)
                if d is None:
                    rb.dist[u] = r
                    rb.parents[u] = [(v, x)]
                    nxt.append(u)
                elif d == r:
                    rb.parents[u].append((v, x))
        if len(rb.dist) > budgets.max_ball_vertices:
            raise BudgetExceeded("relative ball exceeded the vertex budget", partial=r - 1)
        frontier = nxt
    return rb


# --- relative length -------------------------------------------------------------------

def component_bound(instance, w_clean) -> int:
    """max |p|_X over components of a backtracking-free word, plus 2 eps(|w|, |w|)."""
    longest = max((instance.parabolic_x_length(c.index, c.value) for c in components(instance, w_clean)), default=0)
    n = max(1, len(w_clean))
    return longest + 2 * bcp_epsilon(instance, n, n).value


def relative_length(instance, w, method: str = "auto", component_bound_override: int | None = None) -> int:
    """Exact |w|_{X u P}.

    ``native`` counts free-product syllables.  ``o3`` removes backtracking,
    bounds the components of a geodesic and runs a bidirectional search over the
    bounded edge set.
    """
    w = tuple(w)
    instance.check_relword(w)
    if method == "auto":
        method = "native" if instance.has_normal_form and component_bound_override is None else "o3"
    if method == "native":
        return instance.native_relative_length(w)
    if method != "o3":
        raise ContractError(f"unknown relative length method {method!r}")
    if not instance.has_normal_form:
        raise UnsupportedInstance("the bounded search needs element handles")
    clean = remove_backtracking(instance, w)
    if not clean:
        return 0
    B = component_bound_override if component_bound_override is not None else component_bound(instance, clean)
    if B > instance.budgets.max_component_bound:
        raise BudgetExceeded(f"component bound {B} exceeds the budget", partial=1)
    return bidirectional_distance(instance, instance.normal_form(clean), edge_letters(instance, B), len(clean))


def bidirectional_distance(instance, target, letters, upper: int) -> int:
    """Distance from the identity to target using the given symmetric edge labels."""
    if target == ():
        return 0
    fwd, bwd = {(): 0}, {target: 0}
    f_front, b_front = [()], [target]
    f_depth = b_depth = 0
    states = instance.budgets.max_search_states
    while f_depth + b_depth < upper:
        grow_fwd = len(f_front) <= len(b_front)
        seen, other = (fwd, bwd) if grow_fwd else (bwd, fwd)
        front = f_front if grow_fwd else b_front
        depth = (f_depth if grow_fwd else b_depth) + 1
        nxt = []
        best = None
        for v in front:
            for x in letters:
                u = instance.mul(v, (x,))
                if u in seen:
                    continue
                seen[u] = depth
                nxt.append(u)
                if u in other:
                    total = depth + other[u]
                    best = total if best is None else min(best, total)
        if best is not None:
            return best
        if len(fwd) + len(bwd) > states:
            raise BudgetExceeded("relative length search exceeded its budget", partial=f_depth + b_depth + 1)
        if grow_fwd:
            f_front, f_depth = nxt, depth
        else:
            b_front, b_depth = nxt, depth
        if not nxt:
            break
    return upper


# --- quasigeodesic test -------------------------------------------------------------------

class QuasiTest:
    """Decides rel < length/lam - c exactly; lam and c may be rationals or (for lam = c) a Surd.

    A float evaluation settles clear cases; ties and near-ties fall back to exact arithmetic.
    """

    def __init__(self, lam, c):
        if isinstance(lam, Surd) or isinstance(c, Surd):
            if lam != c:
                raise ContractError("surd constants are only supported in the (C, C) form")
            self.surd = lam
            self.lam_f = self.c_f = float(lam)
        else:
            self.surd = None
            self.lam, self.c = Fraction(lam), Fraction(c)
            self.lam_f, self.c_f = float(self.lam), float(self.c)

    def _exact(self, rel, length) -> bool:
        if self.surd is not None:
            a, b, q = self.surd.a, self.surd.b, self.surd.q
            # rel*C + C^2 - length < 0
            return sign_of_sum(rel * a + a * a + b * b * q - length, rel * b + 2 * a * b, q) < 0
        return self.lam * rel + self.lam * self.c - length < 0

    def violates(self, rel: int, length: int) -> bool:
        v = self.lam_f * rel + self.lam_f * self.c_f - length
        if abs(v) > 1e-7 * (length + rel + 1):
            return v < 0
        return self._exact(rel, length)


def violates(rel: int, length: int, lam, c) -> bool:
    """True iff rel < length/lam - c."""
    return QuasiTest(lam, c).violates(rel, length)


def _check_constant(C):
    if isinstance(C, Surd):
        if sign_of_sum(C.a - 1, C.b, C.q) < 0:
            raise ContractError("quasigeodesic constant must be >= 1")
    elif Fraction(C) < 1:
        raise ContractError("quasigeodesic constant must be >= 1")


def is_quasigeodesic(instance, w, C, c=None, method: str = "auto"):
    """Whether every non-trivial subword w' has |w'|_{X u P} >= |w'|/C - C.

    With ``c`` given the test is the (C, c) form.  Returns ``(True, None)`` or
    ``(False, first violating subword)``, subwords ordered by start then length.
    """
    _check_constant(C)
    test = QuasiTest(C, C if c is None else c)
    w = tuple(w)
    n = len(w)
    native = method in ("auto", "native") and instance.has_normal_form
    for start in range(n):
        red = instance.reducer() if native else None
        for stop in range(start + 1, n + 1):
            if native:
                red.push(w[stop - 1])
                rel = len(red)
            else:
                rel = relative_length(instance, w[start:stop], method="o3")
            if test.violates(rel, stop - start):
                return False, w[start:stop]
    return True, None


def quasigeodesic_prefix_ok(instance, w, lam, c) -> bool:
    """Check only the subwords that end at the last letter (incremental use)."""
    n = len(w)
    test = lam if isinstance(lam, QuasiTest) else QuasiTest(lam, c)
    red = instance.reducer()
    for start in range(n - 1, -1, -1):
        # nf of the inverse of w[start:] has as many syllables as nf(w[start:])
        red.extend(instance.inverse((w[start],)))
        if test.violates(len(red), n - start):
            return False
    return True


# --- empirical BCP constant ------------------------------------------------------------------

def empirical_epsilon(instance, lam, c, scan_radius: int, B: int = 1) -> int:
    """Twice the largest deviation seen between pairs of locally minimal
    (lam, c)-quasigeodesic words without backtracking that share endpoints,
    over all words of length <= scan_radius with edges of X-length <= B.
    Never below 1, since the clauses ask for strict bounds."""
    if not instance.has_normal_form:
        raise UnsupportedInstance("the empirical scan needs element handles")
    letters = edge_letters(instance, B)
    by_end: dict = {}
    states = 0

    def extend(prefix):
        nonlocal states
        states += 1
        if states > instance.budgets.max_search_states:
            raise BudgetExceeded("empirical epsilon scan exceeded its budget")
        if prefix:
            by_end.setdefault(instance.normal_form(prefix), []).append(prefix)
        if len(prefix) == scan_radius:
            return
        for x in letters:
            if prefix and isinstance(x, Par) and isinstance(prefix[-1], Par) and prefix[-1].index == x.index:
                continue  # locally minimal
            word = prefix + (x,)
            if not quasigeodesic_prefix_ok(instance, word, lam, c):
                continue
            if has_backtracking(instance, word) is not None:
                continue
            extend(word)

    extend(())
    worst = 0
    for words in by_end.values():
        verts = [path_vertices(instance, p) for p in words]
        for a in range(len(words)):
            for b in range(len(words)):
                if a != b:
                    worst = max(worst, _pair_deviation(instance, words[a], verts[a], words[b], verts[b]))
    return max(1, 2 * worst)


def _dx(instance, u, v) -> int:
    return instance.x_length(instance.inverse(u) + tuple(v))


def _pair_deviation(instance, p, pv, q, qv) -> int:
    worst = 0
    for u in pv:
        worst = max(worst, min(_dx(instance, u, v) for v in qv))
    qcomps = components(instance, q)
    for s in components(instance, p):
        partner = None
        for t in qcomps:
            if t.index != s.index:
                continue
            gap = instance.inverse(pv[s.stop]) + qv[t.stop]
            if instance.native_parabolic_value(s.index, gap) is not None:
                partner = t
                break
        if partner is None:
            worst = max(worst, instance.parabolic_x_length(s.index, s.value))
        else:
            worst = max(worst, _dx(instance, pv[s.start], qv[partner.start]), _dx(instance, pv[s.stop], qv[partner.stop]))
    return worst
