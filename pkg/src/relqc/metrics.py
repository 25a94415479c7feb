"""Constants certificate and the distortion calculus.

Everything numeric that the detector needs but cannot derive from first
principles lives in :class:`ConstantsCertificate`.  Values that come from an
empirical estimate carry ``certified=False`` and every output that depends on
them must say so.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

from .errors import BudgetExceeded, ConfigError, ContractError
from .words import Par, free_reduce, reduced_words


def ceil_int(x) -> int:
    return math.ceil(Fraction(x))


class Certified(NamedTuple):
    value: object
    certified: bool
    source: str


class L2G(NamedTuple):
    L: int
    lam: Fraction  # multiplicative constant of the global quasigeodesic
    c: Fraction
    certified: bool
    source: str


EPSILON_MODES = ("affine", "polynomial", "table", "empirical")
L2G_MODES = ("block_graph", "table")


@dataclass(frozen=True)
class ConstantsCertificate:
    delta: int
    dehn_K: int
    epsilon: dict
    local_to_global: dict
    parabolic_distortion: tuple = ()
    provenance: str = ""

    def __post_init__(self):
        if self.delta < 0:
            raise ConfigError("delta must be >= 0")
        if self.dehn_K < 1:
            raise ConfigError("dehn_K must be >= 1")
        mode = self.epsilon.get("mode")
        if mode not in EPSILON_MODES:
            raise ConfigError(f"epsilon mode must be one of {EPSILON_MODES}")
        if mode == "affine":
            for key in ("alpha", "beta"):
                if Fraction(self.epsilon.get(key, -1)) < 0:
                    raise ConfigError(f"affine epsilon needs non-negative {key}")
        elif mode == "polynomial":
            coeffs = self.epsilon.get("coefficients", {})
            if not coeffs or any(k not in ("1", "lambda", "c", "lambda*c") for k in coeffs):
                raise ConfigError("polynomial epsilon takes coefficients for 1, lambda, c, lambda*c")
            if any(Fraction(v) < 0 for v in coeffs.values()):
                raise ConfigError("polynomial epsilon coefficients must be non-negative")
        elif mode == "table":
            entries = [tuple(Fraction(x) for x in e) for e in self.epsilon.get("entries", [])]
            if not entries:
                raise ConfigError("epsilon table is empty")
            for a in entries:
                for b in entries:
                    if a[0] <= b[0] and a[1] <= b[1] and a[2] > b[2]:
                        raise ConfigError("epsilon table is not monotone")
        elif mode == "empirical":
            if int(self.epsilon.get("scan_radius", -1)) < 0:
                raise ConfigError("empirical epsilon needs scan_radius")
        l2g = self.local_to_global.get("mode")
        if l2g not in L2G_MODES:
            raise ConfigError(f"local_to_global mode must be one of {L2G_MODES}")
        if l2g == "table" and not self.local_to_global.get("entries"):
            raise ConfigError("local_to_global table is empty")
        for entry in self.parabolic_distortion:
            if entry is not None and (Fraction(entry[0]) < 0 or entry[1] < 0):
                raise ConfigError("parabolic distortion bounds must be non-negative")


# --- BCP constant ---------------------------------------------------------------

def bcp_epsilon(instance, lam, c) -> Certified:
    """epsilon(lambda, c) for the bounded coset penetration clauses."""
    lam, c = Fraction(lam), Fraction(c)
    if lam < 1 or c < 0:
        raise ContractError("bcp_epsilon needs lambda >= 1 and c >= 0")
    cert = instance.constants
    spec = cert.epsilon
    mode = spec["mode"]
    if mode == "affine":
        a, b = Fraction(spec["alpha"]), Fraction(spec["beta"])
        return Certified(ceil_int(a * lam + b * c + a + b), True, "certified affine")
    if mode == "polynomial":
        co = {k: Fraction(v) for k, v in spec["coefficients"].items()}
        value = co.get("1", 0) + co.get("lambda", 0) * lam + co.get("c", 0) * c + co.get("lambda*c", 0) * lam * c
        return Certified(ceil_int(value), True, "certified polynomial")
    if mode == "table":
        hits = [Fraction(e[2]) for e in spec["entries"] if Fraction(e[0]) >= lam and Fraction(e[1]) >= c]
        if not hits:
            raise BudgetExceeded(f"({lam}, {c}) lies outside the certified epsilon table")
        return Certified(ceil_int(min(hits)), True, "certified table")
    from .relcayley import empirical_epsilon

    value = empirical_epsilon(instance, lam, c, int(spec["scan_radius"]), int(spec.get("component_bound", 1)))
    return Certified(value, False, f"NON-CERTIFIED empirical scan, radius {spec['scan_radius']}")


# --- local to global -----------------------------------------------------------------

def local_to_global(instance, delta: int, N: int) -> L2G:
    """Constants (L, lam, c): every (L,N,N)-local quasigeodesic is a (lam, c)-quasigeodesic.

    ``block_graph``: valid when Gamma(G, X u P) is a block graph whose blocks are
    cliques (free products relative to their factors, free groups).  A subpath
    with endpoints in one block has length <= N(N+1); with L >= 2N(N+1)+2 this
    propagates to all subpaths, giving lam = N(N+1), c = 1.  c is reported as
    max(1, N), a valid weakening.  See docs/constants.md.
    """
    if N < 1:
        raise ContractError("local_to_global needs N >= 1")
    spec = instance.constants.local_to_global
    if spec["mode"] == "block_graph":
        return L2G(2 * (N * N + N) + 2, Fraction(N * N + N), Fraction(max(1, N)), True, "block graph scheme")
    entries = {int(k): v for k, v in spec["entries"].items()}
    if N not in entries:
        raise BudgetExceeded(f"N = {N} outside the certified local-to-global table")
    L, lam, c = entries[N]
    return L2G(int(L), Fraction(lam), Fraction(c), True, "certified table")


# --- group contexts for distortion ------------------------------------------------------

class GContext:
    """Elements of G as normal forms, ball w.r.t. X."""

    def __init__(self, instance):
        self.instance = instance
        self.identity = ()

    def mul(self, a, b):
        return self.instance.mul(a, b)

    def inv(self, a):
        return self.instance.inverse(a)

    def ball(self, n: int) -> dict:
        return self.instance.x_ball(n)

    def element(self, word):
        return self.instance.normal_form(word)


class ParabolicContext:
    """Elements of P_i as backend values, ball w.r.t. X_i."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.backend = oracle.backend
        self.identity = oracle.backend.identity

    def mul(self, a, b):
        return self.backend.mul(a, b)

    def inv(self, a):
        return self.backend.inv(a)

    def ball(self, n: int) -> dict:
        return self.oracle.pb_enumerate(n)

    def element(self, word):
        return self.oracle.value(word)


def word_lengths(ctx, gens: Sequence, targets: Iterable, max_states: int) -> dict:
    """|t|_S for each target, by breadth-first search over <S>."""
    targets = set(targets)
    steps = [g for g in gens] + [ctx.inv(g) for g in gens]
    dist = {ctx.identity: 0}
    found = {t: 0 for t in targets if t == ctx.identity}
    frontier = [ctx.identity]
    r = 0
    while len(found) < len(targets):
        if not frontier:
            missing = len(targets) - len(found)
            raise ContractError(f"{missing} targets are not in the subgroup generated by S")
        r += 1
        nxt = []
        for v in frontier:
            for s in steps:
                u = ctx.mul(v, s)
                if u not in dist:
                    dist[u] = r
                    nxt.append(u)
                    if u in targets:
                        found[u] = r
        if len(dist) > max_states:
            raise BudgetExceeded("subgroup word-length search exceeded its budget", partial=max(found.values(), default=0))
        frontier = nxt
    return found


@dataclass
class DistortionTable:
    """Dist(n) for n = 0..len-1, with an exactness flag per entry."""

    context: str
    entries: list = field(default_factory=list)
    exact: list = field(default_factory=list)

    def __post_init__(self):
        if self.entries and self.entries[0] != 0:
            raise ContractError("a distortion table starts with Dist(0) = 0")
        if any(a > b for a, b in zip(self.entries, self.entries[1:])):
            raise ContractError("a distortion table is monotone")

    def __call__(self, n: int) -> int:
        if n < len(self.entries):
            return self.entries[n]
        raise BudgetExceeded(f"distortion table covers n <= {len(self.entries) - 1}", partial=self.entries[-1])

    def to_json(self):
        return {"context": self.context, "entries": list(self.entries), "exact": list(self.exact)}


def distortion_from_membership(ctx, y_gens: Sequence, member: Callable[[object], bool], n: int, max_states: int = 500_000) -> int:
    """Exact Dist(n): max |h|_Y over members h with |h|_X <= n."""
    if n < 0:
        raise ContractError("n must be non-negative")
    ball = ctx.ball(n)
    members = [g for g in ball if member(g)]
    lengths = word_lengths(ctx, list(y_gens), members, max_states)
    return max(lengths.values(), default=0)


def distortion_table(ctx, y_gens, member, upto: int, label: str = "", max_states: int = 500_000) -> DistortionTable:
    ball = ctx.ball(upto)
    members = [g for g in ball if member(g)]
    lengths = word_lengths(ctx, list(y_gens), members, max_states)
    entries = [0] * (upto + 1)
    for g in members:
        entries[ball[g]] = max(entries[ball[g]], lengths[g])
    for k in range(1, upto + 1):
        entries[k] = max(entries[k], entries[k - 1])
    return DistortionTable(label, entries, [True] * (upto + 1))


def membership_from_distortion(instance, w, y_gens: Sequence[tuple], dist: Callable[[int], int]) -> bool:
    """w in <Y> iff some Y-word of length <= dist(|w|) equals w in G."""
    bound = dist(len(w))
    if instance.has_normal_form:
        target = instance.normal_form(w)
        steps = []
        for y in y_gens:
            steps.append(instance.normal_form(y))
            steps.append(instance.normal_form(instance.inverse(y)))
        seen = {()}
        frontier = [()]
        if target == ():
            return True
        for _ in range(bound):
            nxt = []
            for v in frontier:
                for s in steps:
                    u = instance.mul(v, s)
                    if u == target:
                        return True
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            if len(seen) > instance.budgets.max_ball_vertices:
                raise BudgetExceeded("membership search exceeded its budget")
            frontier = nxt
        return False
    inv_w = instance.inverse(w)
    for length in range(bound + 1):
        for yw in reduced_words(2 * len(y_gens), length):
            word = []
            for y in yw:
                g = y_gens[y >> 1]
                word.extend(instance.inverse(g) if y & 1 else g)
            if instance.is_trivial_in_G(tuple(word) + inv_w):
                return True
    return False


# --- parabolic distortion and membership -------------------------------------------------

def parabolic_affine_bound(instance, i: int) -> Certified:
    bounds = instance.constants.parabolic_distortion
    if i < len(bounds) and bounds[i] is not None:
        slope, intercept = bounds[i]
        return Certified((Fraction(slope), int(intercept)), True, "certified affine bound")
    rel_len = max((len(r) for r in instance.relators), default=1)
    slope = Fraction(instance.constants.dehn_K * rel_len)
    return Certified((slope, 0), False, "NON-CERTIFIED default K*max|r| slope")


def exact_parabolic_distortion(instance, i: int, n: int) -> int:
    """max |p|_{X_i} over p in P_i with |p|_X <= n, by enumerating the X-ball of G."""
    best = 0
    for g, d in instance.x_ball(n).items():
        p = instance.native_parabolic_value(i, g)
        if p is not None:
            best = max(best, instance.parabolic_x_length(i, p))
    return best


def parabolic_distortion(instance, i: int, n: int) -> int:
    """Upper bound for Dist_{(G,X)}^{(P_i,X_i)}(n)."""
    if n <= 0:
        return 0
    (slope, intercept), _, _ = parabolic_affine_bound(instance, i)
    bound = math.floor(slope * n) + intercept
    if instance.has_normal_form and n <= instance.budgets.exact_distortion_limit:
        try:
            bound = min(bound, exact_parabolic_distortion(instance, i, n))
        except BudgetExceeded:
            pass
    return bound


def letter_x_length(instance, w) -> int:
    """Length of a relative word counted in X-letters (parabolic letters by |p|_{X_i})."""
    return sum(instance.parabolic_x_length(x.index, x.payload) if isinstance(x, Par) else 1 for x in w)


def parabolic_membership(instance, i: int, w, route: str = "auto"):
    """The payload p in P_i equal to w, or None when w is not in P_i.

    ``route="distortion"`` decides through the parabolic distortion bound: w lies
    in P_i iff it equals some p with |p|_{X_i} <= Dist(|w|).
    """
    if route == "auto":
        route = "native" if instance.has_normal_form else "distortion"
    if route == "native":
        return instance.native_parabolic_value(i, w)
    bound = parabolic_distortion(instance, i, letter_x_length(instance, w))
    backend = instance.oracles[i].backend
    if instance.has_normal_form:
        target = instance.normal_form(w)
        for p in instance.oracles[i].pb_enumerate(bound):
            if instance.normal_form((Par(i, p),) if not backend.is_identity(p) else ()) == target:
                return p
        return None
    for p in instance.oracles[i].pb_enumerate(bound):
        letter = (Par(i, p),) if not backend.is_identity(p) else ()
        if instance.element_equal(w, letter):
            return p
    return None


# --- peripheral subgroups O <= H cap P_i^g -----------------------------------------------

def conjugated_values(instance, subgroup, g, i: int, S: Sequence[tuple], route: str = "auto") -> list:
    """Values in P_i of g s g^-1 for each Y-word s in S."""
    inv_g = instance.inverse(g)
    out = []
    for s in S:
        p = parabolic_membership(instance, i, tuple(g) + subgroup.expand(s) + inv_g, route)
        if p is None:
            raise ContractError(f"generator {s} does not conjugate into P_{i + 1}")
        out.append(p)
    return out


def parabolic_subgroup_distortion(instance, i: int, s_values: Sequence, n: int) -> int:
    """Upper bound for Dist_{(P_i,X_i)}^{(<S'>,S')}(n); exact for small n."""
    oracle = instance.oracles[i]
    backend = oracle.backend
    if n <= 0 or backend.is_finite(s_values) and not s_values:
        return 0
    bound = None
    linear = backend.distortion_bound(list(s_values))
    if linear is not None:
        bound = math.floor(linear[0] * n) + linear[1]
    if n <= instance.budgets.exact_distortion_limit or bound is None:
        exact = distortion_from_membership(
            ParabolicContext(oracle), list(s_values), lambda p: backend.membership(s_values, p), n,
            instance.budgets.max_ball_vertices,
        )
        bound = exact if bound is None else min(bound, exact)
    return bound


def o1_bound(instance, subgroup, g, i: int, S: Sequence[tuple], n: int) -> int:
    """Upper bound for Dist_{(G,X)}^{(O,Y)}(n), O = <S> <= H cap P_i^g."""
    S = [s for s in S if s]
    if not S:
        return 0
    s_values = conjugated_values(instance, subgroup, g, i, S)
    if instance.oracles[i].backend.is_finite(s_values):
        s_values = [v for v in s_values if not instance.oracles[i].backend.is_identity(v)]
    outer = parabolic_distortion(instance, i, n + 2 * len(g))
    inner = parabolic_subgroup_distortion(instance, i, s_values, outer)
    return max(len(s) for s in S) * inner


def o_distortion_wrt_S(instance, subgroup, g, i, S, n) -> int:
    """Upper bound for Dist_{(G,X)}^{(O,S)}(n): the O1 chain without the |s|_Y factor."""
    S = [s for s in S if s]
    if not S:
        return 0
    s_values = conjugated_values(instance, subgroup, g, i, S)
    outer = parabolic_distortion(instance, i, n + 2 * len(g))
    return parabolic_subgroup_distortion(instance, i, s_values, outer)


def o2_membership(instance, w, g, i: int, S: Sequence[tuple], subgroup) -> bool:
    """Decide w in O = <S> through the distortion of O with respect to S.

    Searches S-words up to the bound, which is the reduction that stays correct
    when Y generates more than O.
    """
    w = tuple(w)
    bound = o_distortion_wrt_S(instance, subgroup, g, i, S, letter_x_length(instance, w))
    gens = [subgroup.expand(s) for s in S if s]
    return membership_from_distortion(instance, w, gens, lambda _n: bound)


def o_membership_direct(instance, w, g, i: int, s_values: Sequence) -> bool:
    """w in O iff g w g^-1 lies in P_i and its value lies in <S'> (assumption 1 oracle)."""
    p = parabolic_membership(instance, i, tuple(g) + tuple(w) + instance.inverse(g))
    if p is None:
        return False
    return instance.oracles[i].backend.membership(list(s_values), p)


# --- exact constants of the form a + b*sqrt(q) -------------------------------------------

@dataclass(frozen=True)
class Surd:
    """The real number a + b*sqrt(q) with rational a, b and q >= 0, compared exactly."""

    a: Fraction
    b: Fraction
    q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        object.__setattr__(self, "q", Fraction(self.q))
        if self.q < 0:
            raise ContractError("surd radicand must be non-negative")

    def sign(self) -> int:
        return sign_of_sum(self.a, self.b, self.q)

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(self.q)

    def __str__(self):
        return f"{self.a} + {self.b}*sqrt({self.q})" if self.b else str(self.a)

    def to_json(self):
        return {"expr": str(self), "approx": round(float(self), 9)}


def sign_of_sum(a: Fraction, b: Fraction, q: Fraction) -> int:
    """Sign of a + b*sqrt(q), exactly."""
    if b == 0 or q == 0:
        return (a > 0) - (a < 0)
    s_b = 1 if b > 0 else -1
    if a == 0:
        return s_b
    s_a = 1 if a > 0 else -1
    if s_a == s_b:
        return s_a
    # opposite signs: compare a^2 with b^2 q
    diff = a * a - b * b * q
    if diff == 0:
        return 0
    return s_a if diff > 0 else s_b


def embedding_C(N: int, mu: int) -> Surd:
    """sqrt(N/2) - mu."""
    return Surd(-mu, 1, Fraction(N, 2))
