"""Decision procedures for the peripheral subgroups P_i.

Three backends are shipped: free abelian, finite (multiplication table) and free.
Each one is a total decision procedure for the word problem, membership in a
finitely generated subgroup, and finiteness of a finitely generated subgroup,
plus exact enumeration of balls with respect to the generators X_i.
Normal forms: integer vectors, element ids, freely reduced tuples.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

from .errors import BudgetExceeded, ConfigError, MalformedInput
from .words import free_reduce

MAX_BFS_ELEMENTS = 2_000_000


class Backend:
    identity: Hashable = None
    gen_values: list

    def mul(self, p, q):
        raise NotImplementedError

    def inv(self, p):
        raise NotImplementedError

    def is_identity(self, p) -> bool:
        return p == self.identity

    def length(self, p) -> int:
        raise NotImplementedError

    def enumerate(self, radius: int) -> dict:
        raise NotImplementedError

    def membership(self, subgroup: Sequence, p) -> bool:
        raise NotImplementedError

    def is_finite(self, subgroup: Sequence) -> bool:
        raise NotImplementedError

    def distortion_bound(self, subgroup: Sequence):
        """(slope, intercept) with Dist_{(P,X_i)}^{(<S>,S)}(n) <= slope*n + intercept, or None."""
        return None

    def check(self, p) -> None:
        pass

    def parse_payload(self, text: str):
        raise NotImplementedError

    def format_payload(self, p) -> str:
        raise NotImplementedError

    def product(self, values: Iterable):
        acc = self.identity
        for v in values:
            acc = self.mul(acc, v)
        return acc

    def _bfs_ball(self, radius: int) -> dict:
        steps = list(self.gen_values) + [self.inv(g) for g in self.gen_values]
        dist = {self.identity: 0}
        frontier = [self.identity]
        for r in range(1, radius + 1):
            nxt = []
            for v in frontier:
                for s in steps:
                    u = self.mul(v, s)
                    if u not in dist:
                        dist[u] = r
                        nxt.append(u)
                        if len(dist) > MAX_BFS_ELEMENTS:
                            raise BudgetExceeded("parabolic ball too large", partial=r - 1)
            frontier = nxt
            if not frontier:
                break
        return dist


# --- free abelian ----------------------------------------------------------------

def lattice_echelon(vectors: Sequence[Sequence[int]]):
    """Integer row echelon form of the lattice spanned by ``vectors``.

    Returns ``(rows, coeffs, pivots)``: ``rows[r] = sum_s coeffs[r][s] * vectors[s]``,
    ``pivots[r]`` is the leading column of ``rows[r]`` and its entry is positive.
    """
    m = len(vectors)
    if m == 0:
        return [], [], []
    k = len(vectors[0])
    work = [(list(v), [1 if t == s else 0 for t in range(m)]) for s, v in enumerate(vectors)]
    rows, coeffs, pivots = [], [], []
    for col in range(k):
        active = [item for item in work if item[0][col] != 0]
        rest = [item for item in work if item[0][col] == 0]
        while len(active) > 1:
            active.sort(key=lambda it: abs(it[0][col]))
            piv_vec, piv_co = active[0]
            a = piv_vec[col]
            nxt = [active[0]]
            for vec, co in active[1:]:
                q = vec[col] // a
                vec = [x - q * y for x, y in zip(vec, piv_vec)]
                co = [x - q * y for x, y in zip(co, piv_co)]
                if vec[col] != 0:
                    nxt.append((vec, co))
                else:
                    rest.append((vec, co))
            active = nxt
        if active:
            vec, co = active[0]
            if vec[col] < 0:
                vec = [-x for x in vec]
                co = [-x for x in co]
            rows.append(vec)
            coeffs.append(co)
            pivots.append(col)
        work = rest
    return rows, coeffs, pivots


def lattice_contains(rows, pivots, v: Sequence[int]) -> bool:
    v = list(v)
    for row, col in zip(rows, pivots):
        if any(v[c] for c in range(col)):
            return False
        q, r = divmod(v[col], row[col])
        if r:
            return False
        v = [x - q * y for x, y in zip(v, row)]
    return not any(v)


def _rational_inverse(mat):
    n = len(mat)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


class FreeAbelianBackend(Backend):
    """P_i = Z^rank; the X_i generators map to integer vectors."""

    kind = "free_abelian"

    def __init__(self, rank: int, gen_vectors: Sequence[Sequence[int]]):
        if rank < 0:
            raise ConfigError("rank must be non-negative")
        self.rank = rank
        self.gen_values = [tuple(int(x) for x in v) for v in gen_vectors]
        for v in self.gen_values:
            if len(v) != rank:
                raise ConfigError(f"generator vector {v} does not have length {rank}")
        self.identity = (0,) * rank
        rows, _, pivots = lattice_echelon(self.gen_values)
        if len(rows) != rank or math.prod(r[p] for r, p in zip(rows, pivots)) != 1:
            raise ConfigError("free abelian generators must generate Z^rank")
        self._basis_inverse = None
        if len(self.gen_values) == rank:
            # a basis: |p|_{X_i} is the l1 norm of the coordinates
            self._basis_inverse = _rational_inverse(self.gen_values) if rank else []
        self._ball_cache: dict = {}

    def mul(self, p, q):
        return tuple(x + y for x, y in zip(p, q))

    def inv(self, p):
        return tuple(-x for x in p)

    def check(self, p):
        if not (isinstance(p, tuple) and len(p) == self.rank and all(isinstance(x, int) for x in p)):
            raise MalformedInput(f"{p!r} is not a vector in Z^{self.rank}")

    def coordinates(self, p):
        inv = self._basis_inverse
        return tuple(int(sum(p[r] * inv[r][c] for r in range(self.rank))) for c in range(self.rank))

    def length(self, p) -> int:
        if self._basis_inverse is not None:
            return sum(abs(x) for x in self.coordinates(p))
        r = 0
        while True:
            ball = self.enumerate(r)
            if p in ball:
                return ball[p]
            r += 1

    def enumerate(self, radius: int) -> dict:
        if radius in self._ball_cache:
            return self._ball_cache[radius]
        if self._basis_inverse is None:
            ball = self._bfs_ball(radius)
        else:
            ball = {}
            for coords in _l1_ball(self.rank, radius):
                v = [0] * self.rank
                for c, g in zip(coords, self.gen_values):
                    if c:
                        v = [x + c * y for x, y in zip(v, g)]
                ball[tuple(v)] = sum(abs(c) for c in coords)
        if len(self._ball_cache) < 64:
            self._ball_cache[radius] = ball
        return ball

    def membership(self, subgroup, p) -> bool:
        rows, _, pivots = lattice_echelon(list(subgroup))
        return lattice_contains(rows, pivots, p)

    def is_finite(self, subgroup) -> bool:
        return all(not any(v) for v in subgroup)

    def distortion_bound(self, subgroup):
        gens = list(subgroup)
        rows, coeffs, pivots = lattice_echelon(gens)
        if not rows:
            return (Fraction(0), 0)
        binv = _rational_inverse([[row[c] for c in pivots] for row in rows])
        r = len(rows)
        # |v|_S <= sum_i |c_i| * |b_i|_S with c = v_P * B_P^{-1}
        per_coord = Fraction(0)
        for i in range(r):
            col_max = max(abs(binv[p][i]) for p in range(r))
            per_coord += col_max * sum(abs(x) for x in coeffs[i])
        l1_per_letter = max(sum(abs(x) for x in g) for g in self.gen_values)
        return (per_coord * l1_per_letter, 0)

    def parse_payload(self, text: str):
        try:
            p = tuple(int(x) for x in text.split(",")) if text.strip() else ()
        except ValueError:
            raise MalformedInput(f"bad free abelian payload {text!r}") from None
        self.check(p)
        return p

    def format_payload(self, p) -> str:
        return ",".join(str(x) for x in p)


def _l1_ball(rank: int, radius: int):
    if rank == 0:
        yield ()
        return
    for first in range(-radius, radius + 1):
        for rest in _l1_ball(rank - 1, radius - abs(first)):
            yield (first,) + rest


# --- finite ----------------------------------------------------------------------

class FiniteBackend(Backend):
    """P_i given by a multiplication table; P_i is the subgroup generated by X_i."""

    kind = "finite"

    def __init__(self, table: Sequence[Sequence[int]], gen_ids: Sequence[int]):
        n = len(table)
        self.table = [list(row) for row in table]
        if any(len(row) != n for row in self.table) or any(not 0 <= x < n for row in self.table for x in row):
            raise ConfigError("multiplication table must be square with entries in range")
        ids = [e for e in range(n) if all(self.table[e][x] == x and self.table[x][e] == x for x in range(n))]
        if len(ids) != 1:
            raise ConfigError("multiplication table has no two-sided identity")
        self.identity = ids[0]
        for row in self.table:
            if sorted(row) != list(range(n)):
                raise ConfigError("multiplication table rows must be permutations")
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        raise ConfigError("multiplication table is not associative")
        self._inv = [next(b for b in range(n) if self.table[a][b] == self.identity) for a in range(n)]
        self.gen_values = [int(g) for g in gen_ids]
        if any(not 0 <= g < n for g in self.gen_values):
            raise ConfigError("finite generator id out of range")
        self._dist = self._bfs_ball(n)

    def mul(self, p, q):
        return self.table[p][q]

    def inv(self, p):
        return self._inv[p]

    def check(self, p):
        if p not in self._dist:
            raise MalformedInput(f"{p!r} is not an element of this finite parabolic")

    def length(self, p) -> int:
        self.check(p)
        return self._dist[p]

    def enumerate(self, radius: int) -> dict:
        return {p: d for p, d in self._dist.items() if d <= radius}

    def _closure(self, subgroup):
        gens = list(subgroup) + [self.inv(s) for s in subgroup]
        dist = {self.identity: 0}
        queue = deque([self.identity])
        while queue:
            v = queue.popleft()
            for s in gens:
                u = self.mul(v, s)
                if u not in dist:
                    dist[u] = dist[v] + 1
                    queue.append(u)
        return dist

    def membership(self, subgroup, p) -> bool:
        return p in self._closure(subgroup)

    def is_finite(self, subgroup) -> bool:
        return True

    def distortion_bound(self, subgroup):
        return (Fraction(0), max(self._closure(subgroup).values()))

    def parse_payload(self, text: str):
        try:
            p = int(text)
        except ValueError:
            raise MalformedInput(f"bad finite payload {text!r}") from None
        self.check(p)
        return p

    def format_payload(self, p) -> str:
        return str(p)


# --- free ------------------------------------------------------------------------

def stallings_member(gens: Sequence[Sequence[int]], w: Sequence[int]) -> bool:
    """Membership of a reduced word in <gens> inside a free group, via folding."""
    edges = []
    count = 1
    for g in gens:
        g = free_reduce(g)
        if not g:
            continue
        v = 0
        for pos, x in enumerate(g):
            u = 0 if pos == len(g) - 1 else count
            if u:
                count += 1
            edges.append((v, x, u))
            v = u
    parent = list(range(count))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    changed = True
    while changed:
        changed = False
        out: dict = {}
        for v, x, u in edges:
            for src, label, dst in ((find(v), x, find(u)), (find(u), x ^ 1, find(v))):
                seen = out.get((src, label))
                if seen is None:
                    out[(src, label)] = dst
                elif seen != dst:
                    parent[find(seen)] = find(dst)
                    changed = True
                    break
            if changed:
                break
    v = find(0)
    for x in free_reduce(w):
        nxt = out.get((v, x))
        if nxt is None:
            return False
        v = nxt
    return v == find(0)


class FreeBackend(Backend):
    """P_i free of finite rank; each X_i generator maps to a distinct basis letter (or its inverse)."""

    kind = "free"

    def __init__(self, rank: int, gen_letters: Sequence[int]):
        self.rank = rank
        self.gen_values = [(int(x),) for x in gen_letters]
        bases = sorted(x >> 1 for (x,) in self.gen_values)
        if bases != list(range(rank)):
            raise ConfigError("free backend generators must map bijectively onto a free basis")
        self.identity = ()

    def mul(self, p, q):
        return free_reduce(p + q)

    def inv(self, p):
        return tuple(x ^ 1 for x in reversed(p))

    def check(self, p):
        if not isinstance(p, tuple) or free_reduce(p) != p or any(not 0 <= x < 2 * self.rank for x in p):
            raise MalformedInput(f"{p!r} is not a reduced word in F_{self.rank}")

    def length(self, p) -> int:
        return len(p)

    def enumerate(self, radius: int) -> dict:
        out = {(): 0}
        frontier = [()]
        for r in range(1, radius + 1):
            nxt = []
            for v in frontier:
                for x in range(2 * self.rank):
                    if v and v[-1] == x ^ 1:
                        continue
                    u = v + (x,)
                    out[u] = r
                    nxt.append(u)
            if len(out) > MAX_BFS_ELEMENTS:
                raise BudgetExceeded("free ball too large", partial=r)
            frontier = nxt
        return out

    def membership(self, subgroup, p) -> bool:
        return stallings_member(list(subgroup), p)

    def is_finite(self, subgroup) -> bool:
        return all(not s for s in subgroup)

    def parse_payload(self, text: str):
        try:
            ints = [int(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise MalformedInput(f"bad free payload {text!r}") from None
        letters = []
        for k in ints:
            if k == 0 or abs(k) > self.rank:
                raise MalformedInput(f"free basis index {k} out of range")
            letters.append(2 * (abs(k) - 1) + (k < 0))
        p = tuple(letters)
        self.check(p)
        return p

    def format_payload(self, p) -> str:
        return ",".join(str(-((x >> 1) + 1) if x & 1 else (x >> 1) + 1) for x in p)


# --- oracle bundle -----------------------------------------------------------------

class ParabolicOracle:
    """Decision procedures for one P_i, with X_i given as generator letters of X."""

    def __init__(self, index: int, backend: Backend, gen_letters: Sequence[int], relators: Sequence[Sequence[int]] = ()):
        if len(gen_letters) != len(backend.gen_values):
            raise ConfigError("one backend value per X_i generator is required")
        self.index = index
        self.backend = backend
        self.gen_letters = list(gen_letters)
        self._letter_value = {}
        for x, v in zip(self.gen_letters, backend.gen_values):
            if x & 1:
                raise ConfigError("X_i generators are given as positive letters")
            self._letter_value[x] = v
            self._letter_value[x ^ 1] = backend.inv(v)
        self.relators = [tuple(r) for r in relators]
        for r in self.relators:
            if not self.pb_word_problem(r):
                raise ConfigError(f"relator {r} of P_{index + 1} is not trivial in its backend")

    def letter_value(self, x: int):
        try:
            return self._letter_value[x]
        except KeyError:
            raise MalformedInput(f"letter {x} is not in X_{self.index + 1}") from None

    def owns(self, x) -> bool:
        return x in self._letter_value

    def value(self, w: Iterable[int]):
        return self.backend.product(self.letter_value(x) for x in w)

    def pb_word_problem(self, w) -> bool:
        return self.backend.is_identity(self.value(w))

    def pb_membership(self, subgroup_words, w) -> bool:
        return self.backend.membership([self.value(s) for s in subgroup_words], self.value(w))

    def pb_is_finite(self, subgroup_words) -> bool:
        return self.backend.is_finite([self.value(s) for s in subgroup_words])

    def pb_enumerate(self, radius: int) -> dict:
        if radius < 0:
            raise ValueError("radius must be non-negative")
        return self.backend.enumerate(radius)
