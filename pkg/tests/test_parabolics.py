from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from oracles import free_subgroup_member_bruteforce, lattice_member_bruteforce
from relqc.errors import ConfigError, MalformedInput
from relqc.parabolics import (
    FiniteBackend,
    FreeAbelianBackend,
    FreeBackend,
    ParabolicOracle,
    lattice_contains,
    lattice_echelon,
    stallings_member,
)
from relqc.words import Alphabet

X = Alphabet(["a1", "a2"])
A1, A2 = X.letter("a1"), X.letter("a2")


def zz():
    return ParabolicOracle(0, FreeAbelianBackend(2, [(1, 0), (0, 1)]), [A1, A2])


def f2():
    return ParabolicOracle(0, FreeBackend(2, [0, 2]), [A1, A2])


def z6():
    table = [[(a + b) % 6 for b in range(6)] for a in range(6)]
    return ParabolicOracle(0, FiniteBackend(table, [1]), [A1])


def test_word_problem_examples():
    assert zz().pb_word_problem(X.parse("a1 a2 a1^-1 a2^-1"))
    assert not zz().pb_word_problem(X.parse("a1"))
    assert not f2().pb_word_problem(X.parse("a1 a2 a1^-1"))


def test_word_problem_unknown_letter():
    with pytest.raises(MalformedInput):
        zz().pb_word_problem((9,))


def test_membership_examples():
    o = zz()
    assert not o.pb_membership([X.parse("a1 a1"), X.parse("a2")], X.parse("a1"))
    assert lattice_member_bruteforce([(2, 0), (0, 1)], (1, 0)) is False
    for oracle in (zz(), f2(), z6()):
        assert oracle.pb_membership([X.parse("a1")], ())
    # b a b^-1 in <a> inside F(a, b)
    assert not f2().pb_membership([X.parse("a1")], X.parse("a2 a1 a2^-1"))
    assert not free_subgroup_member_bruteforce([("a",)], ("b", "a", "b^-1"))


def test_is_finite_examples():
    assert zz().pb_is_finite([])
    one = ParabolicOracle(0, FreeAbelianBackend(1, [(1,)]), [A1])
    assert not one.pb_is_finite([X.parse("a1")])
    assert z6().pb_is_finite([X.parse("a1")])
    assert f2().pb_is_finite([X.parse("a1 a1^-1")])


def test_enumerate_examples():
    one = FreeAbelianBackend(1, [(1,)])
    assert one.enumerate(2) == {(0,): 0, (1,): 1, (-1,): 1, (2,): 2, (-2,): 2}
    for oracle in (zz(), f2(), z6()):
        assert oracle.pb_enumerate(0) == {oracle.backend.identity: 0}
    ball = zz().pb_enumerate(1)
    assert set(ball) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}


def test_enumerate_matches_bfs_for_non_basis_generators():
    b = FreeAbelianBackend(2, [(1, 0), (0, 1), (1, 1)])
    assert b.enumerate(3) == b._bfs_ball(3)
    assert b.length((2, 2)) == 2


@pytest.mark.parametrize("oracle", [zz(), f2(), z6()], ids=["Z2", "F2", "Z6"])
def test_enumerate_monotone(oracle):
    small, big = oracle.pb_enumerate(2), oracle.pb_enumerate(3)
    assert set(small) <= set(big)
    assert all(big[p] == d and d <= 2 for p, d in small.items())
    assert all(oracle.backend.length(p) == d for p, d in big.items())


@pytest.mark.parametrize("oracle", [zz(), f2(), z6()], ids=["Z2", "F2", "Z6"])
def test_membership_closed_under_products(oracle):
    b = oracle.backend
    S = [b.gen_values[0]]
    ball = list(oracle.pb_enumerate(2))
    members = [p for p in ball if b.membership(S, p)]
    for s in S:
        assert b.membership(S, s)
    for u in members:
        for v in members:
            assert b.membership(S, b.mul(u, v))


vec = st.tuples(st.integers(-4, 4), st.integers(-4, 4))


@settings(max_examples=60, deadline=None)
@given(st.lists(vec, min_size=1, max_size=3), vec)
def test_lattice_membership_matches_bruteforce(gens, v):
    rows, _, pivots = lattice_echelon(gens)
    assert lattice_contains(rows, pivots, v) == lattice_member_bruteforce(gens, v, bound=10)


def test_lattice_membership_rank_one():
    for gens in ([(2,)], [(4,), (6,)], [(3,), (5,)]):
        for v in range(-12, 13):
            rows, _, piv = lattice_echelon(gens)
            assert lattice_contains(rows, piv, (v,)) == lattice_member_bruteforce(gens, (v,))


def test_stallings_against_bruteforce():
    names = {0: "a", 1: "a^-1", 2: "b", 3: "b^-1"}
    gens_sets = [[(0,)], [(0, 0), (2,)], [(0, 2, 1)], [(0, 2), (2, 0)]]
    for gens in gens_sets:
        for n in range(5):
            for w in product(range(4), repeat=n):
                expect = free_subgroup_member_bruteforce(
                    [tuple(names[x] for x in g) for g in gens], tuple(names[x] for x in w), max_len=6
                )
                got = stallings_member(gens, w)
                if got and not expect:
                    pytest.fail(f"{w} reported in <{gens}> but no short product found")
                if expect:
                    assert got


def test_distortion_bound_dominates_exact():
    b = FreeAbelianBackend(2, [(1, 0), (0, 1)])
    S = [(2, 0), (0, 1)]
    slope, intercept = b.distortion_bound(S)
    # |(2k, l)|_S = k + l; worst ratio 1 per X-letter is attained on (0, l)
    assert slope >= 1
    for p, d in b.enumerate(6).items():
        if b.membership(S, p):
            assert abs(p[0]) // 2 + abs(p[1]) <= slope * d + intercept


def test_backend_validation():
    with pytest.raises(ConfigError):
        FreeAbelianBackend(2, [(2, 0), (0, 1)])
    with pytest.raises(ConfigError):
        FiniteBackend([[0, 1], [0, 1]], [1])
    with pytest.raises(ConfigError):
        FreeBackend(2, [0, 0])
    with pytest.raises(ConfigError):
        ParabolicOracle(0, FreeAbelianBackend(1, [(1,)]), [A1], relators=[X.parse("a1")])


def test_payload_round_trip():
    assert FreeBackend(2, [0, 2]).parse_payload("1,-2") == (0, 3)
    assert FreeBackend(2, [0, 2]).format_payload((0, 3)) == "1,-2"
    assert FreeAbelianBackend(2, [(1, 0), (0, 1)]).parse_payload("3,-1") == (3, -1)
    with pytest.raises(MalformedInput):
        FreeBackend(2, [0, 2]).parse_payload("1,-1")
    with pytest.raises(MalformedInput):
        z6().backend.parse_payload("9")
