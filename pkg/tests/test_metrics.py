from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from oracles import free_subgroup_member_bruteforce, lattice_member_bruteforce
from relqc.config import build_instance, fixture_config
from relqc.errors import BudgetExceeded, ConfigError, ContractError
from relqc.instance import SubgroupSpec
from relqc.metrics import (
    ConstantsCertificate,
    DistortionTable,
    GContext,
    Surd,
    bcp_epsilon,
    distortion_from_membership,
    distortion_table,
    embedding_C,
    exact_parabolic_distortion,
    local_to_global,
    membership_from_distortion,
    o1_bound,
    o2_membership,
    o_membership_direct,
    parabolic_distortion,
    parabolic_membership,
    sign_of_sum,
)
from relqc.relcayley import ball, is_quasigeodesic


def with_epsilon(name, epsilon):
    config = fixture_config(name)
    config["constants"]["epsilon"] = epsilon
    return build_instance(config)


# --- epsilon ------------------------------------------------------------------------------

def test_bcp_polynomial_fixture(fprod):
    assert bcp_epsilon(fprod, 1, 0) == (3, True, "certified polynomial")
    assert bcp_epsilon(fprod, 72, 8).value == 1 + 144 + 2 * 72 * 8


def test_bcp_affine_and_table():
    inst = with_epsilon("INST-FREE", {"mode": "affine", "alpha": 2, "beta": "1/2"})
    assert bcp_epsilon(inst, 3, 1).value == 9  # 6 + 1/2 + 2 + 1/2
    inst = with_epsilon("INST-FREE", {"mode": "table", "entries": [[2, 2, 5], [10, 10, 40]]})
    assert bcp_epsilon(inst, 1, 0).value == 5
    assert bcp_epsilon(inst, 3, 0).value == 40
    with pytest.raises(BudgetExceeded):
        bcp_epsilon(inst, 11, 0)


def test_bcp_rejects_bad_arguments(fprod):
    with pytest.raises(ContractError):
        bcp_epsilon(fprod, Fraction(1, 2), 0)
    with pytest.raises(ContractError):
        bcp_epsilon(fprod, 1, -1)


def test_bcp_empirical_flagged():
    inst = with_epsilon("INST-FPROD", {"mode": "empirical", "scan_radius": 2})
    value, certified, source = bcp_epsilon(inst, 1, 0)
    assert value >= 1 and not certified and "NON-CERTIFIED" in source


@pytest.mark.parametrize("epsilon", [
    {"mode": "table", "entries": [[1, 1, 9], [2, 2, 3]]},
    {"mode": "polynomial", "coefficients": {"1": -1}},
    {"mode": "polynomial", "coefficients": {"lambda^2": 1}},
    {"mode": "affine", "alpha": 1},
    {"mode": "magic"},
])
def test_invalid_epsilon_rejected(epsilon):
    with pytest.raises(ConfigError):
        ConstantsCertificate(1, 1, epsilon, {"mode": "block_graph"})


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 50), st.integers(0, 50), st.integers(0, 5), st.integers(0, 5))
def test_bcp_monotone(lam, c, dl, dc):
    inst = BCP_INST
    assert bcp_epsilon(inst, lam, c).value <= bcp_epsilon(inst, lam + dl, c + dc).value


BCP_INST = build_instance(fixture_config("INST-FPROD"))


# --- local to global ----------------------------------------------------------------------

def test_local_to_global_block_graph(free):
    L, lam, c, certified, _ = local_to_global(free, 1, 2)
    assert (L, lam, c, certified) == (14, 6, 2, True)
    with pytest.raises(ContractError):
        local_to_global(free, 1, 0)


def test_local_to_global_table():
    config = fixture_config("INST-FREE")
    config["constants"]["local_to_global"] = {"mode": "table", "entries": {"2": [20, 5, 3]}}
    inst = build_instance(config)
    assert local_to_global(inst, 1, 2)[:3] == (20, 5, 3)
    with pytest.raises(BudgetExceeded):
        local_to_global(inst, 1, 3)


def test_local_to_global_holds_on_free_ball(free):
    # every (L,N,N)-local quasigeodesic reduced path in the 8-ball is a (lam,c)-quasigeodesic;
    # check the words in the 8-ball whose subwords of length <= L are (N,N)-quasigeodesic
    N = 1
    L, lam, c, _, _ = local_to_global(free, 1, N)
    letters = free.alphabet.letters()
    count = 0
    for n in range(0, 9):
        for w in product(letters, repeat=n):
            if n > 4 and w[0] != letters[0]:
                continue
            local = all(is_quasigeodesic(free, w[s:s + L], N, N)[0] for s in range(max(1, n - L + 1)))
            if local:
                count += 1
                assert is_quasigeodesic(free, w, lam, c)[0]
    assert count > 0


def tokens(inst, w):
    return tuple(inst.alphabet.format(w).split())


# --- distortion ------------------------------------------------------------------------------

def test_distortion_z_examples(zinst):
    ctx = GContext(zinst)
    a = zinst.parse("a")
    a2 = zinst.parse("a a")
    for n in range(8):
        assert distortion_from_membership(ctx, [a], lambda g: True, n) == n
        even = lambda g: zinst.x_length(g) % 2 == 0
        assert distortion_from_membership(ctx, [a2], even, n) == n // 2


def test_distortion_table_monotone_and_flags(zinst, free):
    ctx = GContext(free)
    ab = free.parse("a b")
    member = lambda g: free_subgroup_member_bruteforce([("a", "b")], tokens(free, g), 6)
    table = distortion_table(ctx, [ab], member, 5)
    assert table.entries == [0, 0, 1, 1, 2, 2] and all(table.exact)
    assert table(3) == 1
    with pytest.raises(BudgetExceeded):
        table(6)
    with pytest.raises(ContractError):
        DistortionTable("x", [1, 2])
    with pytest.raises(ContractError):
        DistortionTable("x", [0, 2, 1])


def test_membership_from_distortion_examples(free, zinst):
    ab = free.parse("a b")
    dist = lambda n: n // 2
    assert membership_from_distortion(free, free.parse("a b a b"), [ab], dist)
    assert not membership_from_distortion(free, free.parse("a b a"), [ab], dist)
    assert membership_from_distortion(free, (), [ab], dist)
    a2 = zinst.parse("a a")
    for k in range(-4, 5):
        w = zinst.parse(" ".join(["a" if k > 0 else "a^-1"] * abs(k)))
        assert membership_from_distortion(zinst, w, [a2], lambda n: n) == (k % 2 == 0)


def test_membership_from_distortion_matches_bruteforce(free):
    gens = [free.parse("a a"), free.parse("b a b^-1")]
    letters = free.alphabet.letters()
    for n in range(5):
        for w in product(letters, repeat=n):
            expected = free_subgroup_member_bruteforce([("a", "a"), ("b", "a", "b^-1")], tokens(free, w), 4)
            # the generators are Nielsen reduced, so |h|_Y <= |h|_X
            assert membership_from_distortion(free, w, gens, lambda m: m) == expected


def test_parabolic_distortion_fprod(fprod):
    # P1 = Z^2 is undistorted with |p|_X equal to the l1 norm
    for n in range(5):
        assert exact_parabolic_distortion(fprod, 0, n) == n
        assert parabolic_distortion(fprod, 0, n) == n


def test_parabolic_membership_routes_agree(fprod):
    letters = fprod.alphabet.letters()
    for n in range(4):
        for w in product(letters, repeat=n):
            assert parabolic_membership(fprod, 0, w, "native") == parabolic_membership(fprod, 0, w, "distortion")


# --- peripheral subgroups ----------------------------------------------------------------------

def fprod_h(fprod):
    return SubgroupSpec((fprod.parse_xword("a1"), fprod.parse_xword("b")))


def test_o1_bound_dominates_true_distortion(fprod):
    sub = fprod_h(fprod)
    S = [(0,)]  # O = <a1>, Y-letter 0
    for n in range(6):
        # a1^n has X-length n and Y-length n inside O
        assert o1_bound(fprod, sub, (), 0, S, n) >= n
    assert o1_bound(fprod, sub, (), 0, [], 5) == 0


def test_o1_bound_conjugated(fprod):
    sub = SubgroupSpec((fprod.parse_xword("b^-1 a1 b"),))
    g = fprod.parse_xword("b")
    for n in range(5):
        assert o1_bound(fprod, sub, g, 0, [(0,)], n) >= max(0, (n - 2))
    with pytest.raises(ContractError):
        o1_bound(fprod, sub, (), 0, [(0,)], 2)


def test_o2_membership_matches_direct(fprod):
    sub = fprod_h(fprod)
    S = [(0, 0)]  # O = <a1^2>
    letters = fprod.alphabet.letters()
    for n in range(5):
        for w in product(letters, repeat=n):
            direct = o_membership_direct(fprod, w, (), 0, [(2, 0)])
            assert o2_membership(fprod, w, (), 0, S, sub) == direct
            expected = lattice_member_bruteforce([(2, 0)], fprod.native_parabolic_value(0, w)) \
                if fprod.native_parabolic_value(0, w) is not None else False
            assert direct == expected


# --- surds ----------------------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.fractions(max_denominator=20).filter(lambda x: abs(x) < 50),
       st.fractions(max_denominator=20).filter(lambda x: abs(x) < 50),
       st.fractions(min_value=0, max_value=40, max_denominator=10))
def test_sign_of_sum_matches_float(a, b, q):
    ref = float(a) + float(b) * float(q) ** 0.5
    if abs(ref) > 1e-6:
        assert sign_of_sum(a, b, q) == (1 if ref > 0 else -1)


def test_surd_exact_values():
    assert embedding_C(8, 1).sign() == 1 and float(embedding_C(8, 1)) == pytest.approx(1.0)
    assert embedding_C(8, 2).sign() == 0
    assert Surd(0, 1, 2).sign() == 1 and Surd(-2, 1, 2).sign() == -1
