from hypothesis import given, strategies as st

import pytest

from relqc.errors import MalformedInput
from relqc.words import Alphabet, Par, format_relword, free_reduce, parse_relword, reduced_words, subwords

AB = Alphabet(["a", "b"])


def parse(text):
    return AB.parse(text)


@pytest.mark.parametrize("text, expected", [
    ("a a^-1", ""),
    ("a b b^-1 a", "a a"),
    ("b^-1 a a^-1 b", ""),
    ("a⁻¹ a", ""),
])
def test_free_reduce_examples(text, expected):
    assert free_reduce(parse(text), AB) == parse(expected)


def test_free_reduce_unknown_symbol():
    with pytest.raises(MalformedInput):
        free_reduce((7,), AB)
    with pytest.raises(MalformedInput):
        AB.parse("c")


def test_subwords_examples():
    xy = Alphabet(["x", "y"]).parse("x y")
    assert set(subwords(xy, 2)) == {xy[:1], xy[1:], xy}
    assert list(subwords((), 3)) == []
    abc = Alphabet(["a", "b", "c"]).parse("a b c")
    assert list(subwords(abc, 1)) == [(0,), (2,), (4,)]


def test_subwords_order_is_start_then_length():
    w = (0, 2, 4)
    assert list(subwords(w, 3)) == [(0,), (0, 2), (0, 2, 4), (2,), (2, 4), (4,)]


def test_free_reduce_idempotent_exhaustive():
    # every word of length <= 8 over a, a^-1, b, b^-1
    from itertools import product

    for n in range(9):
        for w in product(range(4), repeat=n):
            r = free_reduce(w, AB)
            assert free_reduce(r, AB) == r
            assert len(r) <= n and (n - len(r)) % 2 == 0


words4 = st.lists(st.integers(0, 3), max_size=12).map(tuple)


@given(words4)
def test_free_reduce_has_no_cancelling_pair(w):
    r = free_reduce(w)
    assert all(x != y ^ 1 for x, y in zip(r, r[1:]))


@given(words4)
def test_subword_count(w):
    assert len(list(subwords(w, len(w)))) == len(w) * (len(w) + 1) // 2


def test_reduced_words_counts():
    assert [len(list(reduced_words(4, n))) for n in range(4)] == [1, 4, 12, 36]
    assert list(reduced_words(2, 2)) == [(0, 0), (1, 1)]


def test_relword_round_trip():
    w = parse_relword("a P1[1,0] b^-1", AB, lambda i, t: tuple(int(x) for x in t.split(",")))
    assert w == (0, Par(0, (1, 0)), 3)
    assert format_relword(w, AB, lambda i, p: ",".join(map(str, p))) == "a P1[1,0] b^-1"


def test_bad_generator_names():
    for names in (["a", "a"], ["P1[x]"], ["a b"], ["x^-1"]):
        with pytest.raises(MalformedInput):
            Alphabet(names)
