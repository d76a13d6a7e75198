import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncpolydom.errors import ValidationError
from ncpolydom.polycoeff import (PolyTuple, b_by_factorizations, b_coefficient, b_table, ball_polynomial,
                                 fibonacci, poly_tuple_from_json, poly_tuple_to_json, polynomial_from_json,
                                 polynomial_to_json, validate_positive_regular)
from ncpolydom.words import (compositions, count_words_up_to, enumerate_gamma, enumerate_lambda, enumerate_words,
                             factorizations, words_up_to)

from helpers import fib_poly, random_poly


def test_enumerate_words_small():
    assert enumerate_words(2, 0) == [()]
    assert enumerate_words(2, 1) == [(1,), (2,)]
    assert enumerate_words(2, 2) == [(1, 1), (1, 2), (2, 1), (2, 2)]


@given(st.integers(1, 3), st.integers(0, 5))
def test_word_counts(n, cap):
    assert len(words_up_to(n, cap)) == count_words_up_to(n, cap)
    assert len(set(words_up_to(n, cap))) == count_words_up_to(n, cap)


def test_factorizations_examples():
    assert factorizations((1,)) == [((1,),)]
    assert factorizations((1, 1)) == [((1, 1),), ((1,), (1,))]
    assert len(factorizations((1, 2, 1))) == 4
    with pytest.raises(ValueError):
        factorizations(())


@given(st.lists(st.integers(1, 3), min_size=1, max_size=8))
def test_factorizations_brute(word):
    word = tuple(word)
    facs = factorizations(word)
    assert len(facs) == 2 ** (len(word) - 1)
    assert all(sum(f, ()) == word for f in facs)
    assert len(set(facs)) == len(facs)


def test_lambda_gamma_counts():
    assert len(enumerate_lambda((2, 1), (1, 1))) == 2
    tuples = enumerate_lambda((2, 2), (2, 0))
    assert len(tuples) == 4 and all(t[1] == () for t in tuples)
    assert len(enumerate_lambda((3, 2), (1, 2))) == 12
    assert enumerate_gamma((1, 1), 0) == [((), ())]
    assert len(enumerate_gamma((1, 1), 1)) == 2
    assert len(enumerate_gamma((2, 2), 2)) == 12


def test_compositions():
    assert compositions(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert compositions(0, 3) == [(0, 0, 0)]
    assert len(compositions(4, 3)) == math.comb(6, 2)


def test_validation():
    validate_positive_regular({(1,): 1, (2,): 1}, 2)
    validate_positive_regular({(1,): 1, (1, 1): 1}, 1)
    with pytest.raises(ValidationError, match="missing linear term g1"):
        validate_positive_regular({(1, 1): 1}, 1)
    with pytest.raises(ValidationError, match="constant term nonzero"):
        validate_positive_regular({(): 1, (1,): 1}, 1)
    with pytest.raises(ValidationError, match=r"nonpositive coefficient at word \[1, 1\]"):
        validate_positive_regular({(1,): 1, (1, 1): -1}, 1)
    with pytest.raises(ValidationError):
        validate_positive_regular({(1,): 1, (3,): 1}, 2)
    with pytest.raises(ValidationError):
        validate_positive_regular({(1,): float("nan")}, 1)


def test_b_examples():
    ball = ball_polynomial(3)
    assert all(b_coefficient(ball, w) == 1 for w in words_up_to(3, 4))
    q = fib_poly()
    assert [b_coefficient(q, (1,) * p) for p in range(5)] == [1, 1, 2, 3, 5]
    two = validate_positive_regular({(1,): 2}, 1)
    for p in range(7):
        assert b_coefficient(two, (1,) * p) == 2**p == b_by_factorizations(two, (1,) * p)


def test_b_deep_word_no_recursion_limit():
    assert b_coefficient(fib_poly(), (1,) * 3000) > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3))
def test_b_recursion_matches_factorizations(seed, n, deg):
    rng = np.random.default_rng(seed)
    q = random_poly(rng, n, deg, exact=True)
    for w in words_up_to(n, 4):
        assert b_coefficient(q, w) == b_by_factorizations(q, w)


def test_b_table():
    q = PolyTuple((ball_polynomial(2), ball_polynomial(1)))
    assert set(b_table(q, [2, 2]).values()) == {1}
    t = b_table(PolyTuple((fib_poly(), ball_polynomial(1))), [3, 1])
    for (a, b), v in t.items():
        assert v == fibonacci(len(a) + 1)
    assert t[((), ())] == 1


def test_json_roundtrip():
    q = PolyTuple((fib_poly(), ball_polynomial(2)))
    back = poly_tuple_from_json(poly_tuple_to_json(q))
    assert back.same_as(q)
    assert polynomial_from_json(polynomial_to_json(fib_poly())).same_as(fib_poly())
    with pytest.raises(ValidationError, match="terms\\[0\\]"):
        polynomial_from_json({"n": 1, "terms": [{"word": [1]}]})
    with pytest.raises(ValidationError, match="repeats"):
        polynomial_from_json({"n": 1, "terms": [{"word": [1], "coeff": 1}, {"word": [1], "coeff": 2}]})
