"""Random instance generators shared by the test modules."""
from fractions import Fraction

import numpy as np

from ncpolydom.polycoeff import PolyTuple, ball_polynomial, validate_positive_regular
from ncpolydom.series import FormalSeries
from ncpolydom.words import compositions, enumerate_lambda, enumerate_words


def fib_poly():
    return validate_positive_regular({(1,): 1, (1, 1): 1}, 1)


def random_poly(rng, n, deg=3, exact=False, density=0.4):
    """Random positive regular polynomial with every linear term present."""
    cand = {}
    for length in range(1, deg + 1):
        for w in enumerate_words(n, length):
            if length == 1 or rng.random() < density:
                num, den = int(rng.integers(1, 7)), int(rng.integers(1, 7))
                cand[w] = Fraction(num, den) if exact else num / den
    return validate_positive_regular(cand, n)


def random_small_poly(rng, n):
    """Ball, Z+Z^2 style, or random, with coefficients kept small."""
    kind = rng.integers(3)
    if kind == 0:
        return ball_polynomial(n)
    if kind == 1:
        cand = {(j,): 1.0 for j in range(1, n + 1)}
        cand.update({(j, j): 1.0 for j in range(1, n + 1)})
        return validate_positive_regular(cand, n)
    return random_poly(rng, n, deg=2)


def random_q(rng, k, n_max=2):
    return PolyTuple(tuple(random_small_poly(rng, int(rng.integers(1, n_max + 1))) for _ in range(k)))


def random_blocks(rng, dK, scale=1.0):
    return scale * (rng.standard_normal((dK, dK)) + 1j * rng.standard_normal((dK, dK)))


def random_polynomial_series(rng, q, max_total, dK=1, density=0.7, constant=True, decay=None):
    terms = {}
    for m in range(0 if constant else 1, max_total + 1):
        for p in compositions(m, q.k):
            for wt in enumerate_lambda(q.n_vec, p):
                if rng.random() < density:
                    scale = 1.0 if decay is None else decay(m)
                    terms[wt] = random_blocks(rng, dK, scale)
    return FormalSeries(q, terms, dK)


def homogeneous_series(rng, q, p, dK):
    return FormalSeries(q, {wt: random_blocks(rng, dK) for wt in enumerate_lambda(q.n_vec, p)}, dK)


def entire_series(rng, q, max_total, dK=1):
    """Coefficients of size ``1/m!^2`` at total degree ``m``, so the radius is infinite."""
    from math import factorial

    return random_polynomial_series(rng, q, max_total, dK, density=1.0, decay=lambda m: 1.0 / factorial(m) ** 2)
