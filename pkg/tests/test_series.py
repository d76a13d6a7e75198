import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncpolydom.domain import OperatorTuple, minkowski_functional, random_operator_tuple
from ncpolydom.errors import CertificationError, ValidationError
from ncpolydom.fock import operator_norm
from ncpolydom.polycoeff import PolyTuple, ball_polynomial, fibonacci
from ncpolydom.series import (FormalSeries, abel_bounded_test, cauchy_check, domain_membership_omega, evaluate,
                              from_function, from_scalars, geometric_series, homogeneous_norm,
                              liouville_degree_bound, log_convex_mix, model_norm, model_operator,
                              monomial, polydomain_radius, schwarz_check, series_from_json, series_to_json)

from helpers import fib_poly, homogeneous_series, random_polynomial_series, random_q

PHI = (1 + math.sqrt(5)) / 2


def Q(*p):
    return PolyTuple(tuple(p))


Z = Q(ball_polynomial(1))


def scalar(*vals):
    return OperatorTuple(tuple((np.array([[v]], dtype=complex),) for v in vals))


def test_homogeneous_norm_examples():
    F = from_scalars(Q(ball_polynomial(2)), {((1,),): 3, ((2,),): 4})
    assert homogeneous_norm(F, (1,)) == pytest.approx(5)
    assert homogeneous_norm(monomial(Q(fib_poly()), ((1, 1),)), (2,)) == pytest.approx(1 / math.sqrt(2))
    assert homogeneous_norm(F, (2,)) == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_homogeneous_norm_matches_model(seed):
    rng = np.random.default_rng(seed)
    q = random_q(rng, int(rng.integers(1, 3)))
    p = tuple(int(v) for v in rng.integers(0, 3, size=q.k))
    F = homogeneous_series(rng, q, p, int(rng.integers(1, 4)))
    r = float(rng.uniform(0.1, 1.0))
    br = model_norm(F, r, p)
    exact = r ** sum(p) * homogeneous_norm(F, p)
    assert br.lower == pytest.approx(exact, rel=1e-9) and br.upper == pytest.approx(exact, rel=1e-12)


def test_model_norm_constant_and_geometric():
    F = from_scalars(Z, {((),): -2.5})
    br = model_norm(F, 0.3)
    assert br.lower == pytest.approx(2.5) and br.upper == pytest.approx(2.5)
    G = geometric_series(Z, 40)
    br = model_norm(G, 0.5, (40,))
    assert br.lower <= 2.0 <= br.upper + 1e-12
    # truncated shift Toeplitz norms approach 2 at rate O(1/N^2); the width at N = 40 is ~1.06e-2
    assert br.width < 0.011
    assert model_norm(G, 0.5, (80,)).width < br.width / 3


def test_evaluate_examples():
    q = Q(ball_polynomial(2))
    F = from_scalars(q, {((),): 1, ((1,),): 1})
    X = OperatorTuple(((np.zeros((2, 2)), np.zeros((2, 2))),))
    assert np.allclose(evaluate(F, X).value, np.eye(2))
    rng = np.random.default_rng(0)
    Y = random_operator_tuple((2,), [3], rng)
    assert np.array_equal(evaluate(monomial(q, ((1,),)), Y).value, Y.blocks[0][0])
    ev = evaluate(geometric_series(Z, 60), scalar(0.5))
    assert abs(ev.value[0, 0] - 2) <= 0.5**60 + ev.tail_estimate + 1e-15
    assert ev.tail_estimate < 1e-15


def test_evaluate_uncertified_tail():
    with pytest.raises(CertificationError):
        evaluate(geometric_series(Z, 20), scalar(0.9))
    with pytest.raises(CertificationError):
        evaluate(geometric_series(Z, 20, 2.0), scalar(0.9))


def test_evaluate_scalar_tuple_is_power_series():
    q = Q(ball_polynomial(1), ball_polynomial(1))
    F = from_function(q, lambda wt: 1.0 / (1 + len(wt[0]) + 2 * len(wt[1])), 6, truncated=False)
    lam = (0.3 + 0.1j, -0.2j)
    X = OperatorTuple(((np.diag([lam[0], 0.5]),), (np.diag([lam[1], 0.1]),)))
    direct = sum(c[0, 0] * lam[0] ** len(wt[0]) * lam[1] ** len(wt[1]) for wt, c in F.terms.items())
    assert evaluate(F, X).value[0, 0] == pytest.approx(direct, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_von_neumann_inequality(seed):
    rng = np.random.default_rng(seed)
    q = random_q(rng, int(rng.integers(1, 3)))
    F = random_polynomial_series(rng, q, 3, int(rng.integers(1, 3)))
    X = random_operator_tuple(q.n_vec, [2] * q.k, rng)
    X = X.scaled(1.0 / minkowski_functional(q, X))
    assert operator_norm(evaluate(F, X).value) <= model_norm(F, 1.0).upper + 1e-9


def test_abel_examples():
    assert abel_bounded_test(geometric_series(Z, 40), 1.0, 40).bounded
    assert abel_bounded_test(geometric_series(Z, 40), 1.0, 40).values == [1.0] * 41
    rep = abel_bounded_test(geometric_series(Z, 40, 2.0), 1.0, 40)
    assert not rep.bounded and rep.values[3] == 4.0**3
    G = geometric_series(Q(fib_poly()), 60)
    rep = abel_bounded_test(G, math.sqrt(PHI), 60)
    assert rep.bounded
    assert rep.values[10] == pytest.approx(PHI**10 / fibonacci(11))


def test_radius_examples():
    assert polydomain_radius(geometric_series(Z, 60), 60).gamma == 1.0
    g = polydomain_radius(geometric_series(Q(fib_poly()), 60), 60).gamma
    assert abs(g - math.sqrt(PHI)) / math.sqrt(PHI) < 0.02
    assert polydomain_radius(geometric_series(Z, 60, 2.0), 60).gamma == pytest.approx(0.5)
    assert polydomain_radius(from_scalars(Z, {((1, 1),): 3.0}), 20).gamma == math.inf


def test_cauchy_examples():
    F = monomial(Q(fib_poly()), ((1, 1, 1),), 2.0)
    out = cauchy_check(F, 0.6)
    assert abs(out["levels"][0]["slack"]) <= 1e-12
    out = cauchy_check(geometric_series(Z, 40), 0.5, (40,))
    for row in out["levels"]:
        p = row["p"][0]
        assert row["slack"] == pytest.approx(2 * 2**p - 1, rel=1e-9)
    assert cauchy_check(from_scalars(Z, {((),): 1.0}), 0.5)["levels"][0]["slack"] == 0


def test_liouville_examples():
    q = Q(ball_polynomial(2))
    poly = random_polynomial_series(np.random.default_rng(1), q, 2)
    assert liouville_degree_bound(poly, [2], 1.0, [1, 10, 100])["violations"] == []
    single = monomial(q, ((1, 2, 1),), 0.3)
    out = liouville_degree_bound(single, [2], 5.0, [1, 10, 100])
    assert out["forced"][0]["certified_bound"] <= 5.0 / 100
    out = liouville_degree_bound(geometric_series(Z, 10), [0], 5.0, [1, 10, 100])
    assert out["violations"] and out["certified_degree_box"] is None


def test_omega_examples():
    G = geometric_series(Z, 60)
    assert domain_membership_omega(G, 0.9, 60).bounded
    assert domain_membership_omega(G, 1.0, 60).bounded
    assert not domain_membership_omega(G, 1.1, 60).bounded
    mix = log_convex_mix(G, 0.5, 1.0, 0.5, 60)
    assert mix["mix"][0] == pytest.approx(math.sqrt(0.5)) and mix["mix_in"] and mix["consistent"]
    zero = FormalSeries(Z, {})
    assert all(domain_membership_omega(zero, r, 30).bounded for r in (0.5, 1.0, 5.0))


def test_schwarz_examples():
    F = monomial(Z, ((1,),))
    out = schwarz_check(F, scalar(0.7))
    assert out["lhs"] == pytest.approx(0.7) and abs(out["slack"]) <= 1e-9
    out = schwarz_check(monomial(Z, ((1, 1),)), scalar(0.5))
    assert out["lhs"] == pytest.approx(0.25) and out["rhs"] == pytest.approx(0.5)
    out = schwarz_check(F, scalar(0.0))
    assert out["lhs"] == 0 and out["rhs"] == 0
    with pytest.raises(ValidationError, match="F\\(0\\) = 0"):
        schwarz_check(from_scalars(Z, {((),): 0.1}), scalar(0.5))
    with pytest.raises(ValidationError, match="exceeds 1"):
        schwarz_check(monomial(Z, ((1,),), 2.0), scalar(0.5))


def test_json_roundtrip():
    rng = np.random.default_rng(2)
    q = Q(fib_poly(), ball_polynomial(2))
    F = random_polynomial_series(rng, q, 2, 2)
    G = series_from_json(series_to_json(F))
    assert G.q.same_as(q) and G.terms.keys() == F.terms.keys()
    assert all(np.array_equal(F.terms[k], G.terms[k]) for k in F.terms)
    H = series_from_json({"n": [1], "terms": [{"words": [[1]], "coeff": 2}]})
    assert H.q.same_as(Z) and H.coefficient(((1,),))[0, 0] == 2
    with pytest.raises(ValidationError, match="terms\\[0\\]"):
        series_from_json({"n": [1], "terms": [{"words": [[2]], "coeff": 1}]})
    with pytest.raises(ValidationError):
        series_from_json({"n": [1], "coeff_dim": 2, "terms": [{"words": [[1]], "block": [1, 2, 3]}]})


def test_model_operator_order_independent():
    rng = np.random.default_rng(4)
    q = Q(ball_polynomial(2))
    F = random_polynomial_series(rng, q, 3)
    G = FormalSeries(q, dict(reversed(list(F.terms.items()))))
    A, B = model_operator(F, 0.7), model_operator(G, 0.7)
    assert abs(A - B).max() == 0
