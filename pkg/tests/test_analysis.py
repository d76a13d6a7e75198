import numpy as np
import pytest

from ncpolydom.analysis import (MetricConfig, NotLocallyBounded, d_r, locally_bounded_check, max_principle_probe,
                                montel_extract, rho_metric, vitali_check, weierstrass_limit)
from ncpolydom.errors import ValidationError
from ncpolydom.polycoeff import PolyTuple, ball_polynomial
from ncpolydom.series import FormalSeries, from_scalars, geometric_series, monomial

from helpers import entire_series, fib_poly, random_polynomial_series

Z = PolyTuple((ball_polynomial(1),))
GRID = [i / 10 for i in range(1, 10)]


def const(c, q=Z):
    return from_scalars(q, {((),) * q.k: c})


def test_d_r_examples():
    F = geometric_series(Z, 10, 0.5)
    br = d_r(F, F, 0.5)
    assert br.lower == br.upper == 0
    br = d_r(FormalSeries(Z, {}), const(3 - 4j), 0.7)
    assert br.lower == pytest.approx(5) and br.upper == pytest.approx(5)
    br = d_r(FormalSeries(Z, {}), monomial(Z, ((1,),)), 0.6, (5,))
    assert br.lower == pytest.approx(0.6) and br.upper == pytest.approx(0.6)
    with pytest.raises(ValidationError):
        d_r(F, monomial(PolyTuple((fib_poly(),)), ((1,),)), 0.5)
    with pytest.raises(ValidationError):
        d_r(F, F, 1.0)


def test_rho_examples():
    F = geometric_series(Z, 10, 0.5)
    assert rho_metric(F, F).value == 0
    assert 0 < rho_metric(F, const(0.0)).value < 1
    prev = 0.0
    for c in (1.0, 1e3, 1e6, 1e12):
        v = rho_metric(const(0.0), const(c), MetricConfig(20)).value
        assert v > prev
        prev = v
    assert prev == pytest.approx(1 - 2.0**-20, abs=1e-10)


def test_rho_symmetric_exactly():
    rng = np.random.default_rng(3)
    q = PolyTuple((ball_polynomial(2), fib_poly()))
    F, G = random_polynomial_series(rng, q, 2), random_polynomial_series(rng, q, 2)
    assert rho_metric(F, G, MetricConfig(8)).value == rho_metric(G, F, MetricConfig(8)).value


def test_weierstrass_examples():
    rng = np.random.default_rng(1)
    F = entire_series(rng, Z, 30)
    rep = weierstrass_limit([F.partial_sum(m) for m in range(25)], [0.5, 0.9])
    assert rep.convergent
    err = max(float(np.max(np.abs(A))) for A in (rep.limit - F).terms.values())
    assert err <= 1e-8
    assert weierstrass_limit([F] * 5, [0.5]).convergent
    rep = weierstrass_limit([monomial(Z, ((1,),), m) for m in range(1, 20)], [0.5])
    assert not rep.convergent and rep.limit is None


def test_locally_bounded_examples():
    assert [r["sup_upper"] for r in locally_bounded_check([FormalSeries(Z, {})], [0.5, 0.9])] == [0, 0]
    fam = [monomial(Z, ((1,),), c) for c in range(1, 11)]
    rows = locally_bounded_check(fam, [0.3, 0.8], caps=(4,))
    for row in rows:
        assert row["sup_upper"] == pytest.approx(10 * row["r"]) and row["sup_lower"] == pytest.approx(10 * row["r"])


def test_montel_examples():
    F, G = monomial(Z, ((1,),), 1.0), monomial(Z, ((1, 1),), -1.0)
    res = montel_extract([F, G] * 5, 2, [0.5])
    assert res.succeeded and len(set(i % 2 for i in res.indices)) == 1
    fam = [monomial(Z, ((1,),), (-1) ** m + 1 / m) for m in range(1, 201)]
    res = montel_extract(fam, 1, [0.5], tol=1e-3)
    assert res.succeeded and all((i + 1) % 2 == 0 for i in res.indices)
    assert res.limit.coefficient(((1,),))[0, 0].real == pytest.approx(1.0, abs=1e-2)
    res = montel_extract([F] * 4, 2, [0.5])
    assert res.indices == [0, 1, 2, 3] and res.limit.coefficient(((1,),))[0, 0] == 1


def test_montel_rejects_unbounded():
    bad = [from_scalars(Z, {((1,) * p,): 3.0**p for p in range(m + 1)}) for m in range(40)]
    with pytest.raises(NotLocallyBounded):
        montel_extract(bad, 2, [0.5, 0.9])


def test_vitali_examples():
    rng = np.random.default_rng(2)
    F = entire_series(rng, Z, 25)
    assert vitali_check([F.partial_sum(m) for m in range(26)], 0.5, GRID).status == "convergent"
    assert vitali_check([F] * 3, 0.5, GRID).status == "convergent"
    bad = [from_scalars(Z, {((1,) * p,): 1.5**p for p in range(m + 1)}) for m in range(60)]
    assert vitali_check(bad, 0.5, GRID, tol=1e-5).status == "not-locally-bounded"
    short = [geometric_series(Z, 40, 0.5).partial_sum(m) for m in range(6)]
    assert vitali_check(short, 0.5, GRID).status == "not-cauchy-at-gamma"


def test_max_principle_examples():
    out = max_principle_probe(const(2.0), 0.7, n_samples=10, seed=1)
    assert out["sampled_max"] == pytest.approx(2.0) and out["witness"] == pytest.approx(2.0)
    out = max_principle_probe(monomial(Z, ((1,),)), 0.8, (6,), n_samples=50, seed=2)
    assert out["sampled_max"] <= 0.8 + 1e-8 and out["witness"] == pytest.approx(0.8)
    out = max_principle_probe(monomial(Z, ((1,),)), 0.8, n_samples=0)
    assert out["sampled_max"] is None and out["witness"] == pytest.approx(0.8)


def test_max_principle_reproducible():
    rng = np.random.default_rng(5)
    q = PolyTuple((ball_polynomial(2), fib_poly()))
    F = random_polynomial_series(rng, q, 2)
    a = max_principle_probe(F, 0.6, n_samples=20, seed=9)
    b = max_principle_probe(F, 0.6, n_samples=20, seed=9)
    assert a == b and a["samples_within_upper"] and a["witness_attains_lower"]
