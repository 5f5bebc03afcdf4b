import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from detsquare import arith
from detsquare.errors import FactorizationBudgetError

from oracles import squares_table


def test_isqrt_small():
    assert arith.isqrt(15) == 3
    assert arith.isqrt(16) == 4
    assert arith.isqrt(0) == 0


def test_isqrt_big():
    m = 10**100 + 1
    r = arith.isqrt(m)
    assert r * r <= m < (r + 1) ** 2


@given(st.integers(0, 10**300))
def test_isqrt_postcondition(m):
    r = arith.isqrt(m)
    assert r * r <= m < (r + 1) ** 2


def test_isqrt_negative():
    with pytest.raises(ValueError):
        arith.isqrt(-1)


def test_is_perfect_square_examples():
    assert arith.is_perfect_square(0)
    assert not arith.is_perfect_square(-4)
    assert arith.is_perfect_square(1)


def test_is_perfect_square_table():
    table = squares_table(10**6)
    for m in range(-(10**6), 10**6 + 1):
        assert arith.is_perfect_square(m) == (m in table)


@given(st.integers(1, 10**60))
def test_square_and_neighbours(k):
    assert arith.is_perfect_square(k * k)
    assert not arith.is_perfect_square(k * k + 1)
    assert not arith.is_perfect_square(-k * k)


def test_primes_up_to():
    assert arith.primes_up_to(10) == [2, 3, 5, 7]
    assert arith.primes_up_to(1) == []
    assert arith.primes_up_to(2) == [2]
    assert len(arith.primes_up_to(10**6)) == 78498
    assert arith.primes_up_to(10**4) == list(sympy.primerange(2, 10**4 + 1))


def test_is_prime_small_range():
    for n in range(-5, 20000):
        assert arith.is_prime(n) == sympy.isprime(n), n


@pytest.mark.parametrize(
    "n",
    [561, 3215031751, 2152302898747, 3474749660383, 341550071728321, 3825123056546413051,
     318665857834031151167461, 3317044064679887385961981],
)
def test_strong_pseudoprimes_rejected(n):
    assert not arith.is_prime(n)


@settings(max_examples=200)
@given(st.integers(2, 2**200))
def test_is_prime_matches_sympy(n):
    assert arith.is_prime(n) == sympy.isprime(n)


def test_is_prime_large_known():
    assert arith.is_prime(2**127 - 1)
    assert not arith.is_prime((2**61 - 1) * (2**89 - 1))


def test_factorize_examples():
    f = arith.factorize(12)
    assert f.sign == 1 and dict(f.factors) == {2: 2, 3: 1}
    f = arith.factorize(-45)
    assert f.sign == -1 and dict(f.factors) == {3: 2, 5: 1}
    assert arith.factorize(1).factors == ()
    assert arith.factorize(0).zero


def test_factorize_random_64bit():
    gen = random.Random(7)
    for _ in range(1000):
        m = gen.randrange(-(2**64), 2**64)
        f = arith.factorize(m)
        assert f.value() == m
        if m and _ < 200:
            assert dict(f.factors) == sympy.factorint(abs(m))


@settings(max_examples=25, deadline=None)
@given(st.integers(2**20, 2**40), st.integers(2**20, 2**40))
def test_factorize_semiprime_like(a, b):
    p, q = sympy.nextprime(a), sympy.nextprime(b)
    f = arith.factorize(p * q)
    assert f.value() == p * q
    assert all(arith.is_prime(x) for x in f.primes)


def test_factorize_budget_error():
    p, q = sympy.nextprime(2**62), sympy.nextprime(2**63)
    with pytest.raises(FactorizationBudgetError) as info:
        arith.factorize(6 * p * q, budget=10)
    assert info.value.partial is not None


def test_factorize_is_deterministic():
    m = sympy.nextprime(10**12) * sympy.nextprime(10**13) * 9
    assert arith.factorize(m) == arith.factorize(m)


def test_divisor_count_examples():
    assert arith.divisor_count(arith.factorize(12)) == 6
    assert arith.divisor_count(arith.factorize(1)) == 1
    with pytest.raises(ValueError):
        arith.divisor_count(arith.factorize(0))


def test_divisor_count_exhaustive():
    N = 10**5
    tau = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, N + 1):
        tau[d::d] += 1
    for m in range(1, N + 1):
        assert arith.divisor_count(arith.factorize(m)) == tau[m]
    assert arith.divisor_count(arith.factorize(-12)) == 6


def test_divisors():
    assert arith.divisors(12) == [1, 2, 3, 4, 6, 12]
    assert arith.divisors(-7) == [1, 7]


def test_p_adic_k():
    assert arith.p_adic_k(12, 2) == 3
    assert arith.p_adic_k(7, 3) == 1
    assert arith.p_adic_k(-81, 3) == 5
    with pytest.raises(ValueError):
        arith.p_adic_k(0, 2)
    with pytest.raises(ValueError):
        arith.p_adic_k(12, 4)


def test_log_divisor_count():
    assert arith.log_divisor_count(arith.factorize(1)) == 0.0
    assert math.isclose(arith.log_divisor_count(arith.factorize(12)), math.log(6))


def test_mertens_small():
    assert arith.mertens_sum(10) == Fraction(247, 210)
    assert arith.mertens_sum(2) == Fraction(1, 2)
    with pytest.raises(ValueError):
        arith.mertens_sum(1)


def test_mertens_matches_float_sum():
    ps = sympy.primerange(2, 5001)
    assert math.isclose(float(arith.mertens_sum(5000)), math.fsum(1 / p for p in ps), rel_tol=1e-14)


def test_mertens_million_shape():
    v = arith.mertens_sum(10**6)
    assert float(v) / math.log(math.log(10**6)) < arith.MERTENS_LOGLOG_CONSTANT


def test_dyadic_increments():
    for l in range(4, 20):
        inc = arith.prime_reciprocal_sum(2**l, 2 ** (l + 1))
        if l <= 12:
            assert inc == arith.mertens_sum(2 ** (l + 1)) - arith.mertens_sum(2**l)
        assert float(inc) <= arith.DYADIC_CONSTANT / l


@pytest.mark.parametrize("p,expected", [(2, 0.7112119), (3, 0.4398739)])
def test_maples_limit_known_values(p, expected):
    res = arith.maples_limit(p, tol=1e-9)
    assert abs(res.value - expected) < 1e-6
    assert res.truncation_error <= 1e-9


@pytest.mark.parametrize("p", [2, 3, 5, 7, 11, 101])
def test_maples_limit_against_qpochhammer(p):
    mpmath.mp.dps = 40
    oracle = 1 - mpmath.qp(mpmath.mpf(1) / p, mpmath.mpf(1) / p)
    assert abs(arith.maples_limit(p, tol=1e-13).value - float(oracle)) < 1e-12


def test_maples_limit_monotone_and_large_p():
    vals = [arith.maples_limit(p).value for p in arith.primes_up_to(60)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    p = 10**9 + 7
    assert math.isclose(arith.maples_limit(p).value, 1 / p, rel_tol=1e-6)


def test_maples_limit_rejects_bad_input():
    with pytest.raises(ValueError):
        arith.maples_limit(2, tol=0)
    with pytest.raises(ValueError):
        arith.maples_limit(4)


def test_square_pairs_examples():
    assert arith.square_pair_candidates(4) == {(2, 0), (0, 2), (3, 1), (1, 3)}
    assert arith.square_pair_candidates(1) == {(1, 0), (0, 1)}
    with pytest.raises(ValueError):
        arith.square_pair_candidates(0)


def _brute_pairs(d):
    lim = abs(2 * d) + 1
    targets = {d, -d, 2 * d, -2 * d}
    return {(a, b) for a in range(lim + 1) for b in range(lim + 1) if a * a - b * b in targets}


def test_square_pairs_brute_force():
    for d in range(-200, 201):
        if d == 0:
            continue
        got = arith.square_pair_candidates(d)
        assert got == _brute_pairs(d), d
        assert len(got) <= 4 * arith.divisor_count(arith.factorize(2 * d))


@settings(max_examples=50, deadline=None)
@given(st.integers(-(10**12), 10**12).filter(bool))
def test_square_pairs_postcondition(d):
    for a, b in arith.square_pair_candidates(d):
        assert a >= 0 and b >= 0
        assert a * a - b * b in {d, -d, 2 * d, -2 * d}
