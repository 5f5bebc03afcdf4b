"""Integer arithmetic: squares, factorization, divisor counts, prime sums."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import FactorizationBudgetError

TRIAL_DIVISION_LIMIT = 10**6
DEFAULT_RHO_BUDGET = 2_000_000

# l * (sum of 1/p over 2**l < p <= 2**(l+1)) for 4 <= l <= 19 peaks at 0.973 (l = 18)
DYADIC_CONSTANT = 1.5
MERTENS_LOGLOG_CONSTANT = 4.0

_SQUARE_FILTERS = {m: frozenset(x * x % m for x in range(m)) for m in (256, 9, 5, 7, 13)}


def isqrt(m: int) -> int:
    """Floor square root, with the floor property checked."""
    if m < 0:
        raise ValueError("isqrt of a negative number")
    r = math.isqrt(m)
    if not (r * r <= m < (r + 1) * (r + 1)):
        raise ArithmeticError(f"isqrt floor check failed for {m}")
    return r


def is_perfect_square(m: int) -> bool:
    m = int(m)
    if m < 0:
        return False
    for mod, residues in _SQUARE_FILTERS.items():
        if m % mod not in residues:
            return False
    r = isqrt(m)
    return r * r == m


# --- primes ---------------------------------------------------------------

def primes_up_to(n: int) -> list[int]:
    """Sieve of Eratosthenes."""
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for i in range(3, math.isqrt(n) + 1, 2):
        if sieve[i]:
            sieve[i * i :: 2 * i] = False
    return np.flatnonzero(sieve).tolist()


@lru_cache(maxsize=1)
def _small_primes() -> tuple[int, ...]:
    return tuple(primes_up_to(TRIAL_DIVISION_LIMIT))


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
# the first 13 prime bases are a proof of primality below this bound
_MR_DETERMINISTIC_BOUND = 3_317_044_064_679_887_385_961_981


def _strong_probable_prime(n: int, a: int) -> bool:
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    x = pow(a, d, n)
    if x in (1, n - 1):
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def _strong_lucas_probable_prime(n: int) -> bool:
    # Selfridge parameters: first D in 5, -7, 9, -11, ... with (D/n) = -1
    D = 5
    while True:
        j = _jacobi(D, n)
        if j == -1:
            break
        if j == 0 and abs(D) != n:
            return False
        D = -D - 2 if D > 0 else -D + 2
        if D == 13 and is_perfect_square(n):
            return False
    P, Q = 1, (1 - D) // 4
    d, s = n + 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    U, V, Qk = 1, P, Q % n
    inv2 = pow(2, -1, n)
    for bit in bin(d)[3:]:
        U, V = U * V % n, (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if bit == "1":
            U, V = (P * U + V) * inv2 % n, (D * U + P * V) * inv2 % n
            Qk = Qk * Q % n
    if U == 0 or V == 0:
        return True
    for _ in range(s - 1):
        V = (V * V - 2 * Qk) % n
        Qk = Qk * Qk % n
        if V == 0:
            return True
    return False


def _jacobi(a: int, n: int) -> int:
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_prime(n: int) -> bool:
    """Deterministic below ~3.3e24 (Miller-Rabin, 13 prime bases); BPSW above."""
    n = int(n)
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n < _MR_DETERMINISTIC_BOUND:
        return all(_strong_probable_prime(n, a) for a in _MR_BASES)
    return _strong_probable_prime(n, 2) and _strong_lucas_probable_prime(n)


# --- factorization --------------------------------------------------------

@dataclass(frozen=True)
class Factorization:
    """Signed factorization ``sign * prod(p**e)``; ``zero`` marks the integer 0."""

    sign: int
    factors: tuple[tuple[int, int], ...]
    zero: bool = False

    def value(self) -> int:
        if self.zero:
            return 0
        out = self.sign
        for p, e in self.factors:
            out *= p**e
        return out

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)


def _rho_split(n: int, budget: list[int]) -> int:
    """Brent's variant of Pollard rho; seeded from ``n`` so the result is a pure function."""
    rng = random.Random(n)
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            budget[0] -= r
            if budget[0] < 0:
                return 0
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


def factorize(m: int, budget: int = DEFAULT_RHO_BUDGET) -> Factorization:
    """Complete factorization: trial division by sieved primes, then rho.

    ``budget`` bounds the total number of rho iterations; exceeding it raises
    :class:`FactorizationBudgetError` carrying the partial result.
    """
    m = int(m)
    if m == 0:
        return Factorization(sign=1, factors=(), zero=True)
    sign = -1 if m < 0 else 1
    n = abs(m)
    found: dict[int, int] = {}
    for p in _small_primes():
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            found[p] = e
    budget_box = [budget]
    stack = [n] if n > 1 else []
    while stack:
        q = stack.pop()
        if q < TRIAL_DIVISION_LIMIT**2 or is_prime(q):
            # everything below the trial bound squared that survived is prime
            found[q] = found.get(q, 0) + 1
            continue
        if is_perfect_square(q):
            r = isqrt(q)
            stack += [r, r]
            continue
        g = _rho_split(q, budget_box)
        if g == 0:
            partial = Factorization(sign, tuple(sorted(found.items())))
            raise FactorizationBudgetError(
                f"rho budget of {budget} iterations exhausted factoring {m}",
                partial=partial,
                remaining=[q] + stack,
            )
        stack += [g, q // g]
    return Factorization(sign, tuple(sorted(found.items())))


def divisor_count(f: Factorization) -> int:
    """Number of positive divisors of ``|m|``."""
    if f.zero:
        raise ValueError("the divisor count of 0 is undefined")
    return math.prod(e + 1 for _, e in f.factors)


def divisors(m: int, budget: int = DEFAULT_RHO_BUDGET) -> list[int]:
    """Sorted positive divisors of ``|m|``."""
    f = factorize(m, budget)
    if f.zero:
        raise ValueError("0 has infinitely many divisors")
    divs = [1]
    for p, e in f.factors:
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def p_adic_k(m: int, p: int) -> int:
    """``valuation_p(m) + 1``: the k with p**(k-1) | m and p**k not dividing m."""
    if m == 0:
        raise ValueError("valuation of 0 is infinite")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    m, k = abs(int(m)), 1
    while m % p == 0:
        m //= p
        k += 1
    return k


def log_divisor_count(f: Factorization) -> float:
    return sum(math.log(e + 1) for _, e in f.factors)


# --- prime reciprocal sums --------------------------------------------------

def _reciprocal_tree(ps: list[int]) -> tuple[int, int]:
    if len(ps) == 1:
        return 1, ps[0]
    mid = len(ps) // 2
    a, b = _reciprocal_tree(ps[:mid])
    c, d = _reciprocal_tree(ps[mid:])
    return a * d + c * b, b * d


def prime_reciprocal_sum(lo: int, hi: int) -> Fraction:
    """Exact sum of 1/p over primes lo < p <= hi."""
    ps = [p for p in primes_up_to(hi) if p > lo]
    if not ps:
        return Fraction(0)
    # product tree keeps the big multiplications balanced
    num, den = _reciprocal_tree(ps)
    return Fraction(num, den)


def mertens_sum(n: int) -> Fraction:
    """Exact sum of 1/p over primes p <= n."""
    if n < 2:
        raise ValueError(f"mertens_sum needs n >= 2, got {n}")
    return prime_reciprocal_sum(1, n)


@dataclass(frozen=True)
class MaplesLimit:
    p: int
    value: float
    exact_partial: Fraction = field(repr=False)
    terms: int
    truncation_error: float


def maples_limit(p: int, tol: float = 1e-12) -> MaplesLimit:
    """``1 - prod_{k>=1} (1 - p**-k)`` from an exact partial product.

    Stops at the first K with p**-K / (p - 1) < tol; that geometric tail
    bounds the distance to the infinite product.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    prod = Fraction(1)
    K = 0
    while True:
        K += 1
        prod *= 1 - Fraction(1, p**K)
        tail = Fraction(1, p**K * (p - 1))
        if tail < tol:
            break
    partial = 1 - prod
    return MaplesLimit(p, float(partial), partial, K, float(tail))


# --- differences of squares --------------------------------------------------

def square_pair_candidates(d: int, budget: int = DEFAULT_RHO_BUDGET) -> set[tuple[int, int]]:
    """All (A, B) with A, B >= 0 and A**2 - B**2 in {d, -d, 2d, -2d}."""
    if d == 0:
        raise ValueError("d must be nonzero")
    d = abs(int(d))
    out = set()
    for T in (d, 2 * d):
        for u in divisors(T, budget):
            v = T // u
            if u > v:
                break
            if (u + v) % 2:
                continue
            A, B = (u + v) // 2, (v - u) // 2
            out.add((A, B))
            out.add((B, A))
    return out
