"""Exact laws of signed sums ``sum(xi_i * a_i)`` and checks built on them.

Distributions are stored as integer counts over the common denominator
``4**len(a)``: each fold maps ``c`` to ``2*c(x) + c(x - a) + c(x + a)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .arith import is_prime
from .ensemble import XiStream, pattern_weight
from .errors import RangeCapError

DEFAULT_SUPPORT_CAP = 10**7


@dataclass(frozen=True)
class SumDistribution:
    counts: dict
    length: int
    modulus: Optional[int] = None

    @property
    def denominator(self) -> int:
        return 4**self.length

    def prob(self, x: int) -> Fraction:
        if self.modulus is not None:
            x %= self.modulus
        return Fraction(self.counts.get(x, 0), self.denominator)

    @property
    def support(self) -> dict[int, Fraction]:
        den = self.denominator
        return {x: Fraction(c, den) for x, c in sorted(self.counts.items()) if c}

    def total(self) -> Fraction:
        return Fraction(sum(self.counts.values()), self.denominator)

    def max_probability(self) -> Fraction:
        return Fraction(max(self.counts.values()), self.denominator)

    def reduce_mod(self, p: int) -> "SumDistribution":
        """Push-forward to F_p."""
        out = dict.fromkeys(range(p), 0)
        for x, c in self.counts.items():
            out[x % p] += c
        return SumDistribution(out, self.length, p)

    def sup_deviation_from_uniform(self) -> Fraction:
        if self.modulus is None:
            raise ValueError("uniform deviation is defined only over F_p")
        p, den = self.modulus, self.denominator
        return max(abs(Fraction(self.counts.get(x, 0), den) - Fraction(1, p)) for x in range(p))


def exact_sum_distribution(a: Sequence[int], cap: int = DEFAULT_SUPPORT_CAP) -> SumDistribution:
    """Law of ``sum(xi_i * a_i)`` over the integers."""
    counts = {0: 1}
    for ai in a:
        ai = int(ai)
        if ai == 0:
            counts = {x: 4 * c for x, c in counts.items()}
            continue
        nxt: dict[int, int] = {}
        get = nxt.get
        for x, c in counts.items():
            nxt[x] = get(x, 0) + 2 * c
            nxt[x + ai] = get(x + ai, 0) + c
            nxt[x - ai] = get(x - ai, 0) + c
        if len(nxt) > cap:
            raise RangeCapError(f"support grew past {cap} values")
        counts = nxt
    return SumDistribution(counts, len(a))


def exact_sum_distribution_mod_p(a: Sequence[int], p: int) -> SumDistribution:
    """Law of ``sum(xi_i * a_i)`` over F_p, O(len(a) * p)."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    counts = [0] * p
    counts[0] = 1
    for ai in a:
        s = int(ai) % p
        if s == 0:
            counts = [4 * c for c in counts]
            continue
        counts = [2 * counts[x] + counts[(x - s) % p] + counts[(x + s) % p] for x in range(p)]
    return SumDistribution(dict(enumerate(counts)), len(a), p)


def point_probability(a: Sequence[int], x: int = 0) -> Fraction:
    """``P(sum(xi_i * a_i) = x)`` by meeting in the middle.

    Costs about 2 * 3**(len(a)/2) dictionary entries instead of 3**len(a).
    """
    a = [int(v) for v in a]
    half = len(a) // 2
    left = exact_sum_distribution(a[:half]).counts
    right = exact_sum_distribution(a[half:]).counts
    if len(left) > len(right):
        left, right = right, left
    hits = sum(c * right.get(x - s, 0) for s, c in left.items())
    return Fraction(hits, 4 ** len(a))


@dataclass(frozen=True)
class FourierCheck:
    max_probability: Fraction
    zero_probability: Fraction
    holds: bool


def check_fourier_lemma(a: Sequence[int], cap: int = DEFAULT_SUPPORT_CAP) -> FourierCheck:
    """Is the most likely value of the sum attained at 0?  Ties pass."""
    dist = exact_sum_distribution(a, cap)
    top, zero = dist.max_probability(), dist.prob(0)
    return FourierCheck(top, zero, top == zero)


def char_fn(a: Iterable[int], t: float) -> float:
    """Characteristic function of the sum: prod of (1 + cos(a_i t)) / 2."""
    return math.prod(0.5 * (1.0 + math.cos(ai * t)) for ai in a)


# --- 2-isolated families -----------------------------------------------------

def hamming(v, w) -> int:
    return sum(1 for x, y in zip(v, w) if x != y)


@dataclass(frozen=True)
class IsolatedFamily:
    """Patterns of {0, +-1}^k that pairwise differ in at least two places."""

    k: int
    members: frozenset

    def __post_init__(self):
        members = [tuple(int(x) for x in v) for v in self.members]
        for v in members:
            if len(v) != self.k or any(x not in (-1, 0, 1) for x in v):
                raise ValueError(f"{v} is not a pattern in {{0, +-1}}^{self.k}")
        object.__setattr__(self, "members", frozenset(members))
        for v in self.members:
            for w in _neighbours(v):
                if w in self.members:
                    raise ValueError(f"family is not 2-isolated: {v} and {w} differ in one place")

    def mass(self) -> Fraction:
        return sum((pattern_weight(v) for v in self.members), Fraction(0))


def _neighbours(v):
    for i, x in enumerate(v):
        for y in (-1, 0, 1):
            if y != x:
                yield v[:i] + (y,) + v[i + 1 :]


def is_2_isolated(patterns) -> bool:
    """No two patterns at Hamming distance 1 (duplicates collapse)."""
    pool = set(map(tuple, patterns))
    return not any(w in pool for v in pool for w in _neighbours(v))


@dataclass(frozen=True)
class IsolatedCheck:
    mass: Fraction
    bound: Fraction
    holds: bool


def verify_2_isolated(E: IsolatedFamily) -> IsolatedCheck:
    mass, bound = E.mass(), Fraction(1, E.k)
    return IsolatedCheck(mass, bound, mass <= bound)


def hamming_ball(v) -> set:
    """``v`` together with every pattern differing from it in one coordinate."""
    v = tuple(v)
    return {v, *_neighbours(v)}


def balls_disjoint(E: IsolatedFamily) -> bool:
    """Radius-1 Hamming balls around members are pairwise disjoint (by counting)."""
    balls = [hamming_ball(v) for v in E.members]
    return sum(map(len, balls)) == len(set().union(*balls))


def random_2_isolated_family(
    k: int, target_size: int, stream: XiStream, max_rejections: Optional[int] = None
) -> IsolatedFamily:
    """Greedy rejection sampling of xi-distributed patterns.

    Stops at ``target_size`` members or after ``max_rejections`` consecutive
    rejected draws (default ``20 * target_size + 20``).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if max_rejections is None:
        max_rejections = 20 * target_size + 20
    kept: set[tuple[int, ...]] = set()
    rejections = 0
    while len(kept) < target_size and rejections < max_rejections:
        v = tuple(stream.draw(k).tolist())
        if v in kept or any(w in kept for w in _neighbours(v)):
            rejections += 1
        else:
            kept.add(v)
            rejections = 0
    return IsolatedFamily(k, frozenset(kept))


def all_vectors(n: int, max_abs: int) -> np.ndarray:
    """Every integer vector in [-max_abs, max_abs]^n, as rows."""
    span = np.arange(-max_abs, max_abs + 1)
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([span] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)
