"""The three-point entry law and the random matrices built from it.

Every entry is 0 with probability 1/2 and +1, -1 with probability 1/4 each.
Draws are taken from two uniform bits ``b1 b0`` so the weights are exact:

    00, 01 -> 0        10 -> +1        11 -> -1

Randomness comes from per-block substreams: block ``b`` under seed ``s`` is a
Philox generator keyed by ``SeedSequence(s, spawn_key=(b,))``.  A sample's
stream position depends only on its global index, never on how blocks are
distributed over worker processes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import EnumerationCapError

XI_VALUES = (0, 1, -1)
XI_WEIGHTS = {0: Fraction(1, 2), 1: Fraction(1, 4), -1: Fraction(1, 4)}
DEFAULT_ENUMERATION_CAP = 12

# indexed by the 2-bit code 2*b1 + b0
_CODE_TO_XI = np.array([0, 0, 1, -1], dtype=np.int8)
_SHIFTS = np.arange(0, 64, 2, dtype=np.uint64)


def xi_from_bits(b1: int, b0: int) -> int:
    return int(_CODE_TO_XI[2 * (b1 & 1) + (b0 & 1)])


@dataclass(frozen=True)
class EnsembleSpec:
    """Matrix dimension and seed; the entry weights are fixed."""

    n: int
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"matrix dimension must be a positive integer, got {self.n!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed!r}")

    @property
    def weights(self) -> dict[int, Fraction]:
        return dict(XI_WEIGHTS)


class XiStream:
    """Buffered stream of xi draws, two raw bits per draw.

    Each 64-bit raw word yields 32 draws, least significant bit pair first.
    """

    def __init__(self, seed: int = 0, block: int = 0):
        self.seed = int(seed)
        self.block = int(block)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.block,))
        self._bitgen = np.random.Philox(seq)
        self._pending = np.empty(0, dtype=np.uint8)

    def codes(self, count: int) -> np.ndarray:
        """Next ``count`` two-bit codes in stream order."""
        if count <= len(self._pending):
            out, self._pending = self._pending[:count], self._pending[count:]
            return out
        need = count - len(self._pending)
        words = self._bitgen.random_raw((need + 31) // 32)
        fresh = ((words[:, None] >> _SHIFTS) & np.uint64(3)).astype(np.uint8).ravel()
        out = np.concatenate([self._pending, fresh[:need]])
        self._pending = fresh[need:]
        return out

    def draw(self, count: int) -> np.ndarray:
        return _CODE_TO_XI[self.codes(count)]

    def matrices(self, n: int, count: int) -> np.ndarray:
        """``count`` consecutive n x n matrices, each filled row-major."""
        return self.draw(count * n * n).reshape(count, n, n)


def sample_xi(stream: XiStream) -> int:
    return int(stream.draw(1)[0])


def sample_matrix(spec: EnsembleSpec, stream: XiStream) -> np.ndarray:
    """One n x n int8 matrix, n*n draws consumed in row-major order."""
    return stream.matrices(spec.n, 1)[0]


def as_ternary_matrix(M, *, min_n: int = 1) -> np.ndarray:
    """Validate a square {-1, 0, 1} matrix and return it as an int8 array."""
    arr = np.asarray(M)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] < min_n:
        raise ValueError(f"matrix dimension must be at least {min_n}, got {arr.shape[0]}")
    if arr.size and not np.isin(arr, XI_VALUES).all():
        raise ValueError("matrix entries must lie in {-1, 0, 1}")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class WeightedVector:
    pattern: tuple[int, ...]
    weight: Fraction


def pattern_weight(pattern) -> Fraction:
    zeros = sum(1 for v in pattern if v == 0)
    return Fraction(2**zeros, 4 ** len(pattern))


def _check_cap(k: int, cap: int) -> None:
    if k < 0:
        raise ValueError(f"pattern length must be non-negative, got {k}")
    if k > cap:
        raise EnumerationCapError(f"3**{k} patterns exceeds the enumeration cap 3**{cap}")


def enumerate_weighted(k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[WeightedVector]:
    """Every pattern of {0, 1, -1}^k with its exact probability.

    Order is a base-3 counter over digits (0, 1, -1), last position fastest.
    """
    _check_cap(k, cap)
    for pattern in itertools.product(XI_VALUES, repeat=k):
        yield WeightedVector(pattern, pattern_weight(pattern))


def weighted_pattern_array(k: int, cap: int = DEFAULT_ENUMERATION_CAP) -> tuple[np.ndarray, np.ndarray]:
    """All patterns as a (3**k, k) int8 array plus weight numerators over 4**k.

    Same order as :func:`enumerate_weighted`.
    """
    _check_cap(k, cap)
    if k == 0:
        return np.zeros((1, 0), dtype=np.int8), np.ones(1, dtype=np.int64)
    digits = np.indices((3,) * k).reshape(k, -1).T
    patterns = np.asarray(XI_VALUES, dtype=np.int8)[digits]
    numerators = np.left_shift(1, (patterns == 0).sum(axis=1)).astype(np.int64)
    return patterns, numerators
