"""Exact determinants over Z, modular determinants and ranks, and minors.

Indices in docstrings are 1-based to match the usual m_{i,j} notation; arrays
are 0-based.  Two minor families are used:

* ``d_i`` -- delete row 1 and column i.  Cofactor expansion along row 1:
  ``det M = sum_i (-1)**(i+1) * m_{1,i} * d_i``.
* ``w_j`` (j = 2..n) -- delete rows 1, j and columns 1, 2.  Expanding ``d_1``
  along its first column (column 2 of M), and ``d_2`` along column 1 of M:

      d_1 = sum_{j=2}^{n} (-1)**j * m_{j,2} * w_j
      d_2 = sum_{j=2}^{n} (-1)**j * m_{j,1} * w_j

  i.e. ``d_i = sum_j (-1)**j m_{j,3-i} w_j`` for i in {1, 2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .arith import is_prime
from .ensemble import as_ternary_matrix

BAREISS_CROSSOVER = 16


# --- integer engines ---------------------------------------------------------

def det_bareiss(M) -> int:
    """Fraction-free elimination; every division is exact."""
    a = [[int(x) for x in row] for row in np.asarray(M)]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot, row_k = a[k][k], a[k]
        for i in range(k + 1, n):
            row_i, f = a[i], a[i][k]
            if f == 0:
                a[i] = [pivot * x // prev for x in row_i] if prev != pivot else row_i
            else:
                a[i] = [(pivot * x - f * y) // prev for x, y in zip(row_i, row_k)]
        prev = pivot
    return sign * a[n - 1][n - 1] if n else 1


def det_bound(n: int) -> int:
    """``min(n!, ceil(n**(n/2)))``: bounds |det| of any {0, +-1} matrix."""
    hadamard = math.isqrt(n**n)
    if hadamard * hadamard < n**n:
        hadamard += 1
    return min(math.factorial(n), hadamard)


@lru_cache(maxsize=None)
def _primes_below(limit: int, count: int) -> tuple[int, ...]:
    out, q = [], limit - 1
    while len(out) < count:
        if is_prime(q):
            out.append(q)
        q -= 1
    return tuple(out)


def crt_primes(n: int) -> tuple[int, ...]:
    """Largest kernel primes whose product exceeds ``2 * det_bound(n)``."""
    need = 2 * det_bound(n)
    count = 1
    while True:
        primes = _primes_below(_kernels.MAX_KERNEL_PRIME, count)
        if math.prod(primes) > need:
            return primes
        count += 1


def crt_symmetric(residues, primes) -> int:
    """The unique integer in (-P/2, P/2] with the given residues (Garner)."""
    x, modulus = 0, 1
    for r, p in zip(residues, primes):
        t = (int(r) - x) * pow(modulus, -1, p) % p
        x += modulus * t
        modulus *= p
    return x - modulus if x > modulus // 2 else x


def _as_stack(mats) -> np.ndarray:
    arr = np.asarray(mats)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"expected a stack of square matrices, got shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.int8)


def det_mod_p_batch(mats, p: int) -> np.ndarray:
    """Residues of det modulo a prime p < 2**25 for a (B, n, n) stack."""
    if p >= _kernels.MAX_KERNEL_PRIME:
        return np.array([det_mod_p(m, p) for m in mats], dtype=object)
    stack = _as_stack(mats)
    if stack.shape[1] == 0:
        return np.ones(len(stack), dtype=np.int64) % p
    return _kernels.det_mod_p_batch(stack, p)


def det_residues_batch(mats) -> tuple[tuple[int, ...], np.ndarray]:
    """Residues modulo every CRT prime; array shape (len(primes), B)."""
    stack = _as_stack(mats)
    primes = crt_primes(stack.shape[1])
    return primes, np.stack([det_mod_p_batch(stack, p) for p in primes])


def det_crt_batch(mats) -> list[int]:
    primes, residues = det_residues_batch(mats)
    return [crt_symmetric(col, primes) for col in residues.T.tolist()]


def det_crt(M) -> int:
    """Determinant reconstructed from residues modulo several primes."""
    return det_crt_batch(as_ternary_matrix(M, min_n=0)[None])[0]


def det(M) -> int:
    """Exact determinant with the cheaper engine for the size."""
    n = np.asarray(M).shape[0]
    return det_bareiss(M) if n <= BAREISS_CROSSOVER else det_crt(M)


def det_mod_p(M, p: int) -> int:
    """det M modulo a prime, by elimination over F_p."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if p < _kernels.MAX_KERNEL_PRIME and np.isin(np.asarray(M), (-1, 0, 1)).all():
        return int(det_mod_p_batch(np.asarray(M)[None], p)[0])
    a = [[int(x) % p for x in row] for row in np.asarray(M)]
    n, out = len(a), 1
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            out = -out
        out = out * a[c][c] % p
        inv = pow(a[c][c], -1, p)
        for r in range(c + 1, n):
            f = a[r][c] * inv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[c])]
    return out % p


# --- ranks over F_p ------------------------------------------------------------

def rank_mod_p(A, p: int) -> int:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    A = np.asarray(A)
    if A.size == 0:
        return 0
    if p < _kernels.MAX_KERNEL_PRIME:
        return int(_kernels.rank_mod_p_batch(np.ascontiguousarray(A[None], dtype=np.int64), p)[0])
    a = [[int(x) % p for x in row] for row in A]
    rank, rows, cols = 0, len(a), len(a[0])
    for c in range(cols):
        piv = next((r for r in range(rank, rows) if a[r][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        for r in range(rank + 1, rows):
            f = a[r][c] * inv % p
            if f:
                a[r] = [(x - f * y) % p for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


@dataclass(frozen=True)
class FpRankReport:
    p: int
    num_vectors: int
    ambient_dim: int
    rank: int

    @property
    def deficiency(self) -> int:
        return self.num_vectors - self.rank


def trailing_column_deficiency(M, p: int, k: int = 3) -> FpRankReport:
    """Rank over F_p of columns k+1..n of M restricted to rows 2..n.

    The reported deficiency is ``(n - k) - rank``; the ambient codimension of
    that span in F_p^(n-1) is always at least ``k - 1`` and says nothing more.
    """
    M = as_ternary_matrix(M)
    n = M.shape[0]
    if n < k + 1:
        raise ValueError(f"need n >= k + 1, got n={n}, k={k}")
    return FpRankReport(p, n - k, n - 1, rank_mod_p(M[1:, k:], p))


def trailing_deficiency_batch(mats, p: int, k: int = 3) -> np.ndarray:
    stack = _as_stack(mats)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    n = stack.shape[1]
    sub = np.ascontiguousarray(stack[:, 1:, k:], dtype=np.int64)
    return (n - k) - _kernels.rank_mod_p_batch(sub, p)


# --- minors --------------------------------------------------------------------

def _delete(M: np.ndarray, rows, cols) -> np.ndarray:
    return np.delete(np.delete(M, rows, axis=-2), cols, axis=-1)


def first_row_minors(M) -> list[int]:
    """``[d_1, ..., d_n]``; d_i deletes row 1 and column i."""
    M = as_ternary_matrix(M, min_n=2)
    return [det(_delete(M, [0], [i])) for i in range(M.shape[0])]


def first_row_minors_batch(mats, columns=None) -> list[list[int]]:
    """Minors d_i for every matrix of a stack; ``columns`` (0-based) selects a subset."""
    stack = _as_stack(mats)
    count, n, _ = stack.shape
    if n < 2:
        raise ValueError("first-row minors need n >= 2")
    cols = list(range(n)) if columns is None else list(columns)
    minors = np.stack([_delete(stack, [0], [i]) for i in cols], axis=1)
    flat = det_crt_batch(minors.reshape(count * len(cols), n - 1, n - 1))
    w = len(cols)
    return [flat[b * w : (b + 1) * w] for b in range(count)]


def cofactor_expansion(first_row, minors) -> int:
    """``sum_i (-1)**(i+1) * m_{1,i} * d_i`` (1-based i)."""
    return sum(int(m) * d if i % 2 == 0 else -int(m) * d for i, (m, d) in enumerate(zip(first_row, minors)))


def second_order_minors(M) -> list[int]:
    """``[w_2, ..., w_n]``; w_j deletes rows 1, j and columns 1, 2."""
    M = as_ternary_matrix(M, min_n=3)
    return [det(_delete(M, [0, j], [0, 1])) for j in range(1, M.shape[0])]


def second_order_minors_batch(mats) -> list[list[int]]:
    stack = _as_stack(mats)
    count, n, _ = stack.shape
    if n < 3:
        raise ValueError("second-order minors need n >= 3")
    minors = np.stack([_delete(stack, [0, j], [0, 1]) for j in range(1, n)], axis=1)
    flat = det_crt_batch(minors.reshape(count * (n - 1), n - 2, n - 2))
    return [flat[b * (n - 1) : (b + 1) * (n - 1)] for b in range(count)]


def signed_w(w) -> list[int]:
    """``(-1)**j * w_j`` for j = 2..n."""
    return [wj if j % 2 == 0 else -wj for j, wj in enumerate(w, start=2)]


def minor_from_second_order(M, w, i: int) -> int:
    """Rebuild d_i (i in {1, 2}) as ``sum_j (-1)**j m_{j,3-i} w_j``."""
    if i not in (1, 2):
        raise ValueError("only d_1 and d_2 are expressed through the w_j")
    column = np.asarray(M)[1:, 2 - i]
    return sum(int(m) * sw for m, sw in zip(column, signed_w(w)))
