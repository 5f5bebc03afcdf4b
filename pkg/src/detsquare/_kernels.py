"""Compiled modular elimination kernels.

Arithmetic is carried in float64 with primes below 2**25, so every product
``a * b + c`` stays below 2**53 and is represented exactly.
"""
import numba
import numpy as np

MAX_KERNEL_PRIME = 1 << 25


@numba.njit(cache=True)
def _reduce(x, pf, rp):
    r = x - np.floor(x * rp) * pf
    if r < 0.0:
        r += pf
    elif r >= pf:
        r -= pf
    return r


@numba.njit(cache=True)
def _inverse(v, p):
    e = p - 2
    base = v % p
    inv = 1
    while e:
        if e & 1:
            inv = inv * base % p
        base = base * base % p
        e >>= 1
    return inv


@numba.njit(cache=True)
def _load(src, a, p):
    rows, cols = src.shape
    for i in range(rows):
        for j in range(cols):
            a[i, j] = float(np.int64(src[i, j]) % p)


@numba.njit(cache=True)
def det_mod_p_batch(mats, p):
    """Determinants of a stack of square integer matrices modulo ``p``."""
    count, n, _ = mats.shape
    out = np.empty(count, np.int64)
    a = np.empty((n, n), np.float64)
    pf = float(p)
    rp = 1.0 / pf
    for b in range(count):
        _load(mats[b], a, p)
        det = 1
        for c in range(n):
            piv = -1
            for r in range(c, n):
                if a[r, c] != 0.0:
                    piv = r
                    break
            if piv < 0:
                det = 0
                break
            if piv != c:
                for j in range(c, n):
                    t = a[c, j]
                    a[c, j] = a[piv, j]
                    a[piv, j] = t
                det = (p - det) % p
            pv = np.int64(a[c, c])
            det = det * pv % p
            inv = _inverse(pv, p)
            for r in range(c + 1, n):
                fr = np.int64(a[r, c])
                if fr == 0:
                    continue
                f = float((p - fr * inv % p) % p)
                for j in range(c + 1, n):
                    a[r, j] = _reduce(a[r, j] + f * a[c, j], pf, rp)
        out[b] = det
    return out


@numba.njit(cache=True)
def rank_mod_p_batch(mats, p):
    """Ranks over F_p of a stack of (rows x cols) integer matrices."""
    count, rows, cols = mats.shape
    out = np.empty(count, np.int64)
    a = np.empty((rows, cols), np.float64)
    pf = float(p)
    rp = 1.0 / pf
    for b in range(count):
        _load(mats[b], a, p)
        rank = 0
        for c in range(cols):
            if rank == rows:
                break
            piv = -1
            for r in range(rank, rows):
                if a[r, c] != 0.0:
                    piv = r
                    break
            if piv < 0:
                continue
            if piv != rank:
                for j in range(c, cols):
                    t = a[rank, j]
                    a[rank, j] = a[piv, j]
                    a[piv, j] = t
            inv = _inverse(np.int64(a[rank, c]), p)
            for r in range(rank + 1, rows):
                fr = np.int64(a[r, c])
                if fr == 0:
                    continue
                f = float((p - fr * inv % p) % p)
                for j in range(c + 1, cols):
                    a[r, j] = _reduce(a[r, j] + f * a[rank, j], pf, rp)
                a[r, c] = 0.0
            rank += 1
        out[b] = rank
    return out
