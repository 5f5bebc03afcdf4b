"""Exact enumerations and Monte Carlo experiments on random {0, +-1} matrices.

Each Monte Carlo experiment is a per-block function (module level, so shards
can run it in worker processes) plus a driver that reduces block results in
block order and builds an :class:`ExperimentReport`.

Conventions:

* det = 0 counts as a square (0 = 0**2).
* Divisor statistics skip zero values and report their fraction separately.
* A zero minor has infinitely many divisors, so it counts as a tail exceedance
  in :func:`divisor_tail_experiment`; the nonzero-only tail is reported too.
"""
from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import dist
from .arith import (
    DEFAULT_RHO_BUDGET,
    divisor_count,
    factorize,
    is_perfect_square,
    is_prime,
    log_divisor_count,
    maples_limit,
)
from .ensemble import XiStream, weighted_pattern_array
from .errors import EnumerationCapError, FactorizationBudgetError
from .exactdet import (
    cofactor_expansion,
    crt_primes,
    crt_symmetric,
    det_bareiss,
    det_bound,
    det_crt_batch,
    det_mod_p,
    det_mod_p_batch,
    first_row_minors_batch,
    second_order_minors_batch,
    signed_w,
    trailing_deficiency_batch,
)
from .parallel import run_blocks
from .report import (
    Estimate,
    ExperimentReport,
    Provenance,
    exact_estimate,
    mean_estimate,
    point,
    proportion,
)

EXACT_MAX_N = 4

# n = 3 value from the brute-force enumeration over all 3**9 matrices
EXACT_SQUARE_PROBABILITY_N3 = Fraction(193, 256)

# mean log tau(det | det != 0) / (log n)**2 at n = 6, 10, 14 (seed 0, 500 samples):
# 0.197, 0.275, 0.291; the 16 (tau1, tau2) combinations at n = 10 reach 0.343
DIVISOR_GROWTH_CONSTANT = 1.0
# mean distinct-prime count / log n at the same points: 0.457, 0.722, 0.886
OMEGA_CONSTANT = 2.0
# frequency(deficiency >= 2) * p**2 at n = 20, p = 2..11 (seed 0, 10**4 samples): max 0.040 at p = 2
CODIM_CONSTANT = 1.0


def _report(name, params, estimates, seed, shards, samples, started, details=None):
    return ExperimentReport(
        experiment=name,
        params=params,
        estimates=estimates,
        provenance=Provenance(seed, shards, samples),
        details=details or {},
        duration_s=round(time.perf_counter() - started, 3),
    )


# --- exact enumeration at tiny n --------------------------------------------------

def _small_dets(a: np.ndarray) -> np.ndarray:
    """Vectorised determinants of a (N, k, k) stack for k <= 3."""
    k = a.shape[1]
    a = a.astype(np.int64)
    if k == 0:
        return np.ones(len(a), dtype=np.int64)
    if k == 1:
        return a[:, 0, 0]
    if k == 2:
        return a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
    if k == 3:
        return (
            a[:, 0, 0] * (a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1])
            - a[:, 0, 1] * (a[:, 1, 0] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 0])
            + a[:, 0, 2] * (a[:, 1, 0] * a[:, 2, 1] - a[:, 1, 1] * a[:, 2, 0])
        )
    raise ValueError("only k <= 3 is supported")


def exact_det_distribution(n: int) -> dict[int, Fraction]:
    """Exact law of det M for n <= 4.

    Rows 2..n are enumerated with their weights and grouped by the signed
    first-row cofactors; the first row then contributes an exact signed-sum
    law for each group.
    """
    if not 1 <= n <= EXACT_MAX_N:
        raise EnumerationCapError(f"exact enumeration supports 1 <= n <= {EXACT_MAX_N}, got {n}")
    patterns, nums = weighted_pattern_array(n * (n - 1))
    rows = patterns.reshape(len(patterns), n - 1, n)
    cof = np.stack(
        [(-1) ** i * _small_dets(np.delete(rows, i, axis=2)) for i in range(n)], axis=1
    )
    groups, inverse = np.unique(cof, axis=0, return_inverse=True)
    weights = np.zeros(len(groups), dtype=np.int64)
    np.add.at(weights, inverse.ravel(), nums)
    totals: Counter = Counter()
    for d, w in zip(groups.tolist(), weights.tolist()):
        for x, c in dist.exact_sum_distribution(d).counts.items():
            totals[x] += c * w
    den = 4 ** (n * n)
    return {x: Fraction(c, den) for x, c in sorted(totals.items()) if c}


def exact_square_probability(n: int) -> Fraction:
    return sum((p for x, p in exact_det_distribution(n).items() if is_perfect_square(x)), Fraction(0))


# --- determinant classification in bulk ---------------------------------------------

def _quadratic_ok(r: int, p: int) -> bool:
    return r == 0 or pow(r, (p - 1) // 2, p) == 1


def classify_squares(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(is_square, is_zero) for each matrix of a stack.

    Residues are taken one CRT prime at a time; a nonzero quadratic
    non-residue rules out a square.  Survivors of every prime get their exact
    determinant by CRT and a perfect-square test.
    """
    count, n = len(mats), mats.shape[1]
    primes = crt_primes(n)
    residues = np.zeros((len(primes), count), dtype=np.int64)
    alive = np.arange(count)
    for t, p in enumerate(primes):
        r = det_mod_p_batch(mats[alive], p)
        residues[t, alive] = r
        alive = np.array([i for i, x in zip(alive.tolist(), r.tolist()) if _quadratic_ok(x, p)], dtype=np.int64)
        if not alive.size:
            break
    squares = np.zeros(count, dtype=bool)
    zeros = np.zeros(count, dtype=bool)
    for i in alive.tolist():
        d = crt_symmetric(residues[:, i].tolist(), primes)
        squares[i] = is_perfect_square(d)
        zeros[i] = d == 0
    return squares, zeros


def singular_mask(mats: np.ndarray) -> np.ndarray:
    """Exact det == 0 test; stops at the first prime with a nonzero residue."""
    primes = crt_primes(mats.shape[1])
    alive = np.arange(len(mats))
    for p in primes:
        r = det_mod_p_batch(mats[alive], p)
        alive = alive[r == 0]
        if not alive.size:
            break
    mask = np.zeros(len(mats), dtype=bool)
    mask[alive] = True
    return mask


# --- square probability -------------------------------------------------------------

def _square_block(stream: XiStream, count: int, n: int):
    squares, zeros = classify_squares(stream.matrices(n, count))
    return count, int(squares.sum()), int(zeros.sum())


def square_probability_experiment(n: int, samples: int = 10**4, seed: int = 0, shards: int = 1) -> ExperimentReport:
    """Monte Carlo estimate of P(det M is a perfect square)."""
    started = time.perf_counter()
    blocks = run_blocks(_square_block, samples, seed, shards, n=n)
    total = sum(b[0] for b in blocks)
    squares = sum(b[1] for b in blocks)
    zeros = sum(b[2] for b in blocks)
    exact = exact_square_probability(n) if n <= 3 else None
    estimates = [proportion("p_square", squares, total, exact), proportion("p_det_zero", zeros, total)]
    return _report("square-prob", {"n": n}, estimates, seed, shards, samples, started)


def _loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def square_decay_experiment(n_list: Sequence[int], samples: int = 10**4, seed: int = 0, shards: int = 1) -> ExperimentReport:
    """Square probability over several n plus a fitted power-law exponent."""
    started = time.perf_counter()
    estimates, pts = [], []
    for n in n_list:
        sub = square_probability_experiment(n, samples, seed, shards)
        for e in sub.estimates:
            estimates.append(Estimate(f"n={n}:{e.name}", e.value, e.ci_low, e.ci_high, e.exact))
        if sub["p_square"].value > 0:
            pts.append((n, sub["p_square"].value))
    if len(pts) >= 2:
        xs, ys = zip(*pts)
        estimates.append(point("fitted_exponent", _loglog_slope(xs, ys)))
    return _report("square-prob", {"n_list": list(n_list)}, estimates, seed, shards, samples, started)


# --- singularity / mode -------------------------------------------------------------

def _zero_block(stream: XiStream, count: int, n: int):
    return count, int(singular_mask(stream.matrices(n, count)).sum())


def fit_decay_exponent(points: Sequence[tuple[int, float]]) -> float:
    """delta such that P ~ 2**(-delta n): least squares on log2 P over the top half of n."""
    pts = sorted((n, p) for n, p in points if p > 0)
    if not pts:
        return float("nan")
    top = pts[len(pts) // 2 :] if len(pts) > 2 else pts
    if len(top) == 1:
        n, p = top[0]
        return -math.log2(p) / n
    xs, ys = zip(*top)
    return -float(np.polyfit(xs, np.log2(ys), 1)[0])


def mode_decay_experiment(n_list: Sequence[int], samples: int = 10**4, seed: int = 0, shards: int = 1) -> ExperimentReport:
    """P(det M = 0) per n: exact with the full mode for n <= 4, sampled above."""
    started = time.perf_counter()
    estimates, pts, details = [], [], {}
    for n in n_list:
        if n <= EXACT_MAX_N:
            law = exact_det_distribution(n)
            top = max(law.values())
            estimates.append(exact_estimate(f"n={n}:p_det_zero", law.get(0, Fraction(0))))
            estimates.append(exact_estimate(f"n={n}:max_point_probability", top))
            details[f"n={n}:modes"] = [x for x, p in law.items() if p == top]
            pts.append((n, float(law.get(0, 0))))
        else:
            blocks = run_blocks(_zero_block, samples, seed, shards, n=n)
            total, zeros = sum(b[0] for b in blocks), sum(b[1] for b in blocks)
            est = proportion(f"n={n}:p_det_zero", zeros, total)
            estimates.append(est)
            pts.append((n, est.value))
    estimates.append(point("delta_hat", fit_decay_exponent(pts)))
    return _report("mode-decay", {"n_list": list(n_list)}, estimates, seed, shards, samples, started, details)


# --- Maples' law ----------------------------------------------------------------------

def _mod_p_zero_block(stream: XiStream, count: int, n: int, p: int):
    mats = stream.matrices(n, count)
    if p < (1 << 25):
        r = det_mod_p_batch(mats, p)
    else:
        r = np.array([det_mod_p(m, p) for m in mats])
    return count, int((r == 0).sum())


def maples_experiment(n: int, p: int, samples: int = 10**4, seed: int = 0, shards: int = 1, tol: float = 1e-12) -> ExperimentReport:
    """Empirical P(p | det M) against the limit 1 - prod(1 - p**-k)."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    started = time.perf_counter()
    blocks = run_blocks(_mod_p_zero_block, samples, seed, shards, n=n, p=p)
    total, hits = sum(b[0] for b in blocks), sum(b[1] for b in blocks)
    limit = maples_limit(p, tol)
    est = proportion("p_divides_det", hits, total)
    estimates = [
        est,
        Estimate("maples_limit", limit.value, limit.value - limit.truncation_error, limit.value + limit.truncation_error),
        point("difference", est.value - limit.value),
    ]
    return _report("maples", {"n": n, "p": p}, estimates, seed, shards, samples, started)


# --- divisor statistics -----------------------------------------------------------------

class _Moments:
    """Running count / sum / sum of squares, merged in block order."""

    def __init__(self):
        self.count, self.total, self.total_sq = 0, 0.0, 0.0

    def add(self, x: float):
        self.count += 1
        self.total += x
        self.total_sq += x * x

    def merge(self, other: "_Moments"):
        self.count += other.count
        self.total += other.total
        self.total_sq += other.total_sq

    def estimate(self, name: str) -> Estimate:
        return mean_estimate(name, self.total, self.total_sq, self.count)


def _divisor_stats(values, budget):
    """Moments of log tau and omega over nonzero values, plus zero / failure counts."""
    log_tau, omega = _Moments(), _Moments()
    zeros = failures = 0
    for v in values:
        if v == 0:
            zeros += 1
            continue
        try:
            f = factorize(v, budget)
        except FactorizationBudgetError:
            failures += 1
            continue
        log_tau.add(log_divisor_count(f))
        omega.add(len(f.factors))
    return zeros, failures, log_tau, omega


def _divisor_block(stream: XiStream, count: int, n: int, budget: int):
    return (count,) + _divisor_stats(det_crt_batch(stream.matrices(n, count)), budget)


def _reduce_divisor_blocks(blocks):
    total = zeros = failures = 0
    log_tau, omega = _Moments(), _Moments()
    for count, z, f, lt, om in blocks:
        total += count
        zeros += z
        failures += f
        log_tau.merge(lt)
        omega.merge(om)
    return total, zeros, failures, log_tau, omega


def divisor_growth_experiment(
    n_list: Sequence[int], samples: int = 10**4, seed: int = 0, shards: int = 1, budget: int = DEFAULT_RHO_BUDGET
) -> ExperimentReport:
    """Mean log tau(det M) and mean distinct-prime count over nonzero determinants."""
    started = time.perf_counter()
    estimates = []
    for n in n_list:
        blocks = run_blocks(_divisor_block, samples, seed, shards, n=n, budget=budget)
        total, zeros, failures, log_tau, omega = _reduce_divisor_blocks(blocks)
        mlt, mom = log_tau.estimate(f"n={n}:mean_log_tau"), omega.estimate(f"n={n}:mean_omega")
        estimates += [proportion(f"n={n}:zero_fraction", zeros, total), mlt, mom]
        if n >= 2:
            scale = math.log(n)
            estimates.append(point(f"n={n}:log_tau_over_log2n", mlt.value / scale**2))
            estimates.append(point(f"n={n}:omega_over_logn", mom.value / scale))
        estimates.append(point(f"n={n}:factorization_failures", failures))
    return _report("divisors", {"n_list": list(n_list), "budget": budget}, estimates, seed, shards, samples, started)


TAU_VALUES = (1, -1, 2, -2)


def _pair_block(stream: XiStream, count: int, n: int, combos, budget: int):
    minors = first_row_minors_batch(stream.matrices(n, count), columns=(0, 1))
    out = []
    for t1, t2 in combos:
        values = [t1 * d1 + t2 * d2 for d1, d2 in minors]
        out.append((count,) + _divisor_stats(values, budget))
    return out


def pair_divisor_experiment(
    n: int,
    samples: int = 10**4,
    tau1: int = 1,
    tau2: int = 1,
    seed: int = 0,
    shards: int = 1,
    all_combos: bool = False,
    budget: int = DEFAULT_RHO_BUDGET,
) -> ExperimentReport:
    """log tau of tau1*d_1 + tau2*d_2 over sampled matrices.

    With ``all_combos`` every (tau1, tau2) in {+-1, +-2}**2 is evaluated on
    the same matrices.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    combos = [(a, b) for a in TAU_VALUES for b in TAU_VALUES] if all_combos else [(tau1, tau2)]
    for t1, t2 in combos:
        if t1 not in TAU_VALUES or t2 not in TAU_VALUES:
            raise ValueError(f"tau values must lie in {{+-1, +-2}}, got ({t1}, {t2})")
    started = time.perf_counter()
    blocks = run_blocks(_pair_block, samples, seed, shards, n=n, combos=combos, budget=budget)
    estimates = []
    for c, (t1, t2) in enumerate(combos):
        total, zeros, failures, log_tau, omega = _reduce_divisor_blocks(b[c] for b in blocks)
        tag = f"tau=({t1},{t2})"
        mlt = log_tau.estimate(f"{tag}:mean_log_tau")
        estimates += [
            proportion(f"{tag}:zero_fraction", zeros, total),
            mlt,
            omega.estimate(f"{tag}:mean_omega"),
            point(f"{tag}:log_tau_over_log2n", mlt.value / math.log(n) ** 2),
            point(f"{tag}:factorization_failures", failures),
        ]
    params = {"n": n, "combos": [list(c) for c in combos], "budget": budget}
    return _report("pair-divisors", params, estimates, seed, shards, samples, started)


def _tail_block(stream: XiStream, count: int, n: int, k: int, budget: int):
    threshold = math.exp(math.sqrt(n))
    minors = first_row_minors_batch(stream.matrices(n, count), columns=tuple(range(n - k, n)))
    tail = tail_nonzero = zero_any = failures = 0
    log_tau = _Moments()
    for ds in minors:
        has_zero = any(d == 0 for d in ds)
        exceed = False
        for d in ds:
            if d == 0:
                continue
            try:
                f = factorize(2 * d, budget)
            except FactorizationBudgetError:
                failures += 1
                continue
            log_tau.add(log_divisor_count(f))
            exceed |= divisor_count(f) > threshold
        tail += exceed or has_zero
        tail_nonzero += exceed
        zero_any += has_zero
    return count, tail, tail_nonzero, zero_any, failures, log_tau


def divisor_tail_experiment(
    n: int, k: int, samples: int = 10**4, seed: int = 0, shards: int = 1, budget: int = DEFAULT_RHO_BUDGET
) -> ExperimentReport:
    """P(some j in n-k+1..n has tau(2 d_j) > e**sqrt(n)), with a Markov reference.

    The reference ``k * E[log tau(2 d_j)] / sqrt(n)`` is the Markov bound with
    the constant C = E[log tau] / (log n)**2 fitted from the same samples.
    """
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    started = time.perf_counter()
    blocks = run_blocks(_tail_block, samples, seed, shards, n=n, k=k, budget=budget)
    total = sum(b[0] for b in blocks)
    log_tau = _Moments()
    for b in blocks:
        log_tau.merge(b[5])
    mlt = log_tau.estimate("mean_log_tau_2d")
    c_hat = mlt.value / math.log(n) ** 2 if log_tau.count else float("nan")
    estimates = [
        proportion("tail", sum(b[1] for b in blocks), total),
        proportion("tail_nonzero", sum(b[2] for b in blocks), total),
        proportion("zero_minor_fraction", sum(b[3] for b in blocks), total),
        mlt,
        point("c_hat", c_hat),
        point("markov_reference", c_hat * k * math.log(n) ** 2 / math.sqrt(n)),
        point("threshold", math.exp(math.sqrt(n))),
        point("factorization_failures", sum(b[4] for b in blocks)),
    ]
    return _report("divisor-tail", {"n": n, "k": k, "budget": budget}, estimates, seed, shards, samples, started)


# --- partial sums ------------------------------------------------------------------------

PARTIAL_ZERO_MAX_N = 14


def _partial_block(stream: XiStream, count: int, n: int, k: int):
    mats = stream.matrices(n, count)
    inner, zeros = [], 0
    for M, d in zip(mats, first_row_minors_batch(mats)):
        zeros += cofactor_expansion(M[0], d) == 0
        inner.append(dist.point_probability(d[: n - k], 0))
    return zeros, inner


def partial_zero_experiment(
    n: int, k: int, samples: int = 10**4, seed: int = 0, shards: int = 1, delta: Optional[float] = None
) -> ExperimentReport:
    """Per matrix, the exact P(sum_{i<=n-k} xi_i d_i = 0) for fresh xi.

    ``delta`` defaults to the single-point fit -log2(P(det M = 0)) / n from the
    sampled matrices themselves.
    """
    if n > PARTIAL_ZERO_MAX_N:
        raise ValueError(f"exact inner probabilities need n <= {PARTIAL_ZERO_MAX_N}")
    if not 0 <= k < n:
        raise ValueError("need 0 <= k < n")
    started = time.perf_counter()
    blocks = run_blocks(_partial_block, samples, seed, shards, n=n, k=k)
    inner = [q for _, qs in blocks for q in qs]
    total, zeros = len(inner), sum(z for z, _ in blocks)
    p_zero = proportion("p_det_zero", zeros, total)
    delta_hat = delta if delta is not None else (-math.log2(p_zero.value) / n if zeros else float("nan"))
    threshold = 2.0 ** (-n * delta_hat / 2) if not math.isnan(delta_hat) else float("nan")
    floor = Fraction(1, 2 ** (n - k))
    mean = sum(inner, Fraction(0)) / total
    as_float = [float(q) for q in inner]
    mom = _Moments()
    for x in as_float:
        mom.add(x)
    m = mom.estimate("mean_inner_probability")
    m.exact = mean
    ordered = sorted(inner)
    estimates = [
        m,
        p_zero,
        point("delta_hat", delta_hat),
        point("threshold", threshold),
        proportion("event_A_frequency", sum(x > threshold for x in as_float), total),
        exact_estimate("median_inner_probability", _nearest_rank(ordered, 0.5)),
        exact_estimate("p90_inner_probability", _nearest_rank(ordered, 0.9)),
        point("below_all_zero_weight", sum(q < floor for q in inner)),
    ]
    params = {"n": n, "k": k, "delta": delta}
    return _report("partial-zero", params, estimates, seed, shards, samples, started)


def _nearest_rank(ordered, q: float):
    return ordered[max(0, math.ceil(q * len(ordered)) - 1)]


# --- square-producing suffix sets -----------------------------------------------------------

@dataclass(frozen=True)
class SquareSuffixSet:
    k: int
    prefix: tuple
    members: tuple
    is_2_isolated: bool
    mass: Fraction

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "prefix": list(self.prefix),
            "members": [list(v) for v in self.members],
            "is_2_isolated": self.is_2_isolated,
            "mass": f"{self.mass.numerator}/{self.mass.denominator}",
        }


def square_suffix_set(M: np.ndarray, minors, k: int, patterns=None, nums=None) -> SquareSuffixSet:
    """Suffixes of the first row (last k entries) whose completed det is a square."""
    n = M.shape[0]
    if patterns is None:
        patterns, nums = weighted_pattern_array(k)
    signed = [d if i % 2 == 0 else -d for i, d in enumerate(minors)]
    base = sum(int(m) * s for m, s in zip(M[0, : n - k], signed[: n - k]))
    tail = signed[n - k :]
    if det_bound(n) < 2**50:
        values = base + patterns.astype(np.int64) @ np.array(tail, dtype=np.int64)
        root = np.rint(np.sqrt(np.maximum(values, 0).astype(np.float64))).astype(np.int64)
        hits = np.flatnonzero((values >= 0) & (root * root == values))
    else:
        values = [base + sum(int(s) * t for s, t in zip(row, tail)) for row in patterns.tolist()]
        hits = np.array([i for i, v in enumerate(values) if is_perfect_square(v)], dtype=np.int64)
    members = tuple(tuple(int(x) for x in patterns[i]) for i in hits)
    mass = Fraction(int(nums[hits].sum()), 4**k)
    return SquareSuffixSet(k, tuple(int(x) for x in M[0, : n - k]), members, dist.is_2_isolated(members), mass)


def _suffix_block(stream: XiStream, count: int, n: int, k: int, exemplars: int):
    patterns, nums = weighted_pattern_array(k)
    mats = stream.matrices(n, count)
    isolated = violations = recheck_failures = 0
    masses, sizes, kept = [], Counter(), []
    bound = Fraction(1, k)
    for M, minors in zip(mats, first_row_minors_batch(mats)):
        s = square_suffix_set(M, minors, k, patterns, nums)
        for v in s.members:
            completed = M.copy()
            completed[0, n - k :] = v
            recheck_failures += not is_perfect_square(det_bareiss(completed))
        isolated += s.is_2_isolated
        violations += s.is_2_isolated and s.mass > bound
        masses.append(s.mass)
        sizes[len(s.members)] += 1
        if len(kept) < exemplars:
            kept.append(s.to_dict())
    return count, isolated, violations, recheck_failures, masses, sizes, kept


def square_suffix_experiment(
    n: int, k: int, samples: int = 10**3, seed: int = 0, shards: int = 1, exemplars: int = 5
) -> ExperimentReport:
    """Square-producing suffix sets of the first row and their 2-isolation."""
    if not 1 <= k <= 10 or k >= n:
        raise ValueError("need 1 <= k <= 10 and k < n")
    started = time.perf_counter()
    blocks = run_blocks(_suffix_block, samples, seed, shards, n=n, k=k, exemplars=exemplars)
    total = sum(b[0] for b in blocks)
    isolated = sum(b[1] for b in blocks)
    masses = [m for b in blocks for m in b[4]]
    sizes = sum((b[5] for b in blocks), Counter())
    kept = [e for b in blocks for e in b[6]][:exemplars]
    mom = _Moments()
    for m in masses:
        mom.add(float(m))
    mean_mass = mom.estimate("mean_mass")
    mean_mass.exact = sum(masses, Fraction(0)) / total
    estimates = [
        proportion("p_isolated", isolated, total),
        proportion("p_not_isolated", total - isolated, total),
        mean_mass,
        point("mean_size", sum(s * c for s, c in sizes.items()) / total),
        point("isolated_mass_violations", sum(b[2] for b in blocks)),
        point("membership_recheck_failures", sum(b[3] for b in blocks)),
        exact_estimate("bound", Fraction(1, k)),
    ]
    details = {"size_histogram": {str(s): c for s, c in sorted(sizes.items())}, "exemplars": kept}
    return _report("square-suffix", {"n": n, "k": k}, estimates, seed, shards, samples, started, details)


# --- rank deficiency over F_p -------------------------------------------------------------

def _codim_block(stream: XiStream, count: int, n: int, primes, k: int):
    mats = stream.matrices(n, count)
    out = []
    for p in primes:
        deficiency = trailing_deficiency_batch(mats, p, k)
        flagged = mats[deficiency >= 2]
        violations = 0
        if len(flagged):
            for col in (0, 1):
                minors = np.delete(np.delete(flagged, 0, axis=1), col, axis=2)
                violations += int((det_mod_p_batch(minors, p) != 0).sum())
        out.append((count, int((deficiency == 1).sum()), int((deficiency >= 2).sum()), len(flagged), violations))
    return out


def codim_experiment(
    n: int, primes: Sequence[int] = (2, 3, 5, 7, 11), samples: int = 10**4, seed: int = 0, shards: int = 1, k: int = 3
) -> ExperimentReport:
    """Frequency of rank deficiency >= 2 of columns k+1..n (rows 2..n) over F_p.

    Every flagged sample is rechecked for p | d_1 and p | d_2.
    """
    if n < k + 1:
        raise ValueError("need n >= k + 1")
    for p in primes:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
    started = time.perf_counter()
    blocks = run_blocks(_codim_block, samples, seed, shards, n=n, primes=tuple(primes), k=k)
    estimates, scaled = [], []
    for i, p in enumerate(primes):
        rows = [b[i] for b in blocks]
        total = sum(r[0] for r in rows)
        est = proportion(f"p={p}:freq_deficiency_ge2", sum(r[2] for r in rows), total)
        scaled.append(est.value * p * p)
        estimates += [
            proportion(f"p={p}:freq_deficiency_1", sum(r[1] for r in rows), total),
            est,
            point(f"p={p}:freq_times_p2", est.value * p * p),
            point(f"p={p}:rechecked", sum(r[3] for r in rows)),
            point(f"p={p}:implication_violations", sum(r[4] for r in rows)),
        ]
    estimates.append(point("max_freq_times_p2", max(scaled)))
    return _report("codim", {"n": n, "primes": list(primes), "k": k}, estimates, seed, shards, samples, started)


# --- equidistribution mod p ---------------------------------------------------------------

def _equidist_block(stream: XiStream, count: int, n: int, p: int, k: int):
    mats = stream.matrices(n, count)
    deficiency = trailing_deficiency_batch(mats, p, k)
    out = []
    for w, dfc in zip(second_order_minors_batch(mats), deficiency.tolist()):
        law = dist.exact_sum_distribution_mod_p(signed_w(w), p)
        degenerate = all(x % p == 0 for x in w)
        out.append((min(dfc, 2), law.sup_deviation_from_uniform(), law.total() == 1, degenerate))
    return out


def equidist_experiment(
    n: int, p: int, samples: int = 10**3, seed: int = 0, shards: int = 1, k: int = 3
) -> ExperimentReport:
    """Sup distance from uniform of sum_j (-1)**j xi_j w_j over F_p, per matrix.

    Results are stratified by the trailing-column deficiency (columns k+1..n).
    ``w_all_zero_fraction`` counts matrices whose w_j all vanish mod p, where
    the law is a point mass at 0.
    """
    if n < 4:
        raise ValueError("need n >= 4")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    started = time.perf_counter()
    rows = [r for b in run_blocks(_equidist_block, samples, seed, shards, n=n, p=p, k=k) for r in b]
    estimates = [
        point("normalization_failures", sum(not r[2] for r in rows)),
        proportion("w_all_zero_fraction", sum(r[3] for r in rows), len(rows)),
    ]
    strata = [("all", rows)] + [(f"deficiency={lab}", [r for r in rows if r[0] == s]) for s, lab in ((0, "0"), (1, "1"), (2, "ge2"))]
    for label, group in strata:
        if label != "all":
            estimates.append(proportion(f"{label}:fraction", len(group), len(rows)))
        if not group:
            continue
        devs = sorted(r[1] for r in group)
        estimates.append(exact_estimate(f"{label}:median_sup_deviation", _nearest_rank(devs, 0.5)))
        estimates.append(exact_estimate(f"{label}:p90_sup_deviation", _nearest_rank(devs, 0.9)))
    return _report("equidist", {"n": n, "p": p, "k": k}, estimates, seed, shards, samples, started)


# --- exact sweeps -----------------------------------------------------------------------------

def fourier_sweep(n_max: int = 5, max_abs: int = 2) -> ExperimentReport:
    """Check that the signed-sum law peaks at 0 for every a in [-max_abs, max_abs]^n, n <= n_max."""
    started = time.perf_counter()
    estimates, failures = [], []
    for n in range(1, n_max + 1):
        vectors = dist.all_vectors(n, max_abs)
        bad = [v.tolist() for v in vectors if not dist.check_fourier_lemma(v).holds]
        failures += bad
        estimates += [point(f"n={n}:vectors", len(vectors)), point(f"n={n}:failures", len(bad))]
    params = {"n_max": n_max, "max_abs": max_abs}
    return _report("fourier-check", params, estimates, None, None, None, started, {"failures": failures[:20]})


def fourier_check_vector(a: Sequence[int]) -> ExperimentReport:
    started = time.perf_counter()
    check = dist.check_fourier_lemma(a)
    estimates = [
        exact_estimate("max_probability", check.max_probability),
        exact_estimate("zero_probability", check.zero_probability),
        point("holds", int(check.holds)),
    ]
    return _report("fourier-check", {"a": list(map(int, a))}, estimates, None, None, None, started)


def _isolated_block(stream: XiStream, count: int, k: int, target_size: int):
    out = []
    for _ in range(count):
        fam = dist.random_2_isolated_family(k, target_size, stream)
        check = dist.verify_2_isolated(fam)
        out.append((check.mass, check.holds, dist.balls_disjoint(fam), len(fam.members)))
    return out


def isolated_experiment(
    k_list: Sequence[int], families: int = 1000, seed: int = 0, shards: int = 1, target_size: Optional[int] = None
) -> ExperimentReport:
    """Random greedy 2-isolated families: exact mass against 1/k, and ball disjointness.

    ``target_size`` defaults to 3**k // (2k + 1) + 2, a little above the
    sphere-packing limit so the greedy search runs until it stalls.
    """
    started = time.perf_counter()
    estimates = []
    for k in k_list:
        size = target_size if target_size is not None else 3**k // (2 * k + 1) + 2
        rows = [r for b in run_blocks(_isolated_block, families, seed, shards, k=k, target_size=size) for r in b]
        estimates += [
            point(f"k={k}:families", len(rows)),
            point(f"k={k}:bound_violations", sum(not r[1] for r in rows)),
            point(f"k={k}:ball_overlaps", sum(not r[2] for r in rows)),
            exact_estimate(f"k={k}:max_mass", max(r[0] for r in rows)),
            exact_estimate(f"k={k}:bound", Fraction(1, k)),
            point(f"k={k}:mean_size", sum(r[3] for r in rows) / len(rows)),
        ]
    params = {"k_list": list(k_list), "target_size": target_size}
    return _report("isolated-check", params, estimates, seed, shards, families, started)
