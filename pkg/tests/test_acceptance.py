"""Exit criteria.  Each test prints one PASS/FAIL line, then asserts it.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from detsquare import arith, experiments as ex
from detsquare.ensemble import XiStream
from detsquare.exactdet import (
    cofactor_expansion,
    det_bareiss,
    det_crt,
    det_mod_p,
    first_row_minors,
    minor_from_second_order,
    second_order_minors,
)
from detsquare.parallel import default_shards

import oracles

pytestmark = pytest.mark.acceptance
SHARDS = default_shards()


@pytest.fixture
def gate(capsys):
    def _gate(label: str, ok: bool, detail: str, elapsed: float, limit: float):
        within = elapsed < limit
        verdict = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\n[{verdict}] {label}: {detail} ({elapsed:.1f}s, limit {limit:g}s)")
        assert ok, detail
        assert within, f"took {elapsed:.1f}s, limit {limit:g}s"

    return _gate


def test_c01_exact_tiny_n(gate):
    law1, law2, law3 = (oracles.det_law(n) for n in (1, 2, 3))
    oracle = [sum(q for x, q in law.items() if arith.is_perfect_square(x)) for law in (law1, law2, law3)]
    t0 = time.perf_counter()
    got = [ex.exact_square_probability(1), ex.exact_square_probability(2)]
    elapsed = time.perf_counter() - t0
    n3 = ex.exact_square_probability(3)
    ok = (
        got == [Fraction(3, 4), Fraction(25, 32)] == oracle[:2]
        and n3 == oracle[2] == ex.EXACT_SQUARE_PROBABILITY_N3
    )
    gate("C1 exact tiny-n", ok, f"n=1 {got[0]}, n=2 {got[1]}, n=3 {n3} (frozen {ex.EXACT_SQUARE_PROBABILITY_N3})", elapsed, 1)


def test_c02_monte_carlo_vs_oracle(gate):
    t0 = time.perf_counter()
    parts, ok = [], True
    for n, exact in ((1, Fraction(3, 4)), (2, Fraction(25, 32))):
        est = ex.square_probability_experiment(n, samples=10**5, seed=0, shards=SHARDS)["p_square"]
        se = math.sqrt(float(exact) * (1 - float(exact)) / 10**5)
        z = (est.value - float(exact)) / se
        ok &= abs(z) < 3
        parts.append(f"n={n} {est.value:.5f} vs {float(exact):.5f} (z={z:+.2f})")
    gate("C2 Monte Carlo vs oracle", ok, "; ".join(parts), time.perf_counter() - t0, 10)


def test_c03_decay_trend(gate):
    t0 = time.perf_counter()
    a = ex.square_probability_experiment(8, samples=10**5, seed=0, shards=SHARDS)["p_square"]
    b = ex.square_probability_experiment(64, samples=10**5, seed=0, shards=SHARDS)["p_square"]
    ok = b.value < a.value and b.ci_high < a.ci_low
    detail = f"n=8 {a.value:.5f} [{a.ci_low:.5f}, {a.ci_high:.5f}], n=64 {b.value:.6f} [{b.ci_low:.6f}, {b.ci_high:.6f}]"
    gate("C3 decay trend", ok, detail, time.perf_counter() - t0, 300)


def test_c04_determinant_engines(gate):
    t0 = time.perf_counter()
    bad = 0
    for n in range(1, 31):
        for M in XiStream(seed=4, block=n).matrices(n, 1000):
            b, c = det_bareiss(M), det_crt(M)
            bad += b != c
            bad += any(det_mod_p(M, p) != b % p for p in (2, 3, 5, 7))
            if n <= 8:
                bad += oracles.naive_det(M) != b
    gate("C4 determinant engines", bad == 0, f"{bad} disagreements over 30 000 matrices", time.perf_counter() - t0, 120)


def test_c05_cofactor_identities(gate):
    t0 = time.perf_counter()
    stream, bad = XiStream(seed=5), 0
    for i in range(1000):
        n = 3 + i % 10
        M = stream.matrices(n, 1)[0]
        d, w = first_row_minors(M), second_order_minors(M)
        bad += cofactor_expansion(M[0], d) != det_bareiss(M)
        bad += minor_from_second_order(M, w, 1) != d[0]
        bad += minor_from_second_order(M, w, 2) != d[1]
    gate("C5 cofactor identities", bad == 0, f"{bad} failures on 1000 matrices, 3 <= n <= 12", time.perf_counter() - t0, 60)


def test_c06_fourier_exhaustive(gate):
    t0 = time.perf_counter()
    rep = ex.fourier_sweep(5, 2)
    vectors = sum(rep[f"n={n}:vectors"].value for n in range(1, 6))
    failures = sum(rep[f"n={n}:failures"].value for n in range(1, 6))
    ok = failures == 0 and rep["n=5:vectors"].value == 3125
    gate("C6 Fourier exhaustive", ok, f"{failures} failures over {vectors} vectors", time.perf_counter() - t0, 60)


def test_c07_isolated_families(gate):
    t0 = time.perf_counter()
    ks = range(2, 8)
    rep = ex.isolated_experiment(list(ks), families=1000, seed=0, shards=SHARDS)
    viol = {k: rep[f"k={k}:bound_violations"].value for k in ks}
    overlap = {k: rep[f"k={k}:ball_overlaps"].value for k in ks}
    ok = all(rep[f"k={k}:families"].value == 1000 for k in ks) and not any(viol.values()) and not any(overlap.values())
    detail = f"mass > 1/k in {sum(viol.values())} families; overlapping radius-1 balls by k: {overlap}"
    gate("C7 2-isolated families", ok, detail, time.perf_counter() - t0, 60)


def test_c08_maples(gate):
    t0 = time.perf_counter()
    mpmath.mp.dps = 30
    ok, parts = True, []
    for p, ref in ((2, 0.7112119), (3, 0.4398739)):
        lim = arith.maples_limit(p, tol=1e-12).value
        oracle = float(1 - mpmath.qp(mpmath.mpf(1) / p, mpmath.mpf(1) / p))
        ok &= abs(lim - ref) <= 1e-6 and abs(lim - oracle) <= 1e-6
    for p in (2, 3, 5):
        rep = ex.maples_experiment(40, p, samples=2 * 10**4, seed=0, shards=SHARDS)
        diff = rep["difference"].value
        ok &= abs(diff) <= 0.02
        parts.append(f"p={p} {rep['p_divides_det'].value:.4f} vs {rep['maples_limit'].value:.7f}")
    gate("C8 Maples law", ok, "; ".join(parts), time.perf_counter() - t0, 180)


def test_c09_mertens(gate):
    t0 = time.perf_counter()
    small = arith.mertens_sum(10)
    ratio = float(arith.mertens_sum(10**6)) / math.log(math.log(10**6))
    worst = max(float(arith.prime_reciprocal_sum(2**l, 2 ** (l + 1))) * l for l in range(4, 20))
    ok = small == Fraction(247, 210) and ratio < arith.MERTENS_LOGLOG_CONSTANT and worst <= arith.DYADIC_CONSTANT
    detail = f"sum(10)={small}, sum(1e6)/loglog={ratio:.4f}, max l*increment={worst:.4f} <= {arith.DYADIC_CONSTANT}"
    gate("C9 Mertens shape", ok, detail, time.perf_counter() - t0, 30)


def test_c10_divisor_statistics(gate):
    t0 = time.perf_counter()
    ns = (6, 10, 14)
    rep = ex.divisor_growth_experiment(list(ns), samples=500, seed=0, shards=SHARDS)
    tau = [rep[f"n={n}:log_tau_over_log2n"].value for n in ns]
    omega = [rep[f"n={n}:omega_over_logn"].value for n in ns]
    failures = sum(rep[f"n={n}:factorization_failures"].value for n in ns)
    ok = max(tau) <= ex.DIVISOR_GROWTH_CONSTANT and max(omega) <= ex.OMEGA_CONSTANT
    detail = (
        f"log tau/(log n)^2 {[round(x, 3) for x in tau]} <= {ex.DIVISOR_GROWTH_CONSTANT}; "
        f"omega/log n {[round(x, 3) for x in omega]} <= {ex.OMEGA_CONSTANT}; {failures} budget failures"
    )
    gate("C10 divisor statistics", ok, detail, time.perf_counter() - t0, 180)


def test_c11_square_suffix(gate):
    t0 = time.perf_counter()
    rep = ex.square_suffix_experiment(8, 3, samples=200, seed=0, shards=SHARDS)
    viol = rep["isolated_mass_violations"].value
    recheck = rep["membership_recheck_failures"].value
    detail = f"{viol} isolated sets above 1/3, {recheck} membership recheck failures, P(isolated)={rep['p_isolated'].value:.3f}"
    gate("C11 square-suffix coupling", viol == 0 and recheck == 0, detail, time.perf_counter() - t0, 120)


def test_c12_deficiency(gate):
    t0 = time.perf_counter()
    primes = (2, 3, 5, 7, 11)
    rep = ex.codim_experiment(20, primes, samples=10**4, seed=0, shards=SHARDS)
    viol = sum(rep[f"p={p}:implication_violations"].value for p in primes)
    checked = sum(rep[f"p={p}:rechecked"].value for p in (2, 3, 5))
    scaled = rep["max_freq_times_p2"].value
    ok = viol == 0 and scaled <= ex.CODIM_CONSTANT
    detail = f"{viol} violations in {checked} rechecked samples (p=2,3,5); max freq*p^2={scaled:.4f} <= {ex.CODIM_CONSTANT}"
    gate("C12 deficiency implication", ok, detail, time.perf_counter() - t0, 180)


def _runs(shards):
    return [
        ex.square_probability_experiment(12, samples=3000, seed=11, shards=shards),
        ex.maples_experiment(20, 3, samples=3000, seed=11, shards=shards),
        ex.codim_experiment(10, (2, 3), samples=3000, seed=11, shards=shards),
        ex.partial_zero_experiment(8, 2, samples=600, seed=11, shards=shards),
        ex.divisor_growth_experiment([8], samples=600, seed=11, shards=shards),
        ex.isolated_experiment([3, 4], families=300, seed=11, shards=shards),
    ]


def test_c13_reproducibility(gate):
    t0 = time.perf_counter()
    first, again, four = _runs(1), _runs(1), _runs(4)
    same = all(a.to_json(timing=False) == b.to_json(timing=False) for a, b in zip(first, again))
    sharded = all(
        [e.to_dict() for e in a.estimates] == [e.to_dict() for e in c.estimates] and a.details == c.details
        for a, c in zip(first, four)
    )
    detail = f"reruns byte-identical: {same}; shards 1 vs 4 identical: {sharded} ({len(first)} experiments)"
    gate("C13 reproducibility", same and sharded, detail, time.perf_counter() - t0, 60)
