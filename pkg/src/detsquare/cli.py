"""Command-line front end.

Every subcommand emits one report as JSON (default) or CSV, to stdout or
``--out``.  Exit status: 0 on success, 2 on argument or input errors, 3 when
an enumeration, DP or factorization budget is exceeded.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, arith, experiments
from .errors import ResourceCapError
from .exactdet import det
from .parallel import SHARDS_ENV, default_shards
from .report import ExperimentReport, Provenance, exact_estimate, point

EXIT_USAGE = 2
EXIT_RESOURCE = 3


class MatrixFileError(ValueError):
    pass


def read_matrix_file(path) -> np.ndarray:
    """Parse ``n`` on the first line, then n rows of n entries from {-1, 0, 1}."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].strip():
        raise MatrixFileError(f"{path}:1: expected the matrix dimension")
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise MatrixFileError(f"{path}:1: dimension {lines[0].strip()!r} is not an integer") from None
    if n < 1:
        raise MatrixFileError(f"{path}:1: dimension must be positive, got {n}")
    rows = [line for line in lines[1:]]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != n:
        raise MatrixFileError(f"{path}: expected {n} matrix rows, found {len(rows)}")
    M = np.zeros((n, n), dtype=np.int8)
    for i, line in enumerate(rows):
        tokens = line.split()
        if len(tokens) != n:
            raise MatrixFileError(f"{path}:{i + 2}: expected {n} entries, found {len(tokens)}")
        for j, tok in enumerate(tokens):
            if tok not in ("-1", "0", "1"):
                raise MatrixFileError(f"{path}:{i + 2}:{j + 1}: entry {tok!r} is not in {{-1, 0, 1}}")
            M[i, j] = int(tok)
    return M


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}") from None


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detsquare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", type=Path, help="write the report here instead of stdout")
    common.add_argument("--no-timing", action="store_true", help="omit duration_s from JSON output")

    mc = argparse.ArgumentParser(add_help=False, parents=[common])
    mc.add_argument("--samples", type=_positive, default=10**4)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument(
        "--shards", type=_positive, default=None, help=f"worker processes (default: CPU count, or ${SHARDS_ENV})"
    )

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("square-prob", parents=[mc], help="Monte Carlo P(det M is a square)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=_positive)
    g.add_argument("--n-list", type=_int_list, help="several n; adds a fitted power-law exponent")

    p = sub.add_parser("exact-square-prob", parents=[common], help="exact P(det M is a square), n <= 4")
    p.add_argument("--n", type=_positive, required=True)

    p = sub.add_parser("mode-decay", parents=[mc], help="P(det M = 0) by n, exact for n <= 4")
    p.add_argument("--n-list", type=_int_list, required=True)

    p = sub.add_parser("maples", parents=[mc], help="empirical P(p | det M) against the limit law")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=1e-12)

    p = sub.add_parser("divisors", parents=[mc], help="mean log tau(det M) by n")
    p.add_argument("--n-list", type=_int_list, required=True)

    p = sub.add_parser("pair-divisors", parents=[mc], help="log tau(tau1 d_1 + tau2 d_2)")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--tau1", type=int, default=1)
    p.add_argument("--tau2", type=int, default=1)
    p.add_argument("--all-combos", action="store_true", help="all 16 (tau1, tau2) pairs")

    p = sub.add_parser("divisor-tail", parents=[mc], help="P(some tau(2 d_j) > e^sqrt(n))")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)

    p = sub.add_parser("partial-zero", parents=[mc], help="exact inner P(partial sum = 0) per matrix")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, default=None)

    p = sub.add_parser("square-suffix", parents=[mc], help="square-producing first-row suffix sets")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--exemplars", type=int, default=5)

    p = sub.add_parser("codim", parents=[mc], help="rank deficiency of trailing columns over F_p")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--p", type=_int_list, default=[2, 3, 5, 7, 11], help="comma-separated primes")
    p.add_argument("--k", type=_positive, default=3)

    p = sub.add_parser("equidist", parents=[mc], help="distance from uniform of the w_j sum mod p")
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=_positive, default=3)

    p = sub.add_parser("fourier-check", parents=[common], help="signed-sum law peaks at 0")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--a", type=_int_list, help="one weight vector")
    g.add_argument("--n", type=_positive, help="sweep every vector of length <= n")
    p.add_argument("--max-abs", type=int, default=2)

    p = sub.add_parser("isolated-check", parents=[mc], help="random 2-isolated families against 1/k")
    p.add_argument("--k", type=_int_list, required=True, help="comma-separated k values")
    p.add_argument("--target-size", type=_positive, default=None)

    p = sub.add_parser("mertens", parents=[common], help="exact sum of 1/p over p <= n")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("det", parents=[common], help="determinant, square verdict and tau of a matrix file")
    p.add_argument("path", type=Path)
    return parser


def _single(name, params, estimates, started):
    return ExperimentReport(
        name, params, estimates, Provenance(None, None, None), duration_s=round(time.perf_counter() - started, 3)
    )


def _mertens_report(n: int) -> ExperimentReport:
    started = time.perf_counter()
    s = arith.mertens_sum(n)
    estimates = [exact_estimate("mertens_sum", s)]
    if n >= 3:
        estimates.append(point("over_loglog", float(s) / math.log(math.log(n))))
    return _single("mertens", {"n": n}, estimates, started)


def _det_report(path) -> ExperimentReport:
    started = time.perf_counter()
    M = read_matrix_file(path)
    d = det(M)
    estimates = [exact_estimate("det", Fraction(d)), point("is_square", int(arith.is_perfect_square(d)))]
    if d != 0:
        estimates.append(point("tau", arith.divisor_count(arith.factorize(d))))
    return _single("det", {"path": str(path), "n": int(M.shape[0])}, estimates, started)


def _exact_square_report(n: int) -> ExperimentReport:
    started = time.perf_counter()
    law = experiments.exact_det_distribution(n)
    estimates = [
        exact_estimate("p_square", sum((q for x, q in law.items() if arith.is_perfect_square(x)), Fraction(0))),
        exact_estimate("p_det_zero", law.get(0, Fraction(0))),
    ]
    return _single("exact-square-prob", {"n": n}, estimates, started)


def dispatch(args) -> ExperimentReport:
    mc = {}
    if hasattr(args, "samples"):
        mc = {"samples": args.samples, "seed": args.seed, "shards": args.shards or default_shards()}
    cmd = args.command
    if cmd == "square-prob":
        if args.n_list:
            return experiments.square_decay_experiment(args.n_list, **mc)
        return experiments.square_probability_experiment(args.n, **mc)
    if cmd == "exact-square-prob":
        return _exact_square_report(args.n)
    if cmd == "mode-decay":
        return experiments.mode_decay_experiment(args.n_list, **mc)
    if cmd == "maples":
        return experiments.maples_experiment(args.n, args.p, tol=args.tolerance, **mc)
    if cmd == "divisors":
        return experiments.divisor_growth_experiment(args.n_list, **mc)
    if cmd == "pair-divisors":
        return experiments.pair_divisor_experiment(
            args.n, tau1=args.tau1, tau2=args.tau2, all_combos=args.all_combos, **mc
        )
    if cmd == "divisor-tail":
        return experiments.divisor_tail_experiment(args.n, args.k, **mc)
    if cmd == "partial-zero":
        return experiments.partial_zero_experiment(args.n, args.k, delta=args.delta, **mc)
    if cmd == "square-suffix":
        return experiments.square_suffix_experiment(args.n, args.k, exemplars=args.exemplars, **mc)
    if cmd == "codim":
        return experiments.codim_experiment(args.n, tuple(args.p), k=args.k, **mc)
    if cmd == "equidist":
        return experiments.equidist_experiment(args.n, args.p, k=args.k, **mc)
    if cmd == "fourier-check":
        if args.a is not None:
            return experiments.fourier_check_vector(args.a)
        return experiments.fourier_sweep(args.n, args.max_abs)
    if cmd == "isolated-check":
        families = mc.pop("samples")
        return experiments.isolated_experiment(args.k, families, target_size=args.target_size, **mc)
    if cmd == "mertens":
        return _mertens_report(args.n)
    if cmd == "det":
        return _det_report(args.path)
    raise AssertionError(cmd)


def render(report: ExperimentReport, fmt: str, timing: bool = True) -> str:
    return report.to_csv() if fmt == "csv" else report.to_json(timing) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = dispatch(args)
    except ResourceCapError as exc:
        print(f"detsquare: resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        print(f"detsquare {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(report, args.format, timing=not args.no_timing)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
