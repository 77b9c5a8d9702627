"""Command-line frontend: ``sparseprod {multiply,bench,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys

from . import bench as _bench
from . import checks, matcore
from .approx import (MethodSpec, approximate_product, bound_greedy_worstcase,
                     bound_trace)
from .exceptions import ConfigError, MatrixFormatError, SparseProdError
from .kernel import build_kernel, partition
from .select import MHConfig

SELECTION_CHOICES = {"greedy": "greedy", "uniform": "uniform", "power": "power",
                     "det-mh": "determinant_mh", "det-exact": "determinant_exact"}
RESCALE_CHOICES = {"optimal": "optimal", "power": "power", "n-over-k": "n_over_k"}


class UsageError(Exception):
    pass


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="sparseprod",
                                     description="Approximate matrix products by reweighted "
                                                 "sparse sums of rank-one terms.")
    sub = parser.add_subparsers(dest="command", required=True)

    mul = sub.add_parser("multiply", help="approximate A @ B from k rank-one terms")
    mul.add_argument("--a", required=True, help="matrix file for A")
    mul.add_argument("--b", required=True, help="matrix file for B")
    mul.add_argument("--k", required=True, type=int)
    mul.add_argument("--selection", choices=list(SELECTION_CHOICES), default="greedy")
    mul.add_argument("--rescale", choices=list(RESCALE_CHOICES), default="optimal")
    mul.add_argument("--seed", type=_u64, default=0)
    mul.add_argument("--burn-in", type=int, default=1000,
                     help="Metropolis-Hastings burn-in for --selection det-mh")
    mul.add_argument("--out", default=None, help="output path (default: stdout)")
    mul.add_argument("--report-error", action="store_true",
                     help="print the error, dB error and bounds on stderr")

    b = sub.add_parser("bench", help="run the seeded comparison harness, write CSV")
    b.add_argument("--m", type=int, default=60)
    b.add_argument("--n", type=int, default=15)
    b.add_argument("--p", type=int, default=90)
    b.add_argument("--matrices", type=int, default=200)
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--k-list", type=_int_list, default=None,
                   help="comma-separated k values (default 1..n)")
    b.add_argument("--methods", default=None,
                   help="comma-separated selection+rescale pairs, 'jl', 'uniform-n-over-k'")
    b.add_argument("--seed", type=_u64, default=0)
    b.add_argument("--burn-in", type=int, default=100)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--timing", action="store_true",
                   help="record wall times (makes the CSV machine-dependent)")
    b.add_argument("--out", required=True, help="CSV output path")
    b.add_argument("--summary-out", default=None, help="optional summary CSV path")
    b.add_argument("--manifest", default=None, help="optional JSON manifest path")

    v = sub.add_parser("verify", help="run the randomized identity/inequality suite")
    v.add_argument("--n", type=int, default=6)
    v.add_argument("--k", type=int, default=2)
    v.add_argument("--instances", type=int, default=20)
    v.add_argument("--seed", type=_u64, default=0)
    v.add_argument("--inject-schur-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _read(path):
    try:
        return matcore.read_matrix(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from None
    except MatrixFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def cmd_multiply(args):
    out, err = sys.stdout, sys.stderr
    a, b = _read(args.a), _read(args.b)
    if a.shape[1] != b.shape[0]:
        raise UsageError(f"dimension mismatch: A is {a.shape[0]}x{a.shape[1]}, "
                         f"B is {b.shape[0]}x{b.shape[1]}")
    n = a.shape[1]
    if not 1 <= args.k <= n:
        raise UsageError(f"--k must lie in [1, {n}], got {args.k}")
    spec = MethodSpec(SELECTION_CHOICES[args.selection], RESCALE_CHOICES[args.rescale], args.k)
    res = approximate_product(a, b, spec, args.seed, mh_config=MHConfig(burn_in=args.burn_in))
    text = matcore.format_matrix(res.approximant)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    if args.report_error:
        p = partition(build_kernel(a, b), res.subset)
        err.write(f"subset: {' '.join(map(str, res.subset.indices))}\n")
        err.write(f"abs_error: {res.abs_error_frobenius!r}\n")
        err.write(f"rel_error_db: {res.rel_error_db!r}\n")
        err.write(f"bound_trace: {bound_trace(p)!r}\n")
        err.write(f"bound_greedy_worstcase: {bound_greedy_worstcase(a, b, res.subset)!r}\n")
    return 0


def cmd_bench(args):
    out = sys.stdout
    try:
        methods = (None if args.methods is None
                   else [_bench.BenchMethod.parse(x) for x in args.methods.split(",")])
        kwargs = dict(m=args.m, n=args.n, p=args.p, num_matrices=args.matrices,
                      trials_per_matrix=args.trials, k_values=args.k_list,
                      master_seed=args.seed, mh_config=MHConfig(burn_in=args.burn_in),
                      timing=args.timing)
        if methods is not None:
            kwargs["methods"] = methods
        cfg = _bench.ExperimentConfig(**kwargs)
    except (ConfigError, ValueError) as exc:
        raise UsageError(f"invalid grid: {exc}") from None
    records = _bench.run_experiment(cfg, workers=args.workers)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        _bench.write_csv(records, fh)
    rows = _bench.summarize(records)
    if args.summary_out:
        with open(args.summary_out, "w", encoding="utf-8", newline="") as fh:
            _bench.write_summary_csv(rows, fh)
    if args.manifest:
        _bench.write_manifest(cfg, args.manifest)
    out.write(_bench.format_summary(rows) + "\n")
    return 0


def cmd_verify(args):
    out = sys.stdout
    if args.n < 1 or not 1 <= args.k <= args.n or args.instances < 1:
        raise UsageError("need n >= 1, 1 <= k <= n and instances >= 1")
    results = checks.run_property_suite(args.n, args.k, args.instances, args.seed,
                                        fault=args.inject_schur_fault)
    status = 0
    for r in results:
        if r.passed:
            out.write(f"PASS {r.name} ({r.checked} instances)\n")
        else:
            status = 1
            out.write(f"FAIL {r.name} (instance seed {r.failing_seed}): {r.detail}\n")
    return status


COMMANDS = {"multiply": cmd_multiply, "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"sparseprod {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except SparseProdError as exc:
        print(f"sparseprod {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
