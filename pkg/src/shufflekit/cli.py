"""Command-line harness: shuffle data, benchmark bit costs, verify uniformity.

Exit codes: 0 success, 1 verification failure or aborted benchmark,
2 usage error.  SHUFFLEKIT_SEED provides a default seed when --seed is
absent.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
import time
from fractions import Fraction
from typing import List, Optional

from .bitstream import BitSource, substream_seed
from .shufflers import (ShuffleConfig, fisher_yates, merge_shuffle,
                        merge_shuffle_parallel)
from .splitshuffle import rs_shuffle, rs_shuffle_parallel
from .balanced import balanced_shuffle

ALGORITHMS = ("fy", "merge", "rs", "balanced")
_ALGO_IDS = {"fy": 0, "merge": 1, "rs": 2, "balanced": 3,
             "merge_parallel": 4, "rs_parallel": 5}

CSV_HEADER = "algorithm,n,trials,mean_bits,stddev_bits,mean_wall_ns,threads,seed"


def _default_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("SHUFFLEKIT_SEED")
    if env is not None:
        return int(env)
    return int.from_bytes(os.urandom(8), "big")


def _run_algorithm(algo: str, arr, cfg: ShuffleConfig, src: BitSource):
    if algo == "fy":
        bits0 = src.bits_consumed
        t0 = time.perf_counter_ns()
        fisher_yates(arr, src)
        from .shufflers import ShuffleReport
        return ShuffleReport("fy", len(arr), src.bits_consumed - bits0,
                             time.perf_counter_ns() - t0, 1)
    if algo == "merge":
        if cfg.threads > 1:
            return merge_shuffle_parallel(arr, cfg, src)
        return merge_shuffle(arr, cfg, src)
    if algo == "rs":
        if cfg.threads > 1:
            return rs_shuffle_parallel(arr, cfg, src)
        return rs_shuffle(arr, cfg, src)
    if algo == "balanced":
        return balanced_shuffle(arr, cfg, src)
    raise ValueError(f"unknown algorithm {algo!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_shuffle(args, parser) -> int:
    seed = _default_seed(args.seed)
    cfg = ShuffleConfig(cutoff=args.cutoff, threads=args.threads, seed=seed)
    src = BitSource(seed)
    if args.n is not None:
        if args.n < 0:
            parser.error("--n must be non-negative")
        try:
            import numpy as np
            arr = np.arange(args.n, dtype=np.int64)
        except ImportError:
            arr = list(range(args.n))
        tokens = None
    else:
        if sys.stdin.isatty():
            parser.error("either --n or newline-separated tokens on stdin "
                         "are required")
        tokens = sys.stdin.read().splitlines()
        arr = list(range(len(tokens)))
    report = _run_algorithm(args.algo, arr, cfg, src)
    out = sys.stdout
    if tokens is None:
        for v in arr:
            out.write(f"{v}\n")
    else:
        for v in arr:
            out.write(tokens[v] + "\n")
    if args.report:
        sys.stderr.write(f"bits={report.bits}\n")
    return 0


def _parse_int_list(text: str, what: str, parser) -> List[int]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        parser.error(f"--{what} must list at least one value")
    try:
        return [int(t) for t in items]
    except ValueError:
        parser.error(f"--{what} entries must be integers, got {text!r}")


def cmd_bench(args, parser) -> int:
    algos = [a for a in args.algos.split(",") if a.strip()]
    if not algos:
        parser.error("--algos must list at least one algorithm")
    for a in algos:
        if a not in ALGORITHMS:
            parser.error(f"unknown algorithm {a!r} "
                         f"(choose from {', '.join(ALGORITHMS)})")
    sizes = _parse_int_list(args.sizes, "sizes", parser)
    if any(s < 0 for s in sizes):
        parser.error("--sizes entries must be non-negative")
    seed = _default_seed(args.seed)
    threads = args.threads or (os.cpu_count() or 1)
    try:
        import numpy as np
    except ImportError:
        np = None

    rows = []
    plot_rows = []
    for algo in algos:
        for n in sizes:
            cell_seed = substream_seed(substream_seed(seed, _ALGO_IDS[algo]),
                                       n % (1 << 32))
            bits_list = []
            wall_list = []
            try:
                for t in range(args.trials):
                    src = BitSource(substream_seed(cell_seed, t))
                    if np is not None:
                        arr = np.arange(n, dtype=np.int64)
                    else:
                        arr = list(range(n))
                    cfg = ShuffleConfig(cutoff=args.cutoff, threads=threads,
                                        seed=src.seed)
                    report = _run_algorithm(algo, arr, cfg, src)
                    bits_list.append(report.bits)
                    wall_list.append(report.wall_ns)
                    if args.plot_data:
                        plot_rows.append(
                            f"{algo},{n},{t},{report.bits},{report.wall_ns}")
            except Exception as exc:  # noqa: BLE001 - abort names the cell
                sys.stderr.write(
                    f"bench cell algorithm={algo} n={n} failed: {exc}\n")
                return 1
            mean_bits = statistics.fmean(bits_list)
            std_bits = (statistics.stdev(bits_list)
                        if len(bits_list) > 1 else 0.0)
            mean_wall = statistics.fmean(wall_list)
            rows.append(f"{algo},{n},{args.trials},{mean_bits:.2f},"
                        f"{std_bits:.3f},{mean_wall:.0f},{threads},{seed}")
    out_lines = [CSV_HEADER] + rows
    text = "\n".join(out_lines) + "\n"
    sys.stdout.write(text)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    if args.plot_data:
        with open(args.plot_data, "w") as fh:
            fh.write("algorithm,n,trial,bits,wall_ns\n")
            fh.write("\n".join(plot_rows) + ("\n" if plot_rows else ""))
    return 0


def cmd_verify(args, parser) -> int:
    from . import verify as V

    seed = _default_seed(args.seed)
    algo = args.algo
    if algo not in ALGORITHMS + ("merge_parallel", "rs_parallel"):
        parser.error(f"unknown algorithm {algo!r}")
    if args.mode == "exact":
        if args.n > 6:
            parser.error("exact mode enumerates an n!-sized table; "
                         "n must be at most 6")
        cutoff = args.cutoff if args.cutoff is not None else 1
        table = V.exact_distribution(algo, args.n, bit_cap=args.bit_cap,
                                     cutoff=cutoff)
        tol = Fraction(1, 1 << 30)
        res_tol = (Fraction(1, 1 << 9) if algo.startswith("rs")
                   else Fraction(1, 1 << 30))
        dev = table.max_deviation()
        ok = dev <= tol and table.residual < res_tol
        print(f"exact distribution: algorithm={algo} n={args.n} "
              f"bit_cap={args.bit_cap} cutoff={cutoff}")
        print(f"  permutations observed: {len(table.masses)} of "
              f"{math.factorial(args.n)}")
        print(f"  max deviation from uniform: {float(dev):.3e}")
        print(f"  residual mass: {float(table.residual):.3e}")
        print(f"VERDICT {'pass' if ok else 'fail'}")
        return 0 if ok else 1
    # chisq
    if args.trials is None:
        parser.error("--trials is required in chisq mode")
    try:
        result = V.chi_square_uniformity(algo, args.n, args.trials, seed,
                                         cutoff=args.cutoff,
                                         threads=args.threads)
    except ValueError as exc:
        parser.error(str(exc))
    print(f"chi-square: algorithm={algo} n={args.n} trials={args.trials} "
          f"seed={seed}")
    print(f"  statistic={result.statistic:.2f} df={result.df} "
          f"threshold(0.999)={result.threshold:.2f}")
    print(f"VERDICT {'pass' if result.passed else 'fail'}")
    return 0 if result.passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shufflekit",
        description="Random permutations under the random-bit cost model: "
                    "shuffle, benchmark, verify.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sh = sub.add_parser("shuffle", help="shuffle 0..n-1 or stdin tokens")
    p_sh.add_argument("--algo", required=True, choices=ALGORITHMS)
    p_sh.add_argument("--n", type=int, default=None,
                      help="shuffle the integers 0..n-1 (omit to read "
                           "newline-separated tokens from stdin)")
    p_sh.add_argument("--seed", type=int, default=None)
    p_sh.add_argument("--threads", type=int, default=1)
    p_sh.add_argument("--cutoff", type=int, default=None)
    p_sh.add_argument("--report", action="store_true",
                      help="write bits consumed to stderr")

    p_b = sub.add_parser("bench", help="benchmark mean bit cost and wall time")
    p_b.add_argument("--algos", required=True,
                     help="comma-separated list from: " + ",".join(ALGORITHMS))
    p_b.add_argument("--sizes", required=True,
                     help="comma-separated array sizes")
    p_b.add_argument("--trials", type=int, default=100)
    p_b.add_argument("--threads", type=int, default=None,
                     help="threads per run (default: all processors)")
    p_b.add_argument("--seed", type=int, default=None)
    p_b.add_argument("--cutoff", type=int, default=None)
    p_b.add_argument("--csv", default=None, help="also write the CSV here")
    p_b.add_argument("--plot-data", default=None,
                     help="write per-trial long-format data here")

    p_v = sub.add_parser("verify", help="exact or statistical uniformity check")
    p_v.add_argument("--mode", required=True, choices=("exact", "chisq"))
    p_v.add_argument("--algo", required=True)
    p_v.add_argument("--n", type=int, required=True)
    p_v.add_argument("--trials", type=int, default=None)
    p_v.add_argument("--bit-cap", type=int, default=40)
    p_v.add_argument("--seed", type=int, default=None)
    p_v.add_argument("--cutoff", type=int, default=None)
    p_v.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "shuffle":
        return cmd_shuffle(args, parser)
    if args.command == "bench":
        return cmd_bench(args, parser)
    return cmd_verify(args, parser)


if __name__ == "__main__":
    sys.exit(main())
