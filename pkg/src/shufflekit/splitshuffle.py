"""Splitting-process shuffle (two-way), the classical parallelizable baseline.

Each element of a range draws one coin flip; the range is stably partitioned
into the 0-group followed by the 1-group and both groups are shuffled
recursively.  Groups at or below the leaf cutoff are finished with a single
Fisher-Yates pass.  Groups where every flip landed on one side are simply
split again; termination holds with probability 1.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor

from .bitstream import BitSource
from .shufflers import (ShuffleConfig, ShuffleReport, SPAWN_MIN, _fast_ok,
                        _fy_range)

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

#: Leaf size at which splitting stops and Fisher-Yates finishes the group.
#: Calibrated against the published mean bit counts at n = 1e5 and 1e6;
#: the counts are quite insensitive to the exact value.
RS_CUTOFF_DEFAULT = 1 << 12


def split_pass(arr, lo: int, hi: int, src: BitSource, scratch=None) -> int:
    """One splitting level: flip a coin per element, stable-partition the
    range into the 0-group followed by the 1-group.  Returns the 0-group
    size.  Relative order within each group is preserved.
    """
    if scratch is None:
        scratch = [None] * (hi - lo)
    nz = 0
    no = 0
    for p in range(lo, hi):
        v = arr[p]
        if src.flip() == 0:
            arr[lo + nz] = v
            nz += 1
        else:
            scratch[no] = v
            no += 1
    for p in range(no):
        arr[lo + nz + p] = scratch[p]
    return nz


def _rs_sequential(arr, lo: int, hi: int, cutoff: int, src: BitSource,
                   scratch) -> None:
    stack = [(lo, hi)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo <= cutoff:
            _fy_range(arr, lo, hi, src)
            continue
        nz = split_pass(arr, lo, hi, src, scratch)
        # left group shuffles first: push right below left
        stack.append((lo + nz, hi))
        stack.append((lo, lo + nz))


def rs_shuffle(arr, cfg: ShuffleConfig, src: BitSource) -> ShuffleReport:
    """Uniformly shuffle arr in place via the splitting process."""
    n = len(arr)
    cutoff = cfg.resolve_cutoff(RS_CUTOFF_DEFAULT)
    t0 = time.perf_counter_ns()
    bits0 = src.bits_consumed
    if _fast_ok(arr, src):
        from . import _kernels
        _kernels.rs_inplace(arr, cutoff, src)
    else:
        scratch = [None] * n
        _rs_sequential(arr, 0, n, cutoff, src, scratch)
    return ShuffleReport("rs", n, src.bits_consumed - bits0,
                         time.perf_counter_ns() - t0, 1)


# ---------------------------------------------------------------------------
# parallel executor
# ---------------------------------------------------------------------------
#
# Substream schedule (frozen): the task handling the range starting at lo
# on recursion depth d draws from substream index d * (n + 1) + lo.  Ranges
# larger than SPAWN_MIN run a single split level per task and fork; smaller
# ranges are finished sequentially inside one task.  The task tree depends
# only on (n, cutoff, seed), never on the thread count.

def rs_shuffle_parallel(arr, cfg: ShuffleConfig,
                        src: BitSource) -> ShuffleReport:
    n = len(arr)
    cutoff = cfg.resolve_cutoff(RS_CUTOFF_DEFAULT)
    threads = cfg.threads
    t0 = time.perf_counter_ns()
    fast = _fast_ok(arr, src)
    if fast:
        from . import _kernels
    total_bits = 0

    def run_task(lo, hi, depth):
        sub = src.split_substream(depth * (n + 1) + lo)
        size = hi - lo
        if size > SPAWN_MIN:
            if fast:
                scratch = _np.empty(size, dtype=_np.int64)
                nz = _kernels.rs_split_once_inplace(arr, lo, hi, sub, scratch)
            else:
                nz = split_pass(arr, lo, hi, sub, [None] * size)
            return sub.bits_consumed, [(lo, lo + nz, depth + 1),
                                       (lo + nz, hi, depth + 1)]
        if fast:
            _kernels.rs_range_inplace(arr, lo, hi, cutoff, sub)
        else:
            _rs_sequential(arr, lo, hi, cutoff, sub, [None] * size)
        return sub.bits_consumed, []

    frontier = [(0, n, 0)]
    while frontier:
        if threads == 1 or len(frontier) == 1:
            results = [run_task(*t) for t in frontier]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda t: run_task(*t), frontier))
        nxt = []
        for bits, children in results:
            total_bits += bits
            nxt.extend(c for c in children if c[1] - c[0] > 0)
        frontier = nxt
    return ShuffleReport("rs", n, total_bits, time.perf_counter_ns() - t0,
                         threads)
