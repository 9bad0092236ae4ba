"""Core shuffling algorithms: Fisher-Yates, in-place shuffled merging, and
the block merge shuffle (sequential and parallel).

All operations permute the array in place and draw randomness only through
a :class:`~shufflekit.bitstream.BitSource`.  Arrays may be plain mutable
sequences or 1-d int64 numpy arrays; for numpy arrays backed by a plain
(non-recording, non-tape) source the work is dispatched to jitted kernels
that produce bit-for-bit identical results.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .bitstream import BitSource

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

#: Block-size threshold below which merge shuffling falls back to a single
#: Fisher-Yates pass.  Calibrated so that measured mean bit counts at
#: n = 1e5 and n = 1e6 reproduce the reference implementation's published
#: averages; see the calibration notes in the README.
MERGE_CUTOFF_DEFAULT = 1 << 16

#: Range size below which the parallel executors stop spawning subtasks.
SPAWN_MIN = 1 << 14


@dataclass
class ShuffleConfig:
    """Tuning knobs shared by the shuffling entry points.

    cutoff=None selects the per-algorithm calibrated default.
    """

    cutoff: Optional[int] = None
    threads: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def resolve_cutoff(self, default: int) -> int:
        return default if self.cutoff is None else self.cutoff


@dataclass
class ShuffleReport:
    """Per-run measurement record."""

    algorithm: str
    n: int
    bits: int
    wall_ns: int
    threads: int


@dataclass(frozen=True)
class MergeRange:
    """Two adjacent sub-ranges [s, s+n1) and [s+n1, s+n1+n2) of an array."""

    s: int
    n1: int
    n2: int

    def __post_init__(self):
        if self.s < 0 or self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"invalid merge range {self}")


def merge_plan(n: int, cutoff: int) -> Tuple[int, int, List[int]]:
    """Block decomposition for the merge shuffle.

    Picks the smallest c with n >> c <= cutoff, giving q = 2^c blocks whose
    boundaries are the fixed-point values (n * i) >> c.  Returns
    (c, q, boundaries) where boundaries has q + 1 entries.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    c = 0
    while (n >> c) > cutoff:
        c += 1
    q = 1 << c
    bounds = [(n * i) >> c for i in range(q + 1)]
    return c, q, bounds


def merge_rounds(n: int, cutoff: int) -> List[List[Tuple[int, int, int]]]:
    """The pairwise merge schedule: one list of (j, k, l) ranges per round.

    Round r merges adjacent block groups of 2^r blocks; (j, k, l) delimits
    the two halves [j, k) and [k, l).  Shared by the sequential and parallel
    executors and by the exact-distribution oracle.
    """
    c, q, bounds = merge_plan(n, cutoff)
    return _rounds_from_bounds(q, bounds)


def singleton_rounds(n: int) -> List[List[Tuple[int, int, int]]]:
    """Merge schedule over singleton leaves: q is the smallest power of two
    at or above n, so every block holds at most one element."""
    c = (n - 1).bit_length() if n > 1 else 0
    q = 1 << c
    bounds = [(n * i) >> c for i in range(q + 1)]
    return _rounds_from_bounds(q, bounds)


def _rounds_from_bounds(q: int, bounds: List[int]
                        ) -> List[List[Tuple[int, int, int]]]:
    rounds = []
    p = 1
    while p < q:
        level = []
        for i in range(0, q, 2 * p):
            j = bounds[i]
            k = bounds[i + p]
            l = bounds[min(i + 2 * p, q)]
            level.append((j, k, l))
        rounds.append(level)
        p *= 2
    return rounds


# ---------------------------------------------------------------------------
# pure reference implementations
# ---------------------------------------------------------------------------

def _fy_range(arr, lo: int, hi: int, src: BitSource) -> None:
    for i in range(hi - lo - 1, 0, -1):
        j = src.random_int(i + 1)
        ii = lo + i
        jj = lo + j
        arr[ii], arr[jj] = arr[jj], arr[ii]


def fisher_yates(arr, src: BitSource) -> None:
    """Uniformly shuffle arr in place.

    Walks positions from the last to the first, swapping each with a
    uniformly drawn earlier-or-equal position.
    """
    if _fast_ok(arr, src):
        from . import _kernels
        _kernels.fy_inplace(arr, src)
        return
    _fy_range(arr, 0, len(arr), src)


def merge(arr, rng: MergeRange, src: BitSource) -> None:
    """Merge two adjacent uniformly shuffled sub-ranges into one, in place.

    Phase 1 flips a coin per step to pick the source side until one side is
    depleted; phase 2 inserts each leftover element at a uniform position
    among the elements placed so far.  If either side is empty the range is
    already a shuffled union and no bits are consumed.
    """
    s, n1, n2 = rng.s, rng.n1, rng.n2
    if s + n1 + n2 > len(arr):
        raise ValueError(f"{rng} exceeds array of length {len(arr)}")
    if n1 == 0 or n2 == 0:
        return
    if _fast_ok(arr, src):
        from . import _kernels
        _kernels.merge_inplace(arr, s, s + n1, s + n1 + n2, src)
        return
    i = s
    j = s + n1
    n = s + n1 + n2
    while True:
        if src.flip() == 0:
            if i == j:
                break
        else:
            if j == n:
                break
            arr[i], arr[j] = arr[j], arr[i]
            j += 1
        i += 1
    while i < n:
        m = s + src.random_int(i - s + 1)
        arr[i], arr[m] = arr[m], arr[i]
        i += 1


def merge_shuffle(arr, cfg: ShuffleConfig, src: BitSource) -> ShuffleReport:
    """Uniformly shuffle arr in place by block decomposition and merging.

    Splits the array into q = 2^c blocks of roughly equal size, shuffles
    each with Fisher-Yates, then merges adjacent blocks pairwise in rounds
    until a single block remains.  Sequential; draws every bit from src in
    schedule order.
    """
    n = len(arr)
    cutoff = cfg.resolve_cutoff(MERGE_CUTOFF_DEFAULT)
    t0 = time.perf_counter_ns()
    bits0 = src.bits_consumed
    if _fast_ok(arr, src):
        from . import _kernels
        _kernels.merge_shuffle_inplace(arr, cutoff, src)
    else:
        _, q, bounds = merge_plan(n, cutoff)
        for i in range(q):
            _fy_range(arr, bounds[i], bounds[i + 1], src)
        for level in merge_rounds(n, cutoff):
            for (j, k, l) in level:
                merge(arr, MergeRange(j, k - j, l - k), src)
    return ShuffleReport("merge", n, src.bits_consumed - bits0,
                         time.perf_counter_ns() - t0, 1)


# ---------------------------------------------------------------------------
# parallel executor
# ---------------------------------------------------------------------------
#
# Substream schedule (frozen): with q blocks, the block-shuffle task for
# block i draws from substream index i, and the merge task for ranges
# starting at block i in round r (1-based) draws from substream index
# r * q + i.  The schedule depends only on (n, cutoff, seed), so any thread
# count produces bit-for-bit identical output.

def merge_task_indices(n: int, cutoff: int) -> List[List[Tuple[int, int]]]:
    """(substream index, block index) pairs per round, mirroring merge_rounds."""
    _, q, _ = merge_plan(n, cutoff)
    out = []
    p = 1
    r = 1
    while p < q:
        out.append([(r * q + i, i) for i in range(0, q, 2 * p)])
        p *= 2
        r += 1
    return out


def _run_tasks(tasks, threads: int):
    """Run zero-argument callables, in order when threads == 1."""
    if threads == 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: t(), tasks))


def merge_shuffle_parallel(arr, cfg: ShuffleConfig,
                           src: BitSource) -> ShuffleReport:
    """Merge shuffle with concurrent merge rounds.

    Within each round the pairwise merges touch disjoint ranges and run
    concurrently, each drawing from its own substream of src; a barrier
    separates rounds.  threads=1 executes the identical substream schedule
    sequentially, so output is bit-for-bit independent of the thread count.
    """
    n = len(arr)
    cutoff = cfg.resolve_cutoff(MERGE_CUTOFF_DEFAULT)
    threads = cfg.threads
    t0 = time.perf_counter_ns()
    _, q, bounds = merge_plan(n, cutoff)
    fast = _fast_ok(arr, src)
    bits = 0

    def fy_task(i):
        def run():
            sub = src.split_substream(i)
            lo, hi = bounds[i], bounds[i + 1]
            if fast:
                from . import _kernels
                _kernels.fy_range_inplace(arr, lo, hi, sub)
            else:
                _fy_range(arr, lo, hi, sub)
            return sub.bits_consumed
        return run

    def merge_task(idx, j, k, l):
        def run():
            sub = src.split_substream(idx)
            if fast:
                from . import _kernels
                _kernels.merge_inplace(arr, j, k, l, sub)
            else:
                merge(arr, MergeRange(j, k - j, l - k), sub)
            return sub.bits_consumed
        return run

    bits += sum(_run_tasks([fy_task(i) for i in range(q)], threads))
    rounds = merge_rounds(n, cutoff)
    indices = merge_task_indices(n, cutoff)
    for level, idx_level in zip(rounds, indices):
        tasks = [merge_task(idx, j, k, l)
                 for (idx, _), (j, k, l) in zip(idx_level, level)]
        bits += sum(_run_tasks(tasks, threads))
    return ShuffleReport("merge", n, bits, time.perf_counter_ns() - t0,
                         threads)


def _fast_ok(arr, src: BitSource) -> bool:
    if _np is None or not isinstance(arr, _np.ndarray):
        return False
    if arr.dtype != _np.int64 or arr.ndim != 1:
        return False
    return src.is_plain
