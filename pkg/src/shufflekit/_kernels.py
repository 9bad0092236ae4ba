"""Jitted engine for the hot paths.

Every kernel reproduces the pure-Python reference bit-for-bit: the same
splitmix64 word stream, the same most-significant-first bit buffer, the
same batched fast-dice-roller.  The shared generator state travels as a
uint64[4] vector [sm64_state, bit_buffer, buffered_bits, bits_consumed]
so Python-level BitSource objects stay in sync across dispatches.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64, int64

from .bitstream import BitSource, substream_seed

_GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)


@njit(uint64(uint64), cache=True, nogil=True)
def _mix64(z):
    z = ((z ^ (z >> uint64(30))) * _MIX1) & uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> uint64(27))) * _MIX2) & uint64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> uint64(31))


@njit(cache=True, nogil=True)
def _take(state, k):
    # next k bits (1 <= k <= 64), MSB-first
    buflen = state[2]
    if buflen >= k:
        buf = state[1]
        buflen -= k
        out = buf >> buflen
        state[1] = buf & ((uint64(1) << buflen) - uint64(1))
        state[2] = buflen
        state[3] += k
        return out
    s = (state[0] + _GOLDEN) & uint64(0xFFFFFFFFFFFFFFFF)
    state[0] = s
    w = _mix64(s)
    need = k - buflen
    if buflen == uint64(0):
        out = w >> (uint64(64) - need) if need < uint64(64) else w
    else:
        out = (state[1] << need) | (w >> (uint64(64) - need))
    rem = uint64(64) - need
    if rem > uint64(0):
        state[1] = w & ((uint64(1) << rem) - uint64(1))
    else:
        state[1] = uint64(0)
    state[2] = rem
    state[3] += k
    return out


@njit(cache=True, nogil=True)
def _flip(state):
    return _take(state, uint64(1))


@njit(cache=True, nogil=True)
def _fdr(state, bound):
    # uniform integer in [0, bound); bound < 2**62
    if bound <= uint64(1):
        return uint64(0)
    v = uint64(1)
    c = uint64(0)
    while True:
        vv = v
        k = uint64(0)
        while vv < bound:
            vv += vv
            k += uint64(1)
        c = (c << k) | _take(state, k)
        v = vv
        if c < bound:
            return c
        c -= bound
        v -= bound


@njit(cache=True, nogil=True)
def _fy_range(arr, lo, hi, state):
    for i in range(hi - lo - 1, 0, -1):
        j = int64(_fdr(state, uint64(i + 1)))
        ii = lo + i
        jj = lo + j
        t = arr[ii]
        arr[ii] = arr[jj]
        arr[jj] = t


@njit(cache=True, nogil=True)
def _merge(arr, j, k, l, state):
    # in-place shuffled merge of [j, k) and [k, l)
    if k == j or l == k:
        return
    i = j
    mid = k
    n = l
    while True:
        if _flip(state) == uint64(0):
            if i == mid:
                break
        else:
            if mid == n:
                break
            t = arr[i]
            arr[i] = arr[mid]
            arr[mid] = t
            mid += 1
        i += 1
    while i < n:
        m = j + int64(_fdr(state, uint64(i - j + 1)))
        t = arr[i]
        arr[i] = arr[m]
        arr[m] = t
        i += 1


@njit(cache=True, nogil=True)
def _merge_shuffle(arr, cutoff, state):
    n = arr.shape[0]
    c = 0
    while (n >> c) > cutoff:
        c += 1
    q = 1 << c
    for i in range(q):
        _fy_range(arr, (n * i) >> c, (n * (i + 1)) >> c, state)
    p = 1
    while p < q:
        i = 0
        while i < q:
            jb = (n * i) >> c
            kb = (n * (i + p)) >> c
            ib2 = i + 2 * p
            if ib2 > q:
                ib2 = q
            lb = (n * ib2) >> c
            _merge(arr, jb, kb, lb, state)
            i += 2 * p
        p += p


@njit(cache=True, nogil=True)
def _rs(arr, rlo, rhi, cutoff, state, scratch, stack):
    # iterative splitting shuffle of [rlo, rhi), left range first
    top = 0
    stack[top, 0] = rlo
    stack[top, 1] = rhi
    top = 1
    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        if hi - lo <= cutoff:
            _fy_range(arr, lo, hi, state)
            continue
        nz = 0
        no = 0
        for p in range(lo, hi):
            if _flip(state) == uint64(0):
                arr[lo + nz] = arr[p]
                nz += 1
            else:
                scratch[no] = arr[p]
                no += 1
        for p in range(no):
            arr[lo + nz + p] = scratch[p]
        stack[top, 0] = lo + nz
        stack[top, 1] = hi
        top += 1
        stack[top, 0] = lo
        stack[top, 1] = lo + nz
        top += 1


@njit(cache=True, nogil=True)
def _rs_split_once(arr, lo, hi, state, scratch):
    nz = 0
    no = 0
    for p in range(lo, hi):
        if _flip(state) == uint64(0):
            arr[lo + nz] = arr[p]
            nz += 1
        else:
            scratch[no] = arr[p]
            no += 1
    for p in range(no):
        arr[lo + nz + p] = scratch[p]
    return nz


@njit(cache=True, nogil=True)
def _perm_rank(arr, fact):
    # little-endian factorial base: digit k counts smaller values left of k
    n = arr.shape[0]
    r = uint64(0)
    for k in range(1, n):
        d = uint64(0)
        for j in range(k):
            if arr[j] < arr[k]:
                d += uint64(1)
        r += d * fact[k]
    return r


@njit(cache=True, nogil=True)
def _chi_trials(algo, n, t0, t1, seed, cutoff, counts, fact):
    # algo: 0=fy, 1=merge, 2=merge tasked substreams, 3=rs, 4=rs tasked
    arr = np.empty(n, dtype=np.int64)
    state = np.zeros(4, dtype=np.uint64)
    scratch = np.empty(n, dtype=np.int64)
    stack = np.empty((256, 2), dtype=np.int64)
    for t in range(t0, t1):
        tseed = _mix64((uint64(seed) + _GOLDEN * (uint64(t) + uint64(1)))
                       & uint64(0xFFFFFFFFFFFFFFFF))
        for i in range(n):
            arr[i] = i
        if algo == 0:
            state[0] = tseed
            state[1] = uint64(0)
            state[2] = uint64(0)
            state[3] = uint64(0)
            _fy_range(arr, 0, n, state)
        elif algo == 1:
            state[0] = tseed
            state[1] = uint64(0)
            state[2] = uint64(0)
            state[3] = uint64(0)
            _merge_shuffle(arr, cutoff, state)
        elif algo == 2:
            _merge_shuffle_tasked(arr, cutoff, tseed, state)
        elif algo == 3:
            state[0] = tseed
            state[1] = uint64(0)
            state[2] = uint64(0)
            state[3] = uint64(0)
            _rs(arr, 0, n, cutoff, state, scratch, stack)
        else:
            # parallel schedule at small n: one finish task on substream 0
            state[0] = _mix64((tseed + _GOLDEN) & uint64(0xFFFFFFFFFFFFFFFF))
            state[1] = uint64(0)
            state[2] = uint64(0)
            state[3] = uint64(0)
            _rs(arr, 0, n, cutoff, state, scratch, stack)
        counts[_perm_rank(arr, fact)] += 1


@njit(cache=True, nogil=True)
def _merge_shuffle_tasked(arr, cutoff, seed, state):
    # frozen substream schedule: block i -> index i, round r merge at block
    # i -> index r*q + i; sequential execution of the parallel schedule
    n = arr.shape[0]
    c = 0
    while (n >> c) > cutoff:
        c += 1
    q = 1 << c
    for i in range(q):
        state[0] = _mix64((seed + _GOLDEN * (uint64(i) + uint64(1)))
                          & uint64(0xFFFFFFFFFFFFFFFF))
        state[1] = uint64(0)
        state[2] = uint64(0)
        state[3] = uint64(0)
        _fy_range(arr, (n * i) >> c, (n * (i + 1)) >> c, state)
    p = 1
    r = 1
    while p < q:
        i = 0
        while i < q:
            idx = uint64(r * q + i)
            state[0] = _mix64((seed + _GOLDEN * (idx + uint64(1)))
                              & uint64(0xFFFFFFFFFFFFFFFF))
            state[1] = uint64(0)
            state[2] = uint64(0)
            state[3] = uint64(0)
            jb = (n * i) >> c
            kb = (n * (i + p)) >> c
            ib2 = i + 2 * p
            if ib2 > q:
                ib2 = q
            lb = (n * ib2) >> c
            _merge(arr, jb, kb, lb, state)
            i += 2 * p
        p += p
        r += 1


@njit(cache=True, nogil=True)
def _bs_small(arr, state, comb, word, scratch):
    # balanced merge shuffle for n <= 32 (word unranking via the same
    # lexicographic walk as the pure base case); singleton leaf blocks
    n = arr.shape[0]
    c = 0
    while (1 << c) < n:
        c += 1
    q = 1 << c
    p = 1
    while p < q:
        i = 0
        while i < q:
            jb = (n * i) >> c
            kb = (n * (i + p)) >> c
            ib2 = i + 2 * p
            if ib2 > q:
                ib2 = q
            lb = (n * ib2) >> c
            n1 = kb - jb
            n2 = lb - kb
            if n1 > 0 and n2 > 0:
                m = n1 + n2
                r = _fdr(state, comb[m, n1])
                kk = n1
                for pos in range(m):
                    rem = m - pos - 1
                    if kk > 0:
                        cnt = comb[rem, kk - 1]
                        if r < cnt:
                            word[pos] = 0
                            kk -= 1
                        else:
                            r -= cnt
                            word[pos] = 1
                    else:
                        word[pos] = 1
                for t in range(m):
                    scratch[t] = arr[jb + t]
                a = 0
                b = n1
                for t in range(m):
                    if word[t] == 0:
                        arr[jb + t] = scratch[a]
                        a += 1
                    else:
                        arr[jb + t] = scratch[b]
                        b += 1
            i += 2 * p
        p += p


@njit(cache=True, nogil=True)
def _chi_trials_bs(n, t0, t1, seed, counts, fact, comb):
    arr = np.empty(n, dtype=np.int64)
    state = np.zeros(4, dtype=np.uint64)
    word = np.empty(n, dtype=np.uint8)
    scratch = np.empty(n, dtype=np.int64)
    for t in range(t0, t1):
        tseed = _mix64((uint64(seed) + _GOLDEN * (uint64(t) + uint64(1)))
                       & uint64(0xFFFFFFFFFFFFFFFF))
        for i in range(n):
            arr[i] = i
        state[0] = tseed
        state[1] = uint64(0)
        state[2] = uint64(0)
        state[3] = uint64(0)
        _bs_small(arr, state, comb, word, scratch)
        counts[_perm_rank(arr, fact)] += 1


@njit(cache=True, nogil=True)
def _merge_bits_trials(n1, n2, t0, t1, seed, out_bits):
    arr = np.arange(n1 + n2, dtype=np.int64)
    state = np.zeros(4, dtype=np.uint64)
    for t in range(t0, t1):
        state[0] = _mix64((uint64(seed) + _GOLDEN * (uint64(t) + uint64(1)))
                          & uint64(0xFFFFFFFFFFFFFFFF))
        state[1] = uint64(0)
        state[2] = uint64(0)
        state[3] = uint64(0)
        _merge(arr, 0, n1, n1 + n2, state)
        out_bits[t] = state[3]


@njit(cache=True, nogil=True)
def fdr_expected_table(n):
    # exact expected fast-dice-roller bits for every bound 0..n
    out = np.zeros(n + 1, dtype=np.float64)
    for b in range(2, n + 1):
        total = 0.0
        r = 1
        w = 1.0
        while True:
            total += r * w
            r = (2 * r) % b
            if r == 0 or b * w < 1e-22:
                break
            w *= 0.5
        out[b] = total
    return out


@njit(cache=True, nogil=True)
def _fdr_total_bits(bound, draws, seed):
    state = np.zeros(4, dtype=np.uint64)
    state[0] = uint64(seed)
    for _ in range(draws):
        _fdr(state, uint64(bound))
    return state[3]


# ---------------------------------------------------------------------------
# Python-side wrappers
# ---------------------------------------------------------------------------

def _state_vec(src: BitSource) -> np.ndarray:
    s, buf, buflen, consumed = src.state_tuple()
    return np.array([s, buf, buflen, consumed], dtype=np.uint64)


def _sync(src: BitSource, vec: np.ndarray) -> None:
    src.set_state_tuple((int(vec[0]), int(vec[1]), int(vec[2]), int(vec[3])))


def fy_inplace(arr: np.ndarray, src: BitSource) -> None:
    vec = _state_vec(src)
    _fy_range(arr, 0, arr.shape[0], vec)
    _sync(src, vec)


def fy_range_inplace(arr: np.ndarray, lo: int, hi: int,
                     src: BitSource) -> None:
    vec = _state_vec(src)
    _fy_range(arr, lo, hi, vec)
    _sync(src, vec)


def merge_inplace(arr: np.ndarray, j: int, k: int, l: int,
                  src: BitSource) -> None:
    vec = _state_vec(src)
    _merge(arr, j, k, l, vec)
    _sync(src, vec)


def merge_shuffle_inplace(arr: np.ndarray, cutoff: int,
                          src: BitSource) -> None:
    vec = _state_vec(src)
    _merge_shuffle(arr, cutoff, vec)
    _sync(src, vec)


def rs_inplace(arr: np.ndarray, cutoff: int, src: BitSource,
               scratch: np.ndarray | None = None) -> None:
    rs_range_inplace(arr, 0, arr.shape[0], cutoff, src, scratch)


def rs_range_inplace(arr: np.ndarray, lo: int, hi: int, cutoff: int,
                     src: BitSource,
                     scratch: np.ndarray | None = None) -> None:
    vec = _state_vec(src)
    if scratch is None:
        scratch = np.empty(hi - lo, dtype=np.int64)
    stack = np.empty((256, 2), dtype=np.int64)
    _rs(arr, lo, hi, cutoff, vec, scratch, stack)
    _sync(src, vec)


def rs_split_once_inplace(arr: np.ndarray, lo: int, hi: int, src: BitSource,
                          scratch: np.ndarray) -> int:
    vec = _state_vec(src)
    nz = _rs_split_once(arr, lo, hi, vec, scratch)
    _sync(src, vec)
    return int(nz)


def factorial_table(n: int) -> np.ndarray:
    fact = np.ones(n, dtype=np.uint64)
    for k in range(1, n):
        fact[k] = fact[k - 1] * np.uint64(k)
    return fact


def comb_table(n: int) -> np.ndarray:
    comb = np.zeros((n + 1, n + 1), dtype=np.uint64)
    for a in range(n + 1):
        comb[a, 0] = 1
        for b in range(1, a + 1):
            comb[a, b] = comb[a - 1, b - 1] + (comb[a - 1, b] if b <= a - 1
                                               else 0)
    return comb


_CHI_ALGO_IDS = {"fy": 0, "merge": 1, "merge_parallel": 2, "rs": 3,
                 "rs_parallel": 4}


def chi_counts(algo: str, n: int, trials: int, seed: int, cutoff: int,
               threads: int = 1) -> np.ndarray:
    """Output-rank histogram over shuffling trials.

    Trial t draws from the substream with index t, so the counts are
    independent of how trials are fanned out across threads.
    """
    import math
    from concurrent.futures import ThreadPoolExecutor

    fact = factorial_table(n)
    nf = math.factorial(n)
    if algo == "balanced":
        comb = comb_table(max(n, 2))

        def run_bs(t0, t1):
            counts = np.zeros(nf, dtype=np.int64)
            _chi_trials_bs(n, t0, t1, np.uint64(seed), counts, fact, comb)
            return counts

        runner, args = run_bs, None
    else:
        algo_id = _CHI_ALGO_IDS[algo]

        def run(t0, t1):
            counts = np.zeros(nf, dtype=np.int64)
            _chi_trials(algo_id, n, t0, t1, np.uint64(seed), cutoff, counts,
                        fact)
            return counts

        runner = run
    if threads == 1:
        return runner(0, trials)
    edges = [trials * i // threads for i in range(threads + 1)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda ab: runner(*ab),
                              zip(edges[:-1], edges[1:])))
    return sum(parts)


def merge_trial_bits(n1: int, n2: int, trials: int, seed: int) -> np.ndarray:
    out = np.zeros(trials, dtype=np.uint64)
    _merge_bits_trials(n1, n2, 0, trials, np.uint64(seed), out)
    return out


def fdr_mean_bits(bound: int, draws: int, seed: int) -> float:
    total = _fdr_total_bits(np.uint64(bound), draws, np.uint64(seed))
    return float(total) / draws


def merge_shuffle_tasked(arr: np.ndarray, cutoff: int, seed: int) -> None:
    """Sequential execution of the parallel substream schedule (testing aid)."""
    state = np.zeros(4, dtype=np.uint64)
    _merge_shuffle_tasked(arr, cutoff, np.uint64(seed), state)


def balanced_small_inplace(arr: np.ndarray, src: BitSource) -> None:
    vec = _state_vec(src)
    n = arr.shape[0]
    comb = comb_table(max(n, 2))
    word = np.empty(n, dtype=np.uint8)
    scratch = np.empty(n, dtype=np.int64)
    _bs_small(arr, vec, comb, word, scratch)
    _sync(src, vec)
