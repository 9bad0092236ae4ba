"""Balanced-word merge shuffle.

Instead of flipping one coin per element, each pairwise merge draws a single
uniform binary word from the exact composition class C(n1+n2, n1) (n1 zeros,
n2 ones) and interleaves the two sides along it: output position i takes the
next left element when bit i is 0, the next right element when it is 1.
Starting from single-element lists and merging bottom-up yields a uniform
permutation while spending close to the information-theoretic minimum number
of random bits.  The price is a linear amount of auxiliary space.

The word sampler draws one uniform rank below the class size with the
entropy-optimal dice roller, then decodes it by recursive halving: the count
of zeros falling in the left half is located inside the exact
hypergeometric-split weights (big-integer binomials, scanned outward from
the mode), and the rank remainder splits into independent sub-ranks for the
two halves.  Halves of length <= 32 are decoded directly by a lexicographic
position walk over a small binomial table.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

from .bitstream import BitSource
from .shufflers import (MergeRange, ShuffleConfig, ShuffleReport, _fast_ok,
                        singleton_rounds)

try:
    import gmpy2
    _comb = gmpy2.comb
except ImportError:  # pragma: no cover
    from math import comb as _comb

try:
    import numpy as _np
except ImportError:  # pragma: no cover
    _np = None

_SMALL_N = 32
_SMALL_COMB = [[0] * (_SMALL_N + 1) for _ in range(_SMALL_N + 1)]
for _a in range(_SMALL_N + 1):
    _SMALL_COMB[_a][0] = 1
    for _b in range(1, _a + 1):
        _SMALL_COMB[_a][_b] = (_SMALL_COMB[_a - 1][_b - 1]
                               + (_SMALL_COMB[_a - 1][_b] if _b < _a else 0))


@dataclass(frozen=True)
class BalancedWord:
    """A binary word with a prescribed number of zeros and ones."""

    bits: tuple
    n0: int
    n1: int

    def __post_init__(self):
        if len(self.bits) != self.n0 + self.n1:
            raise ValueError("word length does not match composition")
        if sum(1 for b in self.bits if b == 0) != self.n0:
            raise ValueError("zero count does not match composition")


@dataclass(frozen=True)
class InterleaveSpec:
    """A word paired with the side sizes it interleaves (left=0, right=1)."""

    word: BalancedWord
    n_left: int
    n_right: int

    def __post_init__(self):
        if self.word.n0 != self.n_left or self.word.n1 != self.n_right:
            raise ValueError(
                f"word composition ({self.word.n0}, {self.word.n1}) does not "
                f"match sides ({self.n_left}, {self.n_right})")


def _unrank_small(m: int, k: int, rank, out, off: int) -> None:
    # lexicographic walk: at each position the words starting with 0 form
    # the first C(rem, k-1) ranks
    kk = k
    for pos in range(m):
        if kk == 0:
            out[off + pos] = 1
            continue
        rem = m - pos - 1
        cnt = _SMALL_COMB[rem][kk - 1]
        if rank < cnt:
            out[off + pos] = 0
            kk -= 1
        else:
            rank -= cnt
            out[off + pos] = 1


def _locate_split(mL: int, mR: int, k: int, rank):
    """Find the left-half zero count t whose weight block contains rank.

    Blocks are visited outward from the hypergeometric mode (t0, t0+1,
    t0-1, ...), each with exact weight C(mL, t) * C(mR, k - t); the order
    is any fixed enumeration of the class, so uniformity is unaffected,
    and the expected scan length is O(sqrt(mL)).
    Returns (t, rank_left, rank_right).
    """
    tmin = k - mR if k > mR else 0
    tmax = mL if mL < k else k
    t0 = (k * mL) // (mL + mR)
    if t0 < tmin:
        t0 = tmin
    elif t0 > tmax:
        t0 = tmax
    wl = _comb(mL, t0)
    wr = _comb(mR, k - t0)
    w = wl * wr
    if rank < w:
        rl, rr = divmod(rank, wr)
        return t0, rl, rr
    cum = w
    up_t, up_l, up_r = t0, wl, wr
    dn_t, dn_l, dn_r = t0, wl, wr
    while True:
        if up_t < tmax:
            j = k - up_t
            up_l = up_l * (mL - up_t) // (up_t + 1)
            up_r = up_r * j // (mR - j + 1)
            up_t += 1
            w = up_l * up_r
            if rank < cum + w:
                rl, rr = divmod(rank - cum, up_r)
                return up_t, rl, rr
            cum += w
        if dn_t > tmin:
            j = k - dn_t
            dn_l = dn_l * dn_t // (mL - dn_t + 1)
            dn_r = dn_r * (mR - j) // (j + 1)
            dn_t -= 1
            w = dn_l * dn_r
            if rank < cum + w:
                rl, rr = divmod(rank - cum, dn_r)
                return dn_t, rl, rr
            cum += w


def _unrank_into(m: int, k: int, rank, out, off: int) -> None:
    while m > _SMALL_N:
        mL = m >> 1
        mR = m - mL
        t, rank_left, rank = _locate_split(mL, mR, k, rank)
        _unrank_into(mL, t, rank_left, out, off)
        off += mL
        m = mR
        k -= t
    _unrank_small(m, k, rank, out, off)


def _sample_bits_into(n0: int, n1: int, src: BitSource, out, off: int) -> None:
    m = n0 + n1
    if m == 0:
        return
    total = _comb(m, n0)
    rank = src.random_int(total)
    _unrank_into(m, n0, rank, out, off)


def sample_word(n0: int, n1: int, src: BitSource) -> BalancedWord:
    """A uniform word with exactly n0 zeros and n1 ones.

    Every one of the C(n0+n1, n0) words is equiprobable; the expected bit
    cost is log2 C(n0+n1, n0) plus at most two bits.
    """
    if n0 < 0 or n1 < 0:
        raise ValueError("composition counts must be non-negative")
    out = [0] * (n0 + n1)
    _sample_bits_into(n0, n1, src, out, 0)
    return BalancedWord(bits=tuple(out), n0=n0, n1=n1)


def interleave(arr, rng: MergeRange, spec: InterleaveSpec) -> None:
    """Rearrange the range so position i holds the next left element when
    word bit i is 0 and the next right element when it is 1.

    Preserves the internal order of both sides; uses a scratch copy of the
    range.
    """
    if spec.n_left != rng.n1 or spec.n_right != rng.n2:
        raise ValueError(
            f"interleave spec sides ({spec.n_left}, {spec.n_right}) do not "
            f"match range sizes ({rng.n1}, {rng.n2})")
    s = rng.s
    m = rng.n1 + rng.n2
    if s + m > len(arr):
        raise ValueError(f"{rng} exceeds array of length {len(arr)}")
    _interleave_bits(arr, s, rng.n1, m, spec.word.bits)


def _interleave_bits(arr, s: int, n1: int, m: int, bits) -> None:
    if _np is not None and isinstance(arr, _np.ndarray):
        seg = arr[s:s + m].copy()
        mask = _np.asarray(bits[:m], dtype=_np.uint8) == 0 \
            if not isinstance(bits, _np.ndarray) else bits[:m] == 0
        view = arr[s:s + m]
        view[mask] = seg[:n1]
        view[~mask] = seg[n1:]
        return
    seg = list(arr[s:s + m])
    a = 0
    b = n1
    for t in range(m):
        if bits[t] == 0:
            arr[s + t] = seg[a]
            a += 1
        else:
            arr[s + t] = seg[b]
            b += 1


def balanced_shuffle(arr, cfg: ShuffleConfig, src: BitSource) -> ShuffleReport:
    """Uniformly shuffle arr in place by bottom-up balanced-word merging.

    Pairs are merged round by round starting from single elements; each
    pair draws its interleaving word from the exact composition class of
    its side sizes.  Single-threaded; needs an auxiliary buffer of size n.
    """
    n = len(arr)
    t0 = time.perf_counter_ns()
    bits0 = src.bits_consumed
    if n > 1:
        use_np = _np is not None and isinstance(arr, _np.ndarray)
        if use_np:
            word = _np.empty(n, dtype=_np.uint8)
        else:
            word = [0] * n
        for level in singleton_rounds(n):
            for (j, k, l) in level:
                n1 = k - j
                n2 = l - k
                if n1 == 0 or n2 == 0:
                    continue
                m = n1 + n2
                _sample_bits_into(n1, n2, src, word, 0)
                _interleave_bits(arr, j, n1, m, word)
    return ShuffleReport("balanced", n, src.bits_consumed - bits0,
                         time.perf_counter_ns() - t0, 1)
