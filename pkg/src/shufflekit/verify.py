"""Correctness and cost verification.

Three pillars:

* an exact-distribution oracle that enumerates every random-bit outcome of
  a shuffling procedure, weighting each terminated path by 2^-bits, and
  reports exact dyadic permutation masses plus the unexplored residual;
* a chi-square uniformity test over permutation ranks for sizes where the
  oracle's table would not fit;
* analytic expected-bit models: the exact per-draw cost of the
  fast-dice-roller, the two depletion-case sums for the in-place shuffled
  merge, and the per-round total for the block merge shuffle.

The oracle enumerates each randomized stage of an algorithm (a single
draw-and-swap, one in-place merge, one splitting pass, one word-driven
interleave) by depth-first search over bit prefixes, running the real
implementation against a replay tape.  Stage kernels are composed with
exact dyadic arithmetic, collapsing identical intermediate array states,
which keeps the enumeration polynomial where the raw path count would be
astronomical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from .bitstream import BitSource, DrawTape, TapeExhausted, substream_seed
from .shufflers import (MERGE_CUTOFF_DEFAULT, MergeRange, merge, merge_plan,
                        merge_rounds, singleton_rounds)
from .splitshuffle import RS_CUTOFF_DEFAULT, split_pass
from .balanced import InterleaveSpec, interleave, sample_word

# ---------------------------------------------------------------------------
# per-draw cost models
# ---------------------------------------------------------------------------


def fdr_expected_bits(bound: int) -> float:
    """Exact expected bit cost of random_int(bound).

    The survival probability after k bits equals (2^k mod bound) / 2^k, so
    the expectation is the sum of that series; it converges geometrically.
    """
    if bound <= 1:
        return 0.0
    total = 0.0
    r = 1
    w = 1.0
    while True:
        total += r * w
        r = (2 * r) % bound
        if r == 0 or bound * w < 1e-22:
            return total
        w *= 0.5


def fdr_expected_bits_exact(bound: int) -> Fraction:
    """fdr_expected_bits as an exact rational (cycle summation)."""
    if bound <= 1:
        return Fraction(0)
    seen: Dict[int, int] = {}
    residues: List[int] = []
    r = 1
    while r not in seen:
        if r == 0:
            break
        seen[r] = len(residues)
        residues.append(r)
        r = (2 * r) % bound
    head = Fraction(0)
    if r == 0:
        for k, rk in enumerate(residues):
            head += Fraction(rk, 1 << k)
        return head
    k0 = seen[r]
    period = len(residues) - k0
    for k in range(k0):
        head += Fraction(residues[k], 1 << k)
    cyc = Fraction(0)
    for k in range(k0, len(residues)):
        cyc += Fraction(residues[k], 1 << k)
    return head + cyc / (1 - Fraction(1, 1 << period))


def _ceil_log2(k: int) -> int:
    return (k - 1).bit_length() if k >= 1 else 0


def _fdr_expected_table(n: int):
    """e(b) for all b in 0..n (e(0) = e(1) = 0)."""
    try:
        from ._kernels import fdr_expected_table
        return fdr_expected_table(n)
    except ImportError:  # pragma: no cover
        import numpy as np
        b = np.arange(n + 1, dtype=np.int64)
        b[0] = b[1] = 1
        r = np.ones(n + 1, dtype=np.int64)
        total = np.zeros(n + 1, dtype=np.float64)
        w = 1.0
        while True:
            total += r * w
            r = (2 * r) % b
            w *= 0.5
            if n * w < 1e-22 or not r.any():
                break
        total[0] = total[1] = 0.0
        return total


_COST_CACHE: Dict[str, object] = {}


def _cost_table(model: "CostModel", n: int):
    """per_draw_cost for 0..n as a float array, cached and grown on demand."""
    import numpy as np
    cached = _COST_CACHE.get(model.name)
    if cached is not None and len(cached) > n:
        return cached
    size = max(n + 1, 2 * len(cached) if cached is not None else 0)
    if model.name == "exact_fdr":
        table = _fdr_expected_table(size - 1)
    elif model.name == "ceil_log2":
        b = np.arange(size, dtype=np.int64)
        b[0] = 1
        # frexp is exact below 2**53: k = mant * 2**exp, power of two
        # exactly when mant == 0.5
        mant, exp = np.frexp(b.astype(np.float64))
        table = np.where(mant == 0.5, exp - 1, exp).astype(np.float64)
        table[0] = table[1] = 0.0
    else:
        table = np.array([model.per_draw_cost(k) for k in range(size)],
                         dtype=np.float64)
    _COST_CACHE[model.name] = table
    return table


@dataclass(frozen=True)
class CostModel:
    """Pluggable expected cost of one bounded uniform draw."""

    name: str
    per_draw_cost: Callable[[int], float]
    per_draw_cost_exact: Optional[Callable[[int], Fraction]] = None

    def __post_init__(self):
        if self.per_draw_cost(1) != 0:
            raise ValueError("per-draw cost of a single-outcome draw must be 0")

    @staticmethod
    def ceil_log2() -> "CostModel":
        """The idealized cost ceil(log2 k) per draw of bound k."""
        return CostModel("ceil_log2", lambda k: float(_ceil_log2(k)),
                         lambda k: Fraction(_ceil_log2(k)))

    @staticmethod
    def exact_fdr() -> "CostModel":
        """The exact fast-dice-roller expectation per draw."""
        return CostModel("exact_fdr", fdr_expected_bits,
                         fdr_expected_bits_exact)


def expected_fisher_yates_bits(n: int,
                               model: Optional[CostModel] = None) -> float:
    """Expected bit cost of a full Fisher-Yates pass over n elements."""
    model = model or CostModel.exact_fdr()
    if n < 2:
        return 0.0
    return float(_cost_table(model, n)[2:n + 1].sum())


def expected_merge_bits(n1: int, n2: int, model: Optional[CostModel] = None,
                        *, exact: bool = False,
                        range_cost: Optional[Callable[[int, int], float]] = None):
    """Expected bit cost of the in-place shuffled merge of sizes (n1, n2).

    Sums the two depletion cases: the first loop ends on the (n1+1)-th zero
    after i ones (weight C(n1+i, n1) / 2^(n1+1+i), word length n1+1+i, then
    insertion draws of bounds n1+i+1 .. n), and symmetrically for the
    (n2+1)-th one.  The per-draw insertion cost comes from the model; pass
    range_cost(m, n) to override the inner sum with a closed form.

    exact=True evaluates everything in big-integer rationals.
    """
    model = model or CostModel.exact_fdr()
    if n1 < 0 or n2 < 0:
        raise ValueError("sizes must be non-negative")
    if n1 == 0 or n2 == 0:
        return Fraction(0) if exact else 0.0
    n = n1 + n2
    if exact:
        cost = model.per_draw_cost_exact
        if cost is None:
            raise ValueError(f"model {model.name} has no exact form")
        suffix = [Fraction(0)] * (n + 2)
        for k in range(n, 1, -1):
            suffix[k] = suffix[k + 1] + cost(k)
        total = Fraction(0)
        for (a, b) in ((n1, n2), (n2, n1)):
            for i in range(b + 1):
                w = Fraction(math.comb(a + i, a), 1 << (a + 1 + i))
                m = a + 1 + i
                inner = (range_cost(m, n) if range_cost is not None
                         else suffix[m] if m <= n else Fraction(0))
                total += w * (m + inner)
        return total
    import numpy as np
    from scipy.special import gammaln
    ln2 = math.log(2.0)
    if range_cost is None:
        costs = _cost_table(model, n)
        suffix = np.zeros(n + 2, dtype=np.float64)
        suffix[2:n + 1] = costs[2:n + 1][::-1].cumsum()[::-1]
        inner = suffix
    else:
        inner = np.zeros(n + 2, dtype=np.float64)
        for m in range(2, n + 1):
            inner[m] = range_cost(m, n)
    total = 0.0
    for (a, b) in ((n1, n2), (n2, n1)):
        i = np.arange(b + 1, dtype=np.float64)
        lw = (gammaln(a + i + 1) - gammaln(a + 1) - gammaln(i + 1)
              - (a + 1 + i) * ln2)
        m = (a + 1 + np.arange(b + 1)).clip(0, n + 1)
        total += float(np.sum(np.exp(lw) * (a + 1 + i + inner[m])))
    return total


def expected_total_bits(n: int, cutoff: int,
                        model: Optional[CostModel] = None) -> float:
    """Expected total bit cost of the block merge shuffle for n a power of 2.

    Leaf blocks of size n >> c pay a full Fisher-Yates expectation each;
    every merge round then pays the merge expectation for its equal halves.
    """
    if n < 1 or n & (n - 1):
        raise ValueError(f"analytic total requires a power-of-two n, got {n}")
    model = model or CostModel.exact_fdr()
    c = 0
    while (n >> c) > cutoff:
        c += 1
    s = n >> c
    total = (1 << c) * expected_fisher_yates_bits(s, model)
    size = s
    while size < n:
        total += (n // (2 * size)) * expected_merge_bits(size, size, model)
        size *= 2
    return total


# ---------------------------------------------------------------------------
# permutation ranking (little-endian factorial base)
# ---------------------------------------------------------------------------


def permutation_rank(perm) -> int:
    """Rank in [0, n!): digit k (weight k!) counts entries left of position
    k that are smaller than perm[k]."""
    r = 0
    f = 1
    for k in range(1, len(perm)):
        f *= k
        d = 0
        pk = perm[k]
        for j in range(k):
            if perm[j] < pk:
                d += 1
        r += d * f
    return r


# ---------------------------------------------------------------------------
# the exact-distribution oracle
# ---------------------------------------------------------------------------

_LANE = 128
_LANE_MASK = (1 << _LANE) - 1


@dataclass
class _Kernel:
    """Enumeration of one randomized stage over a probe range.

    entries maps (sigma, value) -> dyadic depth profile, where sigma is the
    permutation action on the range (as source indices) and value is the
    stage's returned datum (e.g. a split point).  Depth profiles are packed
    integers: lane d (128 bits wide) counts paths that terminate after
    exactly d bits.  alive packs, per depth d, the number of bit prefixes of
    length d still running (used to truncate exactly at any bit budget).
    """

    entries: Dict[Tuple[tuple, object], int]
    alive: int


_KERNEL_CACHE: Dict[tuple, _Kernel] = {}


def _enumerate_kernel(key: tuple, size: int, runner, cap: int) -> _Kernel:
    cached = _KERNEL_CACHE.get((key, cap))
    if cached is not None:
        return cached
    entries: Dict[Tuple[tuple, object], int] = {}
    alive = 0
    stack: List[List[int]] = [[]]
    while stack:
        prefix = stack.pop()
        probe = list(range(size))
        src = BitSource.from_tape(DrawTape(bits=prefix))
        try:
            val = runner(probe, src)
        except TapeExhausted:
            d = len(prefix)
            alive += 1 << (d * _LANE)
            if d < cap:
                stack.append(prefix + [1])
                stack.append(prefix + [0])
            continue
        if src.bits_consumed != len(prefix):
            raise AssertionError("stage completed without consuming the "
                                 "whole extension prefix")
        k = (tuple(probe), val)
        entries[k] = entries.get(k, 0) + (1 << (len(prefix) * _LANE))
    kern = _Kernel(entries=entries, alive=alive)
    _KERNEL_CACHE[(key, cap)] = kern
    return kern


def _stage_kernel(stage: tuple, cap: int) -> Tuple[int, int, _Kernel]:
    """Returns (offset, size, kernel) for a stage descriptor."""
    kind = stage[0]
    if kind == "fydraw":
        _, lo, i = stage
        size = i + 1
        bound = i + 1

        def run(probe, src):
            j = src.random_int(bound)
            probe[i], probe[j] = probe[j], probe[i]
            return None

        return lo, size, _enumerate_kernel(("fydraw", size), size, run, cap)
    if kind == "merge":
        _, j, k, l = stage
        n1, n2 = k - j, l - k

        def run(probe, src):
            merge(probe, MergeRange(0, n1, n2), src)
            return None

        return j, l - j, _enumerate_kernel(("merge", n1, n2), l - j, run, cap)
    if kind == "wordmerge":
        _, j, k, l = stage
        n1, n2 = k - j, l - k

        def run(probe, src):
            w = sample_word(n1, n2, src)
            interleave(probe, MergeRange(0, n1, n2),
                       InterleaveSpec(w, n1, n2))
            return None

        return j, l - j, _enumerate_kernel(("wordmerge", n1, n2), l - j, run,
                                           cap)
    if kind == "split":
        _, lo, hi, _cutoff = stage
        size = hi - lo

        def run(probe, src):
            return split_pass(probe, 0, size, src)

        return lo, size, _enumerate_kernel(("split", size), size, run, cap)
    raise ValueError(f"unknown stage kind {kind!r}")


def _expand_stage(stage: tuple, val) -> List[tuple]:
    if stage[0] != "split":
        return []
    _, lo, hi, cutoff = stage
    nz = val
    children: List[tuple] = []
    for (a, b) in ((lo, lo + nz), (lo + nz, hi)):
        size = b - a
        if size <= cutoff:
            children.extend(("fydraw", a, i) for i in range(size - 1, 0, -1))
        else:
            children.append(("split", a, b, cutoff))
    return children


def _fy_stages(lo: int, hi: int) -> List[tuple]:
    return [("fydraw", lo, i) for i in range(hi - lo - 1, 0, -1)]


def _initial_stages(algorithm: str, n: int, cutoff: Optional[int]) -> List[tuple]:
    if algorithm == "fy":
        return _fy_stages(0, n)
    if algorithm in ("merge", "merge_parallel"):
        cut = MERGE_CUTOFF_DEFAULT if cutoff is None else cutoff
        _, q, bounds = merge_plan(n, cut)
        stages: List[tuple] = []
        for i in range(q):
            stages.extend(_fy_stages(bounds[i], bounds[i + 1]))
        for level in merge_rounds(n, cut):
            for (j, k, l) in level:
                stages.append(("merge", j, k, l))
        return stages
    if algorithm in ("rs", "rs_parallel"):
        cut = RS_CUTOFF_DEFAULT if cutoff is None else cutoff
        if n <= cut:
            return _fy_stages(0, n)
        return [("split", 0, n, cut)]
    if algorithm == "balanced":
        stages = []
        for level in singleton_rounds(n):
            for (j, k, l) in level:
                if k - j > 0 and l - k > 0:
                    stages.append(("wordmerge", j, k, l))
        return stages
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass
class DistributionTable:
    """Exact dyadic output distribution of an enumerated shuffle.

    masses maps the rank of each observed output permutation to its
    accumulated probability; residual is the total mass of enumeration
    paths truncated at the bit cap.  masses + residual always sum to 1
    exactly.
    """

    n: int
    bit_cap: int
    masses: Dict[int, Fraction] = field(default_factory=dict)
    residual: Fraction = Fraction(0)

    def total_mass(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0)) + self.residual

    def max_deviation(self) -> Fraction:
        """Largest |mass - 1/n!| over all n! ranks (absent ranks count 0)."""
        target = Fraction(1, math.factorial(self.n))
        dev = max((abs(m - target) for m in self.masses.values()),
                  default=Fraction(0))
        if len(self.masses) < math.factorial(self.n):
            dev = max(dev, target)
        return dev

    def to_csv(self, fh) -> None:
        """rank, mass_numerator, mass_exponent rows (mass = num / 2^exp),
        then a residual row."""
        fh.write("rank,mass_numerator,mass_exponent\n")
        for rank in sorted(self.masses):
            num, exp = _dyadic_parts(self.masses[rank])
            fh.write(f"{rank},{num},{exp}\n")
        num, exp = _dyadic_parts(self.residual)
        fh.write(f"residual,{num},{exp}\n")


def _dyadic_parts(frac: Fraction) -> Tuple[int, int]:
    den = frac.denominator
    if den & (den - 1):
        raise ValueError(f"{frac} is not dyadic")
    return frac.numerator, den.bit_length() - 1


def exact_distribution(algorithm: str, n: int, *, bit_cap: int,
                       cutoff: Optional[int] = None) -> DistributionTable:
    """Enumerate the output distribution of a shuffle over all bit outcomes.

    Walks the algorithm's randomized stages; each stage's execution tree is
    enumerated by bit-level depth-first search of the real implementation,
    and stage results are composed with exact dyadic arithmetic, merging
    identical intermediate array states.  Paths that would exceed bit_cap
    total bits contribute to the residual instead.
    """
    if bit_cap < 1:
        raise ValueError("bit_cap must be >= 1")
    cap = bit_cap
    init = tuple(_initial_stages(algorithm, n, cutoff))
    ident = tuple(range(n))
    nodes: Dict[Tuple[tuple, tuple], int] = {(ident, init): 1}
    done: Dict[tuple, int] = {}
    residual_units = 0  # in units of 2^-cap
    keep_mask = (1 << ((cap + 1) * _LANE)) - 1
    while nodes:
        (arr, pending), poly = nodes.popitem()
        if not pending:
            done[arr] = done.get(arr, 0) + poly
            continue
        stage = pending[0]
        rest = pending[1:]
        off, size, kern = _stage_kernel(stage, cap)
        if kern.alive:
            residual_units += ((poly * kern.alive) >> (cap * _LANE)) & _LANE_MASK
        head = arr[:off]
        tail = arr[off + size:]
        mid = arr[off:off + size]
        for (sigma, val), leaf in kern.entries.items():
            newpoly = (poly * leaf) & keep_mask
            if not newpoly:
                continue
            new_arr = head + tuple(mid[s] for s in sigma) + tail
            key = (new_arr, tuple(_expand_stage(stage, val)) + rest)
            if key in nodes:
                nodes[key] += newpoly
            else:
                nodes[key] = newpoly
    table = DistributionTable(n=n, bit_cap=cap)
    for arr, poly in done.items():
        acc = 0
        d = 0
        while poly:
            cnt = poly & _LANE_MASK
            if cnt:
                acc += cnt << (cap - d)
            poly >>= _LANE
            d += 1
        table.masses[permutation_rank(arr)] = (
            table.masses.get(permutation_rank(arr), Fraction(0))
            + Fraction(acc, 1 << cap))
    table.residual = Fraction(residual_units, 1 << cap)
    return table


def draw_outcome_masses(bound: int, *, bit_cap: int
                        ) -> Tuple[Dict[int, Fraction], Fraction, Fraction]:
    """Exact execution-tree enumeration of random_int(bound).

    Returns (outcome masses, residual, expected bits over explored paths).
    """
    if bit_cap < 1:
        raise ValueError("bit_cap must be >= 1")

    def run(probe, src):
        return src.random_int(bound)

    kern = _enumerate_kernel(("draw", bound), 1, run, bit_cap)
    masses: Dict[int, Fraction] = {}
    expected = Fraction(0)
    for (_, val), leaf in kern.entries.items():
        acc = Fraction(0)
        d = 0
        poly = leaf
        while poly:
            cnt = poly & _LANE_MASK
            if cnt:
                acc += Fraction(cnt, 1 << d)
                expected += Fraction(cnt * d, 1 << d)
            poly >>= _LANE
            d += 1
        masses[val] = masses.get(val, Fraction(0)) + acc
    alive_cap = (kern.alive >> (bit_cap * _LANE)) & _LANE_MASK
    residual = Fraction(alive_cap, 1 << bit_cap)
    return masses, residual, expected


# ---------------------------------------------------------------------------
# chi-square uniformity
# ---------------------------------------------------------------------------


@dataclass
class ChiSquareResult:
    algorithm: str
    n: int
    trials: int
    statistic: float
    df: int
    threshold: float
    passed: bool


def chi_square_threshold(df: int, quantile: float = 0.999) -> float:
    from scipy.stats import chi2
    return float(chi2.ppf(quantile, df))


def chi_square_uniformity(algorithm, n: int, trials: int, seed: int, *,
                          cutoff: Optional[int] = None,
                          threads: int = 1) -> ChiSquareResult:
    """Pearson chi-square test of output uniformity over permutation ranks.

    Bins trials by Lehmer rank and tests against the uniform expectation at
    the 0.999 quantile of chi-square with n! - 1 degrees of freedom.  Trial
    t draws from substream t of the seed, so results do not depend on how
    trials are distributed over threads.  algorithm may be a registered
    name or any callable(arr, src).
    """
    nf = math.factorial(n)
    if trials < 10 * nf:
        raise ValueError(f"need at least {10 * nf} trials for n={n}, "
                         f"got {trials}")
    name = algorithm if isinstance(algorithm, str) else getattr(
        algorithm, "__name__", "custom")
    if isinstance(algorithm, str):
        from . import _kernels
        cut = _default_cutoff(algorithm, cutoff)
        counts = _kernels.chi_counts(algorithm, n, trials, seed, cut,
                                     threads=threads)
    else:
        counts = [0] * nf
        for t in range(trials):
            src = BitSource(substream_seed(seed, t))
            arr = list(range(n))
            algorithm(arr, src)
            counts[permutation_rank(arr)] += 1
    expected = trials / nf
    stat = float(sum((c - expected) ** 2 for c in counts) / expected)
    df = nf - 1
    threshold = chi_square_threshold(df)
    return ChiSquareResult(name, n, trials, stat, df, threshold,
                           stat < threshold)


def _default_cutoff(algorithm: str, cutoff: Optional[int]) -> int:
    if cutoff is not None:
        return cutoff
    if algorithm.startswith("merge"):
        return MERGE_CUTOFF_DEFAULT
    if algorithm.startswith("rs"):
        return RS_CUTOFF_DEFAULT
    return 1
