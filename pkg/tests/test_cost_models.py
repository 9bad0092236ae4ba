import math
from fractions import Fraction

import pytest

from shufflekit.verify import (CostModel, expected_fisher_yates_bits,
                               expected_merge_bits, expected_total_bits,
                               fdr_expected_bits, fdr_expected_bits_exact)


def test_fdr_expected_exact_values():
    assert fdr_expected_bits_exact(2) == 1
    assert fdr_expected_bits_exact(3) == Fraction(8, 3)
    assert fdr_expected_bits_exact(4) == 2
    assert fdr_expected_bits_exact(5) == Fraction(18, 5)
    assert fdr_expected_bits_exact(6) == Fraction(11, 3)
    assert fdr_expected_bits_exact(7) == Fraction(24, 7)
    assert fdr_expected_bits_exact(8) == 3


def test_fdr_expected_float_agrees_with_exact():
    for b in list(range(2, 50)) + [997, 4096, 10**6 + 3]:
        assert fdr_expected_bits(b) == pytest.approx(
            float(fdr_expected_bits_exact(b)), rel=1e-12)


def test_cost_model_contracts():
    for model in (CostModel.ceil_log2(), CostModel.exact_fdr()):
        assert model.per_draw_cost(1) == 0
        prev = 0.0
        for k in range(2, 300):
            c = model.per_draw_cost(k)
            assert c >= prev - 1e-12  # nondecreasing in k
            prev = c


def test_ceil_log2_model_values():
    m = CostModel.ceil_log2()
    assert [m.per_draw_cost(k) for k in (1, 2, 3, 4, 5, 8, 9)] == \
        [0, 1, 2, 2, 3, 3, 4]


def test_expected_merge_bits_unit_pair_hand_expansion():
    # two singleton sides: both depletion sums expand to 3/4 + 3/4 each
    value = expected_merge_bits(1, 1, CostModel.ceil_log2(), exact=True)
    assert value == 3
    assert expected_merge_bits(1, 1, CostModel.exact_fdr(), exact=True) == 3


def test_expected_merge_bits_degenerate():
    assert expected_merge_bits(0, 0) == 0
    assert expected_merge_bits(0, 5) == 0
    assert expected_merge_bits(7, 0) == 0


def test_expected_merge_bits_symmetry():
    model = CostModel.exact_fdr()
    for (a, b) in ((1, 2), (2, 5), (3, 17), (64, 128)):
        assert expected_merge_bits(a, b, model) == pytest.approx(
            expected_merge_bits(b, a, model), rel=1e-12)


def test_expected_merge_bits_exact_matches_float():
    model = CostModel.exact_fdr()
    for (a, b) in ((1, 2), (2, 2), (3, 5), (8, 8)):
        assert expected_merge_bits(a, b, model) == pytest.approx(
            float(expected_merge_bits(a, b, model, exact=True)), rel=1e-10)


def test_depletion_weights_sum_to_one():
    # the two case weights C(a+i,a)/2^(a+1+i) must exhaust the probability
    for (a, b) in ((1, 1), (2, 3), (5, 8), (40, 17)):
        total = Fraction(0)
        for (x, y) in ((a, b), (b, a)):
            for i in range(y + 1):
                total += Fraction(math.comb(x + i, x), 1 << (x + 1 + i))
        assert total == 1


def test_insertion_sum_bounds_sandwich():
    # closed-form bounds log2(m)(n-m+1) <= sum ceil(log2 k) <= log2(n)(n-m+1)
    model = CostModel.ceil_log2()
    lo_form = lambda m, n: math.log2(m) * (n - m + 1) if m >= 1 else 0.0
    hi_form = lambda m, n: math.log2(n) * (n - m + 1) if m >= 1 else 0.0
    for (a, b) in ((2, 2), (4, 7), (16, 16), (50, 30)):
        lo = expected_merge_bits(a, b, model, range_cost=lo_form)
        mid = expected_merge_bits(a, b, model)
        hi = expected_merge_bits(a, b, model, range_cost=hi_form)
        assert lo <= mid + 1e-9
        assert mid <= hi + 1e-9


def test_merge_bits_asymptotic_band():
    # (E - n) / (sqrt(n) log2 n) stays in a fixed band across the dyadic grid
    model = CostModel.exact_fdr()
    for j in range(6, 13):
        h = 1 << j
        n = 2 * h
        e = expected_merge_bits(h, h, model)
        norm = (e - n) / (math.sqrt(n) * math.log2(n))
        assert 0.3 < norm < 1.1, (j, norm)


def test_expected_total_bits_pure_fisher_yates_case():
    # n == cutoff: zero merge rounds, pure Fisher-Yates expectation
    model = CostModel.exact_fdr()
    n = 64
    assert expected_total_bits(n, 64, model) == pytest.approx(
        expected_fisher_yates_bits(n, model), rel=1e-12)


def test_expected_total_bits_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        expected_total_bits(100, 16)


def test_expected_total_bits_composition():
    model = CostModel.exact_fdr()
    # one merge round: 2 blocks of 8 plus one (8, 8) merge
    v = expected_total_bits(16, 8, model)
    want = 2 * expected_fisher_yates_bits(8, model) + \
        expected_merge_bits(8, 8, model)
    assert v == pytest.approx(want, rel=1e-12)


def test_expected_total_bits_ratio_approaches_information_rate():
    model = CostModel.exact_fdr()
    prev = None
    for m in (10, 12, 14, 16, 18, 20):
        n = 1 << m
        ratio = expected_total_bits(n, 1 << 7, model) / (n * m)
        assert 0.95 < ratio < 1.35
        if prev is not None:
            assert ratio < prev + 1e-9  # monotone approach from above
        prev = ratio
    assert abs(prev - 1.0) < 0.08
