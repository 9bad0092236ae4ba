"""shufflekit: bit-economical random permutations, verified.

In-place shuffling algorithms driven by a metered random-bit source, exact
and statistical uniformity verification, analytic expected-bit models, and
a benchmarking CLI.
"""

from .bitstream import (BitSource, DrawTape, TapeExhausted, mix64,
                        read_tape, substream_seed, write_tape)
from .shufflers import (MERGE_CUTOFF_DEFAULT, MergeRange, ShuffleConfig,
                        ShuffleReport, fisher_yates, merge, merge_plan,
                        merge_rounds, merge_shuffle, merge_shuffle_parallel)
from .splitshuffle import (RS_CUTOFF_DEFAULT, rs_shuffle, rs_shuffle_parallel,
                           split_pass)
from .balanced import (BalancedWord, InterleaveSpec, balanced_shuffle,
                       interleave, sample_word)
from .verify import (ChiSquareResult, CostModel, DistributionTable,
                     chi_square_uniformity, draw_outcome_masses,
                     exact_distribution, expected_fisher_yates_bits,
                     expected_merge_bits, expected_total_bits,
                     fdr_expected_bits, fdr_expected_bits_exact,
                     permutation_rank)

__version__ = "0.1.0"

__all__ = [
    "BitSource", "DrawTape", "TapeExhausted", "mix64", "substream_seed",
    "read_tape", "write_tape",
    "MergeRange", "ShuffleConfig", "ShuffleReport",
    "MERGE_CUTOFF_DEFAULT", "RS_CUTOFF_DEFAULT",
    "fisher_yates", "merge", "merge_plan", "merge_rounds", "merge_shuffle",
    "merge_shuffle_parallel", "rs_shuffle", "rs_shuffle_parallel",
    "split_pass",
    "BalancedWord", "InterleaveSpec", "sample_word", "interleave",
    "balanced_shuffle",
    "ChiSquareResult", "CostModel", "DistributionTable",
    "chi_square_uniformity", "draw_outcome_masses", "exact_distribution",
    "expected_fisher_yates_bits", "expected_merge_bits",
    "expected_total_bits", "fdr_expected_bits", "fdr_expected_bits_exact",
    "permutation_rank",
]
