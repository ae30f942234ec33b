"""Statistical randomness test battery."""
from .battery import (BatteryConfig, BatteryReport, CALIBRATED_CONFIG, DEFAULT_CONFIG,
                      battery_score, eligibility_table, is_eligible,
                      run_battery, run_test)
from .special import erfc, igamc
from .tests import (ALL_TESTS, EligibilityError, TestId, TestOutcome,
                    UndefinedStatistic, approximate_entropy, berlekamp_massey,
                    binary_matrix_rank, block_frequency, cumulative_sums,
                    dft_spectral, frequency_monobit, linear_complexity,
                    longest_run_of_ones, maurers_universal,
                    non_overlapping_template, overlapping_template,
                    random_excursions, random_excursions_variant, runs, serial)

__all__ = [
    "ALL_TESTS", "BatteryConfig", "BatteryReport", "CALIBRATED_CONFIG", "DEFAULT_CONFIG",
    "EligibilityError", "TestId", "TestOutcome", "UndefinedStatistic",
    "approximate_entropy", "battery_score", "berlekamp_massey",
    "binary_matrix_rank", "block_frequency", "cumulative_sums",
    "dft_spectral", "eligibility_table", "erfc", "frequency_monobit",
    "igamc", "is_eligible", "linear_complexity", "longest_run_of_ones",
    "maurers_universal", "non_overlapping_template", "overlapping_template",
    "random_excursions", "random_excursions_variant", "run_battery",
    "run_test", "runs", "serial",
]
