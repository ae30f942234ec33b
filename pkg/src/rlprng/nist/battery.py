"""Battery configuration, eligibility and the aggregate score."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from ..sequence import as_bits
from . import tests as T
from .tests import ALL_TESTS, EligibilityError, TestId, TestOutcome, UndefinedStatistic


@dataclass(frozen=True)
class BatteryConfig:
    """Parameters of the battery.

    ``None`` means "pick from the sequence length":

    * block_frequency_m: ``max(4, n // 10)``
    * longest_run_m: 8 below 6272 bits, 128 below 750000, else 10000
    * template_length: 3 below 1000 bits, else 9
    * universal_l: largest L with ``n >= 1010 * L * 2**L``
    * serial_m: 3 from 32 bits, else 2
    * apen_m: 2 from 64 bits, else 1

    ``min_lengths`` adds a per-test length floor on top of the structural
    requirement, and ``tests`` selects which tests take part at all.
    """

    alpha: float = 0.01
    block_frequency_m: int | None = None
    longest_run_m: int | None = None
    matrix_rows: int = 32
    matrix_cols: int = 32
    template_length: int | None = None
    template_blocks: int = 8
    overlapping_length: int = 9
    overlapping_block: int = 1032
    universal_l: int | None = None
    linear_complexity_m: int = 500
    serial_m: int | None = None
    apen_m: int | None = None
    min_lengths: dict = field(default_factory=dict)
    tests: tuple = ALL_TESTS

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name not in ("alpha", "min_lengths", "tests") and v is not None and v < 1:
                raise ValueError(f"{f.name} must be >= 1, got {v}")
        object.__setattr__(self, "tests", tuple(TestId(t) for t in self.tests))
        object.__setattr__(self, "min_lengths",
                           {TestId(k): int(v) for k, v in self.min_lengths.items()})

    def __hash__(self):
        return hash(self.to_json())

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise KeyError(f"unknown battery keys: {sorted(unknown)}")
        d = dict(d)
        if "tests" in d:
            d["tests"] = tuple(d["tests"])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["tests"] = [t.value for t in self.tests]
        d["min_lengths"] = {k.value: v for k, v in self.min_lengths.items()}
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    # resolved per-length parameters
    def block_frequency_size(self, n):
        return self.block_frequency_m or max(4, n // 10)

    def longest_run_size(self, n):
        return self.longest_run_m or T.longest_run_block_size(n)

    def template_size(self, n):
        return self.template_length or T.template_length(n)

    def universal_size(self, n):
        return self.universal_l or T.universal_block_length(n)

    def serial_size(self, n):
        return self.serial_m or T.serial_pattern_length(n)

    def apen_size(self, n):
        return self.apen_m or T.apen_pattern_length(n)


DEFAULT_CONFIG = BatteryConfig()


def _structural_min_length(test, n, cfg):
    """Smallest length at which the test's statistic can be formed."""
    if test in (TestId.FREQUENCY, TestId.RUNS, TestId.CUMULATIVE_SUMS,
                TestId.RANDOM_EXCURSIONS, TestId.RANDOM_EXCURSIONS_VARIANT):
        return 1
    if test is TestId.DFT:
        return 2
    if test is TestId.BLOCK_FREQUENCY:
        return cfg.block_frequency_size(n)
    if test is TestId.LONGEST_RUN:
        return cfg.longest_run_size(n)
    if test is TestId.MATRIX_RANK:
        return cfg.matrix_rows * cfg.matrix_cols
    if test is TestId.NON_OVERLAPPING:
        return cfg.template_blocks * cfg.template_size(n)
    if test is TestId.OVERLAPPING:
        return cfg.overlapping_block
    if test is TestId.UNIVERSAL:
        L = cfg.universal_size(n)
        return T.universal_min_length(2 if L is None else L)
    if test is TestId.LINEAR_COMPLEXITY:
        return cfg.linear_complexity_m
    if test is TestId.SERIAL:
        return cfg.serial_size(n)
    if test is TestId.APPROXIMATE_ENTROPY:
        return cfg.apen_size(n) + 1
    raise KeyError(test)


def is_eligible(test, n, config=DEFAULT_CONFIG):
    test = TestId(test)
    if test not in config.tests:
        return False
    floor = max(_structural_min_length(test, n, config),
                config.min_lengths.get(test, 0))
    return n >= floor


def eligibility_table(n, config=DEFAULT_CONFIG):
    return {t.value: is_eligible(t, n, config) for t in ALL_TESTS}


def run_test(test, bits, config=DEFAULT_CONFIG):
    """Run a single test with parameters resolved from ``config``."""
    test = TestId(test)
    bits = as_bits(bits)
    n, a = bits.size, config.alpha
    if test is TestId.FREQUENCY:
        return T.frequency_monobit(bits, alpha=a)
    if test is TestId.BLOCK_FREQUENCY:
        return T.block_frequency(bits, config.block_frequency_size(n), alpha=a)
    if test is TestId.RUNS:
        return T.runs(bits, alpha=a)
    if test is TestId.LONGEST_RUN:
        return T.longest_run_of_ones(bits, config.longest_run_size(n), alpha=a)
    if test is TestId.MATRIX_RANK:
        return T.binary_matrix_rank(bits, config.matrix_rows,
                                    config.matrix_cols, alpha=a)
    if test is TestId.DFT:
        return T.dft_spectral(bits, alpha=a)
    if test is TestId.NON_OVERLAPPING:
        return T.non_overlapping_template(bits, config.template_size(n),
                                          config.template_blocks, alpha=a)
    if test is TestId.OVERLAPPING:
        return T.overlapping_template(bits, config.overlapping_length,
                                      config.overlapping_block, alpha=a)
    if test is TestId.UNIVERSAL:
        return T.maurers_universal(bits, config.universal_size(n), alpha=a)
    if test is TestId.LINEAR_COMPLEXITY:
        return T.linear_complexity(bits, config.linear_complexity_m, alpha=a)
    if test is TestId.SERIAL:
        return T.serial(bits, config.serial_size(n), alpha=a)
    if test is TestId.APPROXIMATE_ENTROPY:
        return T.approximate_entropy(bits, config.apen_size(n), alpha=a)
    if test is TestId.CUMULATIVE_SUMS:
        return T.cumulative_sums(bits, "both", alpha=a)
    if test is TestId.RANDOM_EXCURSIONS:
        return T.random_excursions(bits, alpha=a)
    if test is TestId.RANDOM_EXCURSIONS_VARIANT:
        return T.random_excursions_variant(bits, alpha=a)
    raise KeyError(test)


@dataclass(frozen=True)
class BatteryReport:
    outcomes: tuple[TestOutcome, ...]
    ineligible: tuple[TestId, ...]
    score: float

    def to_dict(self):
        return {
            "score": self.score,
            "outcomes": [o.to_dict() for o in self.outcomes],
            "ineligible": [t.value for t in self.ineligible],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def outcome(self, test):
        test = TestId(test)
        for o in self.outcomes:
            if o.test is test:
                return o
        return None


def run_battery(bits, config=DEFAULT_CONFIG):
    """Run every eligible test and average their scores.

    Tests whose statistic turns out to be undefined for this input move to
    ``ineligible``; numeric failures inside a test count as a failed test
    with a diagnostic.
    """
    bits = as_bits(bits)
    n = bits.size
    outcomes, skipped = [], []
    for test in ALL_TESTS:
        if not is_eligible(test, n, config):
            skipped.append(test)
            continue
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                outcomes.append(run_test(test, bits, config))
        except UndefinedStatistic:
            skipped.append(test)
        except EligibilityError:
            skipped.append(test)
        except (ArithmeticError, ValueError) as exc:
            outcomes.append(TestOutcome.failure(test, f"{type(exc).__name__}: {exc}"))
    score = float(np.mean([o.score for o in outcomes])) if outcomes else 0.0
    return BatteryReport(tuple(outcomes), tuple(skipped), score)


def battery_score(bits, config=DEFAULT_CONFIG):
    return run_battery(bits, config).score


# Pass threshold chosen so that uniform fair-bit sequences score about 0.33
# at 80 bits and 0.35 at 200 bits; see docs/calibration.md.
CALIBRATED_CONFIG = BatteryConfig(alpha=0.35)
