import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
import vectors
from rlprng import sequence
from rlprng.nist import (ALL_TESTS, CALIBRATED_CONFIG, DEFAULT_CONFIG, BatteryConfig,
                         EligibilityError, TestId, UndefinedStatistic, battery_score,
                         eligibility_table, is_eligible, run_battery)
from rlprng.nist import tests as T
from rlprng.nist.special import erfc, igamc


def b(s):
    return np.array([int(c) for c in s], dtype=np.uint8)


CASES = vectors.build_cases()


# ------------------------------------------------------------------ oracles

@pytest.mark.parametrize("name", sorted(CASES))
def test_matches_direct_formula_oracle(name):
    cases = CASES[name]
    assert len(cases) >= 20
    for impl, oracle, bits in cases:
        assert vectors.max_deviation(impl, oracle, bits) <= 1e-4, (name, bits.size)


@pytest.mark.parametrize("k", range(1, 13))
def test_berlekamp_massey_matches_exhaustive_lfsr_search(k):
    expected = O.minimal_lfsr_lengths(k)
    for v in range(2 ** k):
        bits = [(v >> (k - 1 - i)) & 1 for i in range(k)]
        assert T.berlekamp_massey(bits) == expected[v], bits


def test_berlekamp_massey_agrees_with_list_version_on_long_inputs():
    rng = np.random.default_rng(3)
    for n in (50, 200, 500):
        bits = rng.integers(0, 2, n)
        assert T.berlekamp_massey(bits) == O.bm_classic(bits.tolist())


def test_longest_run_probabilities_exact():
    for M in (8, 128, 10000):
        np.testing.assert_allclose(T.longest_run_probabilities(M),
                                   O.longest_run_probs(M), atol=1e-12)
    # the familiar rounded table for M = 8
    np.testing.assert_allclose(T.longest_run_probabilities(8),
                               [0.2148, 0.3672, 0.2305, 0.1875], atol=1e-4)


def test_rank_probabilities_exact():
    for r, c in ((32, 32), (8, 8), (5, 7)):
        np.testing.assert_allclose(T.rank_probabilities(r, c), O.rank_probs(r, c),
                                   atol=1e-12)
    np.testing.assert_allclose(T.rank_probabilities(32, 32),
                               [0.2888, 0.5776, 0.1336], atol=1e-4)


def test_overlapping_probabilities_close_to_exact_chain():
    np.testing.assert_allclose(T.overlapping_probabilities(9, 1032),
                               O.overlapping_probs_exact(9, 1032), atol=1e-6)


def test_aperiodic_template_count():
    assert len(T.aperiodic_templates(9)) == 148
    assert T.aperiodic_templates(2) == ("01", "10")


# ------------------------------------------------------- special functions

@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 30.0))
def test_erfc_matches_mpmath(x):
    assert math.isclose(float(erfc(x)), O.erfc(x), rel_tol=1e-10, abs_tol=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 200.0), st.floats(0.0, 400.0))
def test_igamc_matches_mpmath(a, x):
    assert math.isclose(float(igamc(a, x)), O.igamc(a, x), rel_tol=1e-10, abs_tol=1e-300)


def test_igamc_domain():
    assert igamc(3.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        igamc(0.0, 1.0)
    with pytest.raises(ValueError):
        igamc(1.0, -1.0)


# -------------------------------------------------------- worked examples

def test_monobit_examples():
    assert T.frequency_monobit(b("0101010101")).p_values == (1.0,)
    assert T.frequency_monobit(b("1011010101")).p_values[0] == pytest.approx(0.527089, abs=1e-6)
    out = T.frequency_monobit(np.ones(100, np.uint8))
    assert out.p_values[0] < 1e-10 and not out.passed and out.score == 0.0


def test_block_frequency_examples():
    assert T.block_frequency(b("0110"), 2).p_values == (1.0,)
    assert T.block_frequency(b("0110011010"), 3).p_values[0] == pytest.approx(0.801252, abs=1e-6)
    assert not T.block_frequency(np.zeros(64, np.uint8), 8).passed


def test_runs_examples():
    out = T.runs(np.zeros(20, np.uint8))
    assert out.p_values == (0.0,) and not out.passed
    assert T.runs(b("1001101011")).p_values[0] == pytest.approx(0.147232, abs=1e-6)
    alt = T.runs(b("0101010101"))
    assert alt.p_values[0] == pytest.approx(O.runs([0, 1] * 5)[0], abs=1e-12)
    assert alt.p_values[0] == pytest.approx(0.0015654, abs=1e-6)
    assert not alt.passed


def test_longest_run_examples():
    rng = np.random.default_rng(0)
    out = T.longest_run_of_ones(rng.integers(0, 2, 80))
    assert 0 <= out.p_values[0] <= 1 and sum(out.details["counts"]) == 10
    ones = T.longest_run_of_ones(np.ones(128, np.uint8), 8)
    assert ones.details["counts"] == [0, 0, 0, 16]
    assert ones.p_values[0] < 1e-6 and not ones.passed


def test_matrix_rank_examples():
    with pytest.raises(EligibilityError):
        T.binary_matrix_rank(np.zeros(1000, np.uint8))
    zero = T.binary_matrix_rank(np.zeros(1024, np.uint8))
    assert zero.details["counts"] == [0, 0, 1]
    eye = T.binary_matrix_rank(np.eye(32, dtype=np.uint8).ravel())
    assert eye.details["counts"] == [1, 0, 0]
    assert T.gf2_rank([0b100, 0b010, 0b110]) == 2


def test_dft_examples():
    out = T.dft_spectral(b("1001010011"))
    assert out.p_values[0] == pytest.approx(O.dft([int(c) for c in "1001010011"])[0], abs=1e-12)
    assert out.details["n1"] == 5 and out.p_values[0] == pytest.approx(0.468160, abs=1e-6)
    with np.errstate(all="raise"):
        zero = T.dft_spectral(np.zeros(80, np.uint8))
    assert 0 <= zero.p_values[0] <= 1


def test_dft_fraction_below_threshold():
    rng = np.random.default_rng(11)
    fr = [T.dft_spectral(rng.integers(0, 2, 80)).details["n1"] / 40 for _ in range(1000)]
    assert np.mean(fr) == pytest.approx(0.95, abs=0.02)


def test_non_overlapping_examples():
    # one block, absent template
    out = T.non_overlapping_template(np.zeros(20, np.uint8), 3, blocks=1,
                                     templates=["111"])
    assert out.details["counts"] == [[0]] and 0 <= out.p_values[0] <= 1
    seq = "10100100101110010110"
    out = T.non_overlapping_template(b(seq), 3, blocks=2, templates=["001"])
    want = [O.scan_non_overlapping(seq[:10], "001"), O.scan_non_overlapping(seq[10:], "001")]
    assert out.details["counts"] == [want] == [[2, 1]]
    assert out.p_values[0] == pytest.approx(0.344154, abs=1e-6)
    with pytest.raises(EligibilityError):
        T.non_overlapping_template(b("10"), 3, blocks=1)


def test_non_overlapping_periodic_template_uses_scan():
    seq = b("1111111100000000")
    out = T.non_overlapping_template(seq, 2, blocks=1, templates=["11"])
    assert out.details["counts"] == [[4]]


def test_overlapping_examples():
    out = T.overlapping_template(np.ones(1032, np.uint8))
    assert out.details["counts"] == [0, 0, 0, 0, 0, 1]
    rng = np.random.default_rng(5)
    bits = rng.integers(0, 2, 1032)
    out = T.overlapping_template(bits)
    assert sum(out.details["counts"]) == 1 and 0 <= out.p_values[0] <= 1
    with pytest.raises(EligibilityError):
        T.overlapping_template(np.ones(1000, np.uint8))


def test_universal_examples():
    assert T.universal_min_length(2) == 8080
    assert not is_eligible(TestId.UNIVERSAL, 8079)
    assert is_eligible(TestId.UNIVERSAL, 8080)
    periodic = np.tile(b("01"), 4040)
    out = T.maurers_universal(periodic, 2)
    assert out.details["fn"] == 0.0 and out.p_values[0] < 1e-10


def test_linear_complexity_examples():
    assert T.berlekamp_massey(b("0001")) == 4
    assert T.berlekamp_massey(np.zeros(10, np.uint8)) == 0
    assert T.berlekamp_massey(b("1000000")) == 1
    assert T.berlekamp_massey(b("1101011110001")) == 4


def test_serial_examples():
    out = T.serial(b("0011011101"), 3)
    assert out.details["psi2"] == pytest.approx(2.8)
    assert out.p_values == pytest.approx((0.808792, 0.670320), abs=1e-6)
    zero = T.serial(np.zeros(100, np.uint8), 3)
    assert max(zero.p_values) < 1e-6


def test_serial_m1_matches_frequency_statistic():
    rng = np.random.default_rng(2)
    for _ in range(20):
        bits = rng.integers(0, 2, 200).astype(np.uint8)
        s = 2 * int(bits.sum()) - bits.size
        # psi^2_1 equals the squared normalised monobit statistic
        assert T._psi2(bits, 1) == pytest.approx(s * s / bits.size)


def test_approximate_entropy_examples():
    assert T.approximate_entropy(b("0100110101"), 3).p_values[0] == pytest.approx(0.261961, abs=1e-6)
    const = T.approximate_entropy(np.ones(100, np.uint8), 2)
    assert const.details["apen"] == pytest.approx(0.0, abs=1e-12)
    assert const.details["chi2"] == pytest.approx(200 * math.log(2))
    assert const.p_values[0] < 1e-10


def test_cumulative_sums_examples():
    out = T.cumulative_sums(b("1011010111"), "forward")
    assert out.details["z"] == [4]
    assert out.p_values[0] == pytest.approx(0.4116588, abs=1e-6)
    ones = T.cumulative_sums(np.ones(100, np.uint8))
    assert max(ones.p_values) < 1e-10
    pal = b("1101001011")
    both = T.cumulative_sums(np.concatenate([pal, pal[::-1]]))
    assert both.p_values[0] == both.p_values[1]


def test_random_excursions_examples():
    with pytest.raises(UndefinedStatistic):
        T.random_excursions(np.ones(50, np.uint8))
    out = T.random_excursions(b("0110110101"))
    assert out.details["J"] == 3
    assert len(out.p_values) == 8
    # x = +1 is the fifth state; the reference 0.502529 uses rounded probabilities
    assert out.p_values[4] == pytest.approx(0.502529, abs=1e-4)
    assert out.p_values[4] == pytest.approx(O.random_excursions([int(c) for c in "0110110101"])[4],
                                            abs=1e-12)
    for counts in out.details["counts"].values():
        assert sum(counts) == 3


def test_random_excursions_variant_examples():
    with pytest.raises(UndefinedStatistic):
        T.random_excursions_variant(np.ones(50, np.uint8))
    out = T.random_excursions_variant(b("0110110101"))
    assert out.details["J"] == 3 and out.details["xi"][1] == 4
    assert out.p_values[T.VARIANT_STATES.index(1)] == pytest.approx(0.683091, abs=1e-6)
    # a state visited exactly J times has P = 1
    bits = b("10" * 6)
    out = T.random_excursions_variant(bits)
    assert out.p_values[T.VARIANT_STATES.index(1)] == 1.0


# ---------------------------------------------------- statistical behaviour

@pytest.mark.parametrize("fn,n", [
    (lambda x: T.longest_run_of_ones(x), 100),
    (lambda x: T.maurers_universal(x), 387_840),
    (lambda x: T.approximate_entropy(x, 2), 200),
])
def test_p_values_roughly_uniform(fn, n):
    from scipy import stats
    rng = np.random.default_rng(42)
    trials = 200
    ps = [fn(rng.integers(0, 2, n).astype(np.uint8)).p_values[0] for _ in range(trials)]
    # discrete statistics make P-values lumpy; a loose KS bound suffices
    assert stats.kstest(ps, "uniform").pvalue > 1e-4


def test_universal_small_block_spread_exceeds_nominal_sigma():
    # c(L, K) was fitted for L >= 6; at L = 2 the statistic's spread is about
    # 1.5x the nominal sigma, so small-L P-values are too small on fair bits
    rng = np.random.default_rng(0)
    fns = [T.maurers_universal(rng.integers(0, 2, 10_000).astype(np.uint8), 2).details["fn"]
           for _ in range(200)]
    K = 5000 - 40
    c = 0.7 - 0.8 / 2 + (4 + 16) * K ** -1.5 / 15
    nominal = c * math.sqrt(T.UNIVERSAL_TABLE[2][1] / K)
    assert np.mean(fns) == pytest.approx(T.UNIVERSAL_TABLE[2][0], abs=2e-3)
    assert np.std(fns) > 1.3 * nominal


# ---------------------------------------------------------- eligibility

def test_eligibility_examples():
    assert is_eligible(TestId.FREQUENCY, 1)
    assert not is_eligible(TestId.MATRIX_RANK, 80)
    assert not is_eligible("frequency_monobit", 1, BatteryConfig(tests=("runs",)))
    assert not is_eligible(TestId.RUNS, 80, BatteryConfig(min_lengths={"runs": 100}))


ELIGIBLE_80 = {
    "frequency_monobit", "block_frequency", "runs", "longest_run_of_ones",
    "dft_spectral", "non_overlapping_template", "serial",
    "approximate_entropy", "cumulative_sums", "random_excursions",
    "random_excursions_variant",
}


def test_eligibility_table_at_80_and_200_bits():
    for n in (80, 200):
        table = eligibility_table(n)
        assert {k for k, v in table.items() if v} == ELIGIBLE_80
        assert eligibility_table(n, CALIBRATED_CONFIG) == table


def test_documented_eligibility_table_is_current():
    import pathlib
    doc = pathlib.Path(__file__).parents[1] / "docs" / "eligibility.md"
    text = doc.read_text()
    for n in (80, 200):
        for name, ok in eligibility_table(n).items():
            row = f"| {n} | {name} | {'yes' if ok else 'no'} |"
            assert row in text, row


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400))
def test_eligible_tests_never_raise_eligibility_error_structurally(n):
    rng = np.random.default_rng(n)
    bits = rng.integers(0, 2, n).astype(np.uint8)
    report = run_battery(bits)
    for o in report.outcomes:
        assert o.diagnostic is None, o
    ran = {o.test for o in report.outcomes}
    for t in ALL_TESTS:
        if t in ran:
            assert is_eligible(t, n)


# -------------------------------------------------------------- battery

def test_empty_sequence_scores_zero():
    report = run_battery(np.zeros(0, np.uint8))
    assert report.score == 0.0 and report.outcomes == ()


def test_score_is_mean_of_eligible_scores():
    rng = np.random.default_rng(9)
    bits = rng.integers(0, 2, 200)
    r = run_battery(bits)
    assert r.score == pytest.approx(np.mean([o.score for o in r.outcomes]))
    for o in r.outcomes:
        assert o.score == (np.mean(o.p_values) if o.passed else 0.0)
        assert o.passed == all(p >= DEFAULT_CONFIG.alpha for p in o.p_values)


def test_all_ones_walk_moves_excursions_to_ineligible():
    r = run_battery(np.ones(80, np.uint8))
    assert TestId.RANDOM_EXCURSIONS in r.ineligible
    assert TestId.RANDOM_EXCURSIONS_VARIANT in r.ineligible
    # only the spectral and template tests are blind to a constant sequence
    passing = {o.test for o in r.outcomes if o.passed}
    assert passing <= {TestId.DFT, TestId.NON_OVERLAPPING}
    assert r.score < 0.1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=0, max_size=300))
def test_score_in_unit_interval(bits):
    for cfg in (DEFAULT_CONFIG, CALIBRATED_CONFIG):
        s = battery_score(np.array(bits, dtype=np.uint8), cfg)
        assert 0.0 <= s <= 1.0


def test_battery_is_deterministic():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, 200)
    assert run_battery(bits).to_json() == run_battery(bits.copy()).to_json()


def test_table_row_two_score_window():
    row = [22, -113, 34, -111, 44, 42, 63, 114, -63, -41]
    bits = sequence.to_bits(row, 8)
    for cfg in (DEFAULT_CONFIG, CALIBRATED_CONFIG):
        assert abs(battery_score(bits, cfg) - 0.57) <= 0.15


def test_report_json_layout():
    r = run_battery(np.random.default_rng(0).integers(0, 2, 80))
    d = r.to_dict()
    assert list(d) == ["score", "outcomes", "ineligible"]
    assert "binary_matrix_rank" in d["ineligible"]


def test_config_round_trip_and_rejects_unknown():
    cfg = BatteryConfig(alpha=0.2, min_lengths={"runs": 50}, tests=("runs", "serial"))
    assert BatteryConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(KeyError):
        BatteryConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        BatteryConfig(alpha=0.0)


def test_numeric_failure_becomes_failed_outcome(monkeypatch):
    def boom(bits, alpha=0.01):
        raise FloatingPointError("overflow")
    monkeypatch.setattr(T, "runs", boom)
    r = run_battery(np.random.default_rng(0).integers(0, 2, 80))
    o = r.outcome(TestId.RUNS)
    assert not o.passed and o.score == 0.0 and "overflow" in o.diagnostic
