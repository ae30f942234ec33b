"""The fifteen randomness tests of the battery.

Every test takes a bit array (see :func:`rlprng.sequence.as_bits`) plus its
own parameters and returns a :class:`TestOutcome`.  A test raises
:class:`EligibilityError` when its statistic cannot be formed at the given
length, and :class:`UndefinedStatistic` when the statistic is undefined for
this particular input (e.g. a random walk that never returns to zero).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..sequence import as_bits
from .special import erfc, igamc, normal_cdf

ALPHA = 0.01


class TestId(str, enum.Enum):
    FREQUENCY = "frequency_monobit"
    BLOCK_FREQUENCY = "block_frequency"
    RUNS = "runs"
    LONGEST_RUN = "longest_run_of_ones"
    MATRIX_RANK = "binary_matrix_rank"
    DFT = "dft_spectral"
    NON_OVERLAPPING = "non_overlapping_template"
    OVERLAPPING = "overlapping_template"
    UNIVERSAL = "maurers_universal"
    LINEAR_COMPLEXITY = "linear_complexity"
    SERIAL = "serial"
    APPROXIMATE_ENTROPY = "approximate_entropy"
    CUMULATIVE_SUMS = "cumulative_sums"
    RANDOM_EXCURSIONS = "random_excursions"
    RANDOM_EXCURSIONS_VARIANT = "random_excursions_variant"

    __test__ = False  # not a pytest class

    def __str__(self):
        return self.value


ALL_TESTS = tuple(TestId)


class EligibilityError(ValueError):
    """The test cannot be run on a sequence of this length."""


class UndefinedStatistic(EligibilityError):
    """The statistic is undefined for this specific input."""


@dataclass(frozen=True)
class TestOutcome:
    """Result of one test.

    ``score`` is the mean of the P-values when every P-value reaches
    ``alpha`` and exactly 0 otherwise.
    """

    test: TestId
    p_values: tuple[float, ...]
    passed: bool
    score: float
    details: dict = field(default_factory=dict, compare=False, repr=False)
    diagnostic: str | None = None

    __test__ = False

    @classmethod
    def from_p_values(cls, test, p_values, alpha=ALPHA, **details):
        ps = tuple(float(min(1.0, max(0.0, p))) for p in np.ravel(p_values))
        if not ps:
            raise ValueError("a test outcome needs at least one P-value")
        if any(math.isnan(p) for p in ps):
            raise FloatingPointError(f"{test}: NaN P-value")
        passed = all(p >= alpha for p in ps)
        score = sum(ps) / len(ps) if passed else 0.0
        return cls(TestId(test), ps, passed, score, details)

    @classmethod
    def failure(cls, test, diagnostic):
        return cls(TestId(test), (0.0,), False, 0.0, {}, diagnostic)

    def to_dict(self):
        return {"test": self.test.value, "p_values": list(self.p_values),
                "passed": self.passed, "score": self.score}


def _require(cond, msg):
    if not cond:
        raise EligibilityError(msg)


def _pattern_counts(bits, k, cyclic=True):
    """Counts of every k-bit pattern (as integers, MSB first)."""
    if k <= 0:
        return np.zeros(1, dtype=np.int64)
    ext = np.concatenate([bits, bits[:k - 1]]) if cyclic else bits
    nwin = ext.size - k + 1
    idx = np.zeros(nwin, dtype=np.int64)
    for j in range(k):
        idx = (idx << 1) | ext[j:j + nwin]
    return np.bincount(idx, minlength=1 << k)


# ---------------------------------------------------------------- frequency

def frequency_monobit(bits, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    _require(n >= 1, "frequency_monobit needs n >= 1")
    s = 2 * int(bits.sum()) - n
    p = erfc(abs(s) / math.sqrt(n) / math.sqrt(2))
    return TestOutcome.from_p_values(TestId.FREQUENCY, p, alpha, s_n=s)


def block_frequency(bits, M, alpha=ALPHA):
    bits = as_bits(bits)
    _require(M >= 1, "block size must be >= 1")
    N = bits.size // M
    _require(N >= 1, f"block_frequency needs n >= M = {M}")
    pi = bits[:N * M].reshape(N, M).mean(axis=1)
    chi2 = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    p = igamc(N / 2.0, chi2 / 2.0)
    return TestOutcome.from_p_values(TestId.BLOCK_FREQUENCY, p, alpha,
                                     chi2=chi2, blocks=N)


def runs(bits, alpha=ALPHA):
    """Runs test; a failed frequency prerequisite yields P = 0."""
    bits = as_bits(bits)
    n = bits.size
    _require(n >= 1, "runs needs n >= 1")
    pi = bits.sum() / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n) or pi in (0.0, 1.0):
        return TestOutcome.from_p_values(TestId.RUNS, 0.0, alpha,
                                         prerequisite=False)
    v = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    q = pi * (1 - pi)
    p = erfc(abs(v - 2 * n * q) / (2 * math.sqrt(2 * n) * q))
    return TestOutcome.from_p_values(TestId.RUNS, p, alpha, runs=v)


# ------------------------------------------------------------- longest run

# (block size, lower category bound, upper category bound)
_LONGEST_RUN_LAYOUT = {8: (1, 4), 128: (4, 9), 10000: (10, 16)}


def longest_run_block_size(n):
    if n < 6272:
        return 8
    if n < 750000:
        return 128
    return 10000


@lru_cache(maxsize=None)
def longest_run_probabilities(M):
    """Category probabilities for the longest run of ones in M fair bits.

    Computed exactly: ``P(longest <= k)`` by dynamic programming over the
    length of the current trailing run.
    """
    lo, hi = _LONGEST_RUN_LAYOUT[M]

    def at_most(k):
        # state = length of trailing run of ones, must stay <= k
        dist = np.zeros(k + 1)
        dist[0] = 1.0
        for _ in range(M):
            nxt = np.zeros(k + 1)
            nxt[0] = dist.sum() * 0.5
            nxt[1:] = dist[:-1] * 0.5
            dist = nxt
        return dist.sum()

    cdf = [at_most(k) for k in range(lo, hi)]
    probs = [cdf[0]] + [cdf[i] - cdf[i - 1] for i in range(1, len(cdf))]
    probs.append(1.0 - cdf[-1])
    return np.array(probs)


def _longest_runs(blocks):
    """Longest run of ones in each row of a 2-D bit array."""
    run = np.zeros(blocks.shape[0], dtype=np.int64)
    best = np.zeros_like(run)
    for col in blocks.T:
        run = (run + 1) * col
        np.maximum(best, run, out=best)
    return best


def longest_run_of_ones(bits, M=None, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    M = longest_run_block_size(n) if M is None else M
    if M not in _LONGEST_RUN_LAYOUT:
        raise ValueError(f"unsupported longest-run block size {M}")
    N = n // M
    _require(N >= 1, f"longest_run_of_ones needs n >= M = {M}")
    lo, hi = _LONGEST_RUN_LAYOUT[M]
    longest = _longest_runs(bits[:N * M].reshape(N, M))
    counts = np.bincount(np.clip(longest, lo, hi) - lo, minlength=hi - lo + 1)
    probs = longest_run_probabilities(M)
    chi2 = float(np.sum((counts - N * probs) ** 2 / (N * probs)))
    K = hi - lo
    p = igamc(K / 2.0, chi2 / 2.0)
    return TestOutcome.from_p_values(TestId.LONGEST_RUN, p, alpha, chi2=chi2,
                                     counts=counts.tolist())


# ------------------------------------------------------------- matrix rank

def gf2_rank(rows):
    """Rank over GF(2) of a matrix given as an iterable of row bitmasks."""
    pivots = {}
    for r in rows:
        while r:
            h = r.bit_length() - 1
            if h in pivots:
                r ^= pivots[h]
            else:
                pivots[h] = r
                break
    return len(pivots)


def rank_probabilities(rows, cols):
    """Probabilities of full rank, full rank - 1, and anything lower."""
    def p_rank(r):
        logp = (r * (rows + cols - r) - rows * cols) * math.log(2)
        prod = 1.0
        for i in range(r):
            prod *= ((1 - 2.0 ** (i - rows)) * (1 - 2.0 ** (i - cols))
                     / (1 - 2.0 ** (i - r)))
        return math.exp(logp) * prod

    full = min(rows, cols)
    p_full = p_rank(full)
    p_minus = p_rank(full - 1) if full >= 1 else 0.0
    return np.array([p_full, p_minus, 1.0 - p_full - p_minus])


def binary_matrix_rank(bits, rows=32, cols=32, alpha=ALPHA):
    bits = as_bits(bits)
    N = bits.size // (rows * cols)
    _require(N >= 1, f"binary_matrix_rank needs n >= {rows * cols}")
    mats = bits[:N * rows * cols].reshape(N, rows, cols)
    weights = 1 << np.arange(cols - 1, -1, -1, dtype=object)
    full = min(rows, cols)
    counts = np.zeros(3, dtype=np.int64)
    for mat in mats:
        masks = [int(v) for v in mat.astype(object) @ weights]
        r = gf2_rank(masks)
        counts[0 if r == full else 1 if r == full - 1 else 2] += 1
    probs = rank_probabilities(rows, cols)
    chi2 = float(np.sum((counts - N * probs) ** 2 / (N * probs)))
    p = igamc(1.0, chi2 / 2.0)
    return TestOutcome.from_p_values(TestId.MATRIX_RANK, p, alpha, chi2=chi2,
                                     counts=counts.tolist())


# -------------------------------------------------------------------- DFT

def dft_spectral(bits, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    _require(n >= 2, "dft_spectral needs n >= 2")
    x = 2.0 * bits - 1.0
    mags = np.abs(np.fft.rfft(x))[: n // 2]
    threshold = math.sqrt(math.log(1 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int(np.count_nonzero(mags < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4)
    p = erfc(abs(d) / math.sqrt(2))
    return TestOutcome.from_p_values(TestId.DFT, p, alpha, n1=n1, d=d)


# --------------------------------------------------------------- templates

@lru_cache(maxsize=None)
def aperiodic_templates(m):
    """All m-bit templates with no proper prefix equal to a suffix."""
    out = []
    for v in range(1 << m):
        s = format(v, f"0{m}b")
        if all(s[:k] != s[m - k:] for k in range(1, m)):
            out.append(s)
    return tuple(out)


def template_length(n):
    return 3 if n < 1000 else 9


def non_overlapping_template(bits, m=None, blocks=8, templates=None,
                             alpha=ALPHA):
    """Non-overlapping template matching over ``blocks`` equal blocks.

    Aperiodic templates cannot overlap themselves, so the restart-after-match
    scan count equals the plain window count.
    """
    bits = as_bits(bits)
    n = bits.size
    m = template_length(n) if m is None else m
    N = blocks
    M = n // N
    _require(M >= m, f"non_overlapping_template needs n // {N} >= {m}")
    if templates is None:
        templates = aperiodic_templates(m)
    mat = bits[:N * M].reshape(N, M)
    nwin = M - m + 1
    wv = np.zeros((N, nwin), dtype=np.int64)
    for j in range(m):
        wv = (wv << 1) | mat[:, j:j + nwin]
    mu = (M - m + 1) / 2.0 ** m
    var = M * (1 / 2.0 ** m - (2 * m - 1) / 2.0 ** (2 * m))
    pvals, counts = [], []
    for t in templates:
        t = t if isinstance(t, str) else "".join(map(str, t))
        w = np.count_nonzero(wv == int(t, 2), axis=1)
        if not _is_aperiodic(t):
            w = np.array([_scan_count(row, t) for row in mat])
        chi2 = float(np.sum((w - mu) ** 2) / var)
        pvals.append(igamc(N / 2.0, chi2 / 2.0))
        counts.append(w.tolist())
    return TestOutcome.from_p_values(TestId.NON_OVERLAPPING, pvals, alpha,
                                     templates=list(templates), counts=counts)


def _is_aperiodic(t):
    m = len(t)
    return all(t[:k] != t[m - k:] for k in range(1, m))


def _scan_count(row, t):
    s = "".join(map(str, row.tolist()))
    count, i, m = 0, 0, len(t)
    while i <= len(s) - m:
        if s[i:i + m] == t:
            count += 1
            i += m
        else:
            i += 1
    return count


# NIST's corrected category probabilities for m = 9, M = 1032.
_OVERLAPPING_STANDARD = np.array(
    [0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865])


def overlapping_probabilities(m, M, K=5):
    if (m, M, K) == (9, 1032, 5):
        return _OVERLAPPING_STANDARD
    lam = (M - m + 1) / 2.0 ** m
    eta = lam / 2.0
    probs = [math.exp(-eta)]
    for u in range(1, K):
        s = sum(math.comb(u - 1, l - 1) * eta ** l / math.factorial(l)
                for l in range(1, u + 1))
        probs.append(math.exp(-eta) / 2 ** u * s)
    probs.append(1.0 - sum(probs))
    return np.array(probs)


def overlapping_template(bits, m=9, M=1032, template=None, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    _require(M >= m, "block size must be at least the template length")
    N = n // M
    _require(N >= 1, f"overlapping_template needs n >= M = {M}")
    t = "1" * m if template is None else template
    mat = bits[:N * M].reshape(N, M)
    nwin = M - m + 1
    wv = np.zeros((N, nwin), dtype=np.int64)
    for j in range(m):
        wv = (wv << 1) | mat[:, j:j + nwin]
    hits = np.count_nonzero(wv == int(t, 2), axis=1)
    K = 5
    counts = np.bincount(np.minimum(hits, K), minlength=K + 1)
    probs = overlapping_probabilities(m, M, K)
    chi2 = float(np.sum((counts - N * probs) ** 2 / (N * probs)))
    p = igamc(K / 2.0, chi2 / 2.0)
    return TestOutcome.from_p_values(TestId.OVERLAPPING, p, alpha, chi2=chi2,
                                     counts=counts.tolist())


# ------------------------------------------------------- Maurer universal

# expected value and variance of the statistic for L = 1..16
UNIVERSAL_TABLE = {
    1: (0.7326495, 0.690), 2: (1.5374383, 1.338), 3: (2.4016068, 1.901),
    4: (3.3112247, 2.358), 5: (4.2534266, 2.705), 6: (5.2177052, 2.954),
    7: (6.1962507, 3.125), 8: (7.1836656, 3.238), 9: (8.1764248, 3.311),
    10: (9.1723243, 3.356), 11: (10.170032, 3.384), 12: (11.168765, 3.401),
    13: (12.168070, 3.410), 14: (13.167693, 3.416), 15: (14.167488, 3.419),
    16: (15.167379, 3.421),
}


def universal_min_length(L):
    """Smallest n for block length L with Q = 10*2^L, K = 1000*2^L."""
    return (10 + 1000) * (1 << L) * L


def universal_block_length(n):
    """Largest L in 2..16 whose table row fits n, or None."""
    best = None
    for L in range(2, 17):
        if n >= universal_min_length(L):
            best = L
    return best


def maurers_universal(bits, L=None, Q=None, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    if L is None:
        L = universal_block_length(n)
        _require(L is not None,
                 f"maurers_universal needs n >= {universal_min_length(2)}")
    if not 2 <= L <= 16:
        # the variance correction c(L, K) is negative at L = 1
        raise ValueError(f"universal block length must be in 2..16, got {L}")
    Q = 10 * (1 << L) if Q is None else Q
    nblocks = n // L
    K = nblocks - Q
    _require(K >= 1, f"maurers_universal needs more than {Q} blocks of {L}")
    weights = 1 << np.arange(L - 1, -1, -1)
    vals = bits[:nblocks * L].reshape(nblocks, L) @ weights
    pos = np.arange(1, nblocks + 1)
    order = np.lexsort((pos, vals))
    sv, sp = vals[order], pos[order]
    prev = np.empty_like(sp)
    prev[1:] = sp[:-1]
    first = np.ones(sp.size, dtype=bool)
    first[1:] = sv[1:] != sv[:-1]
    prev[first] = 0
    test = sp > Q
    fn = float(np.sum(np.log2(sp[test] - prev[test]))) / K
    expected, variance = UNIVERSAL_TABLE[L]
    c = 0.7 - 0.8 / L + (4 + 32 / L) * K ** (-3 / L) / 15
    sigma = c * math.sqrt(variance / K)
    p = erfc(abs(fn - expected) / (math.sqrt(2) * sigma))
    return TestOutcome.from_p_values(TestId.UNIVERSAL, p, alpha, fn=fn, L=L,
                                     Q=Q, K=K)


# ------------------------------------------------------ linear complexity

def berlekamp_massey(bits):
    """Linear complexity of a bit sequence over GF(2).

    Connection polynomials are held as integers (bit i = coefficient of x^i)
    and the recent history of the sequence as a reversed integer window, so
    each discrepancy is a parity of an AND.
    """
    c, b = 1, 1
    L, m = 0, -1
    rev = 0
    for N, bit in enumerate(np.asarray(bits, dtype=np.uint8).tolist()):
        rev = (rev << 1) | bit
        if (c & rev).bit_count() & 1:
            t = c
            c ^= b << (N - m)
            if 2 * L <= N:
                L, m, b = N + 1 - L, N, t
    return L


LINEAR_COMPLEXITY_PROBS = np.array(
    [1 / 96, 1 / 32, 1 / 8, 1 / 2, 1 / 4, 1 / 16, 1 / 48])


def linear_complexity(bits, M=500, alpha=ALPHA):
    bits = as_bits(bits)
    N = bits.size // M
    _require(N >= 1, f"linear_complexity needs n >= M = {M}")
    blocks = bits[:N * M].reshape(N, M)
    Ls = np.array([berlekamp_massey(row) for row in blocks], dtype=float)
    sign = -1.0 if M % 2 else 1.0
    mu = M / 2 + (9 + (-1) ** (M + 1)) / 36 - (M / 3 + 2 / 9) / 2.0 ** M
    T = sign * (Ls - mu) + 2 / 9
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    cats = np.searchsorted(edges, T, side="left")
    counts = np.bincount(cats, minlength=7)
    probs = LINEAR_COMPLEXITY_PROBS
    chi2 = float(np.sum((counts - N * probs) ** 2 / (N * probs)))
    p = igamc(3.0, chi2 / 2.0)
    return TestOutcome.from_p_values(TestId.LINEAR_COMPLEXITY, p, alpha,
                                     chi2=chi2, counts=counts.tolist())


# ----------------------------------------------------- serial and entropy

def serial_pattern_length(n):
    return 3 if n >= 32 else 2


def _psi2(bits, k):
    if k <= 0:
        return 0.0
    n = bits.size
    counts = _pattern_counts(bits, k)
    return (2.0 ** k / n) * float(np.sum(counts.astype(float) ** 2)) - n


def serial(bits, m=None, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    m = serial_pattern_length(n) if m is None else m
    _require(m >= 1 and n >= m, f"serial needs n >= m = {m}")
    psi_m, psi_1, psi_2 = _psi2(bits, m), _psi2(bits, m - 1), _psi2(bits, m - 2)
    d1 = psi_m - psi_1
    d2 = psi_m - 2 * psi_1 + psi_2
    p1 = igamc(2.0 ** (m - 2), max(d1, 0.0) / 2)
    p2 = igamc(2.0 ** (m - 3), max(d2, 0.0) / 2)
    return TestOutcome.from_p_values(TestId.SERIAL, [p1, p2], alpha,
                                     psi2=psi_m, del1=d1, del2=d2)


def apen_pattern_length(n):
    return 2 if n >= 64 else 1


def _phi(bits, k):
    if k <= 0:
        return 0.0
    c = _pattern_counts(bits, k)
    c = c[c > 0] / bits.size
    return float(np.sum(c * np.log(c)))


def approximate_entropy(bits, m=None, alpha=ALPHA):
    bits = as_bits(bits)
    n = bits.size
    m = apen_pattern_length(n) if m is None else m
    _require(m >= 1 and n >= m + 1, f"approximate_entropy needs n >= {m + 1}")
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi2 = max(2.0 * n * (math.log(2) - apen), 0.0)
    p = igamc(2.0 ** (m - 1), chi2 / 2.0)
    return TestOutcome.from_p_values(TestId.APPROXIMATE_ENTROPY, p, alpha,
                                     apen=apen, chi2=chi2)


# -------------------------------------------------------- cumulative sums

def _cusum_p(n, z):
    sq = math.sqrt(n)
    total = 1.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        total -= normal_cdf((4 * k + 1) * z / sq) - normal_cdf((4 * k - 1) * z / sq)
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        total += normal_cdf((4 * k + 3) * z / sq) - normal_cdf((4 * k + 1) * z / sq)
    return total


def cumulative_sums(bits, mode="both", alpha=ALPHA):
    """Cumulative sums test; ``mode`` is forward, backward or both."""
    bits = as_bits(bits)
    n = bits.size
    _require(n >= 1, "cumulative_sums needs n >= 1")
    x = 2 * bits.astype(np.int64) - 1
    modes = {"forward": ("forward",), "backward": ("backward",),
             "both": ("forward", "backward")}[mode]
    pvals, zs = [], []
    for md in modes:
        s = np.cumsum(x if md == "forward" else x[::-1])
        z = int(np.max(np.abs(s)))
        zs.append(z)
        pvals.append(_cusum_p(n, z))
    return TestOutcome.from_p_values(TestId.CUMULATIVE_SUMS, pvals, alpha,
                                     z=zs)


# ------------------------------------------------------ random excursions

EXCURSION_STATES = (-4, -3, -2, -1, 1, 2, 3, 4)
VARIANT_STATES = tuple(x for x in range(-9, 10) if x)


def _walk(bits):
    """Partial sums and cycle count J; undefined if the walk never returns."""
    s = np.cumsum(2 * bits.astype(np.int64) - 1)
    zeros = int(np.count_nonzero(s == 0))
    if zeros == 0:
        raise UndefinedStatistic("random walk never returns to zero (J = 0)")
    J = zeros + (1 if s[-1] != 0 else 0)
    return s, J


def excursion_probabilities(x):
    a = abs(x)
    q = 1 - 1 / (2 * a)
    probs = [q] + [1 / (4 * a * a) * q ** (k - 1) for k in range(1, 5)]
    probs.append(1 / (2 * a) * q ** 4)
    return np.array(probs)


def random_excursions(bits, alpha=ALPHA):
    bits = as_bits(bits)
    _require(bits.size >= 1, "random_excursions needs n >= 1")
    s, J = _walk(bits)
    cycle = np.cumsum(s == 0)
    pvals, tables = [], {}
    for x in EXCURSION_STATES:
        visits = np.bincount(cycle[s == x], minlength=J)[:J]
        counts = np.bincount(np.minimum(visits, 5), minlength=6)
        probs = excursion_probabilities(x)
        chi2 = float(np.sum((counts - J * probs) ** 2 / (J * probs)))
        pvals.append(igamc(2.5, chi2 / 2.0))
        tables[x] = counts.tolist()
    return TestOutcome.from_p_values(TestId.RANDOM_EXCURSIONS, pvals, alpha,
                                     J=J, counts=tables)


def random_excursions_variant(bits, alpha=ALPHA):
    bits = as_bits(bits)
    _require(bits.size >= 1, "random_excursions_variant needs n >= 1")
    s, J = _walk(bits)
    pvals, xis = [], {}
    for x in VARIANT_STATES:
        xi = int(np.count_nonzero(s == x))
        xis[x] = xi
        pvals.append(erfc(abs(xi - J) / math.sqrt(2.0 * J * (4 * abs(x) - 2))))
    return TestOutcome.from_p_values(TestId.RANDOM_EXCURSIONS_VARIANT, pvals,
                                     alpha, J=J, xi=xis)
