"""Degree growth along random sequences of maps.

Monte Carlo estimators here reduce each trial to its category counts, so
the per-trial statistic ``sum_j count_j * log(deg_j)`` is computed with
``math.fsum`` and does not depend on the kernel backend or on the number of
worker threads.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import DEFAULT_TERM_CAP
from .errors import MathPreconditionError, NotAMorphismError, ResourceLimitError, ZeroVarianceError
from .maps import CompositionCache, MorphismStatus, Word, word_compose
from .random_model import (
    SequenceStream,
    category_counts,
    exact_expectation_n,
    expectation_log_deg,
    sample_word,
    variance_log_deg,
)

METHODS = ("closed_form", "birkhoff_mc", "kingman_mc", "exact_inf")


@dataclass(frozen=True)
class DeltaEstimate:
    point_estimate: float
    std_error: float
    method: str
    n_used: int = 0
    trials_used: int = 0
    table: tuple = ()  # (n, E_n/n, stderr, method) rows for Kingman estimates
    failures: tuple = ()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")


@dataclass(frozen=True)
class CltSample:
    n: int
    z_values: tuple
    sigma: float
    ks_distance: float


def _require_morphisms(measure, S=None):
    if measure.kind == "family":
        return  # shipped families consist of polynomial maps, which are morphisms
    S = S if S is not None else measure.maps
    for lab in measure.labels:
        status = S[lab].morphism_status
        if status is MorphismStatus.CERTIFIED_NON_MORPHISM:
            raise NotAMorphismError(f"map {lab!r} is not a morphism")
        if not status.is_morphism:
            raise NotAMorphismError(
                f"map {lab!r} has no morphism certificate; assert it explicitly to proceed"
            )


def _log_degrees(measure, S=None) -> list[float]:
    if measure.kind == "finite" and S is not None:
        return [math.log(S[lab].degree) for lab in measure.labels]
    return [math.log(measure.degree(c)) for c in range(measure.n_categories)]


# ---------------------------------------------------------------------------
# dynamical degree


def dyndeg_morphism(measure, S: Mapping | None = None) -> DeltaEstimate:
    """Weighted geometric mean of the degrees, exp(E_1[log deg])."""
    _require_morphisms(measure, S)
    return DeltaEstimate(math.exp(expectation_log_deg(measure, S)), 0.0, "closed_form")


def _trial_means(measure, n, trials, seed, threads, S=None, trial_start=0):
    logs = _log_degrees(measure, S)
    rows = category_counts(measure, seed, trials, n, threads=threads, trial_start=trial_start)
    return [math.fsum(c * lg for c, lg in zip(row, logs) if c) / n for row in rows]


def _delta_method(means: Sequence[float]) -> tuple[float, float]:
    """exp(mean) with standard error exp(mean) * sd / sqrt(trials)."""
    m = math.fsum(means) / len(means)
    se = statistics.stdev(means) / math.sqrt(len(means)) if len(means) > 1 else 0.0
    return math.exp(m), math.exp(m) * se


def dyndeg_birkhoff_mc(
    measure, n: int, trials: int, seed: int, threads: int = 1, S: Mapping | None = None
) -> DeltaEstimate:
    """Per trial the time average (1/n) sum log deg theta_i; exp of the mean over trials.

    The reported standard error comes from the delta method on the log scale:
    if the trial means have sample standard deviation s then
    se(exp(mean)) ~ exp(mean) * s / sqrt(trials).
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    _require_morphisms(measure, S)
    means = _trial_means(measure, n, trials, seed, threads, S)
    est, se = _delta_method(means)
    return DeltaEstimate(est, se, "birkhoff_mc", n, trials)


def _word_log_degree(S, labels, cache, cap):
    return math.log(word_compose(S, labels, cache, cap).degree)


def dyndeg_kingman_mc(
    measure,
    S: Mapping | None = None,
    n_list: Sequence[int] = (1, 2, 3, 4, 6, 8),
    trials: int = 200,
    seed: int = 0,
    budget: int = 4096,
    cap: int = DEFAULT_TERM_CAP,
    cache: CompositionCache | None = None,
) -> DeltaEstimate:
    """exp(min_n E_n[log deg gamma_n]/n) over n_list, with exact composed degrees.

    Levels with |S|^n <= budget are enumerated exactly; the rest are sampled.
    Words that exceed the term cap are skipped and listed in ``failures``.
    """
    if measure.kind != "finite":
        raise MathPreconditionError("Kingman estimation needs a finite measure")
    S = S if S is not None else measure.maps
    cache = cache if cache is not None else CompositionCache()
    rows = []
    failures = []
    for n in n_list:
        if n < 1:
            raise ValueError("levels must be positive")
        if len(measure.labels) ** n <= budget:
            ex = exact_expectation_n(measure, S, n, budget=budget, cache=cache, cap=cap)
            rows.append((n, ex.value / n, 0.0, "exact_inf"))
            continue
        vals = []
        for t in range(trials):
            labels = tuple(sample_word(measure, SequenceStream(seed, t), n))
            try:
                vals.append(_word_log_degree(S, labels, cache, cap) / n)
            except ResourceLimitError as exc:
                failures.append((n, Word(labels), str(exc)))
        if not vals:
            raise ResourceLimitError(f"every sampled word of length {n} exceeded the term cap")
        m = math.fsum(vals) / len(vals)
        se = statistics.stdev(vals) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
        rows.append((n, m, se, "kingman_mc"))
    best = min(rows, key=lambda r: r[1])
    est = math.exp(best[1])
    return DeltaEstimate(
        est, est * best[2], best[3], best[0], trials, tuple(rows), tuple(failures)
    )


# ---------------------------------------------------------------------------
# central limit statistics


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def ks_distance(samples: Sequence[float]) -> float:
    """Sup distance between the empirical CDF and the standard normal CDF.

    Tied values are handled as a single jump, comparing both one-sided limits.
    """
    xs = sorted(samples)
    N = len(xs)
    if N == 0:
        raise ValueError("no samples")
    worst = 0.0
    i = 0
    while i < N:
        j = i
        while j < N and xs[j] == xs[i]:
            j += 1
        phi = normal_cdf(xs[i])
        worst = max(worst, abs(phi - i / N), abs(j / N - phi))
        i = j
    return worst


def clt_sample(measure, n: int, trials: int, seed: int, threads: int = 1, S: Mapping | None = None) -> CltSample:
    """Z_n = sqrt(n)/sigma * ((1/n) log deg gamma_n - E_1[log deg]) per trial."""
    _require_morphisms(measure, S)
    sigma = math.sqrt(variance_log_deg(measure, S))
    if sigma <= 1e-12:
        raise ZeroVarianceError("log-degree has zero variance: all maps share one degree")
    mu = expectation_log_deg(measure, S)
    means = _trial_means(measure, n, trials, seed, threads, S)
    scale = math.sqrt(n) / sigma
    z = tuple(scale * (m - mu) for m in means)
    return CltSample(n, z, sigma, ks_distance(z))


# ---------------------------------------------------------------------------
# doubling blocks: a sequence whose degree growth has no limit


def doubling_block_word(k: int, labels: Sequence = ("a", "b")) -> Word:
    """Blocks of lengths 1, 2, 4, ..., 2^(k-1) alternating a, b, starting with a."""
    if k < 1:
        raise ValueError("k must be at least 1")
    a, b = labels
    out = []
    for j in range(k):
        out.extend([a if j % 2 == 0 else b] * (1 << j))
    return Word(out)


def doubling_block_exponents(k: int) -> tuple[int, int]:
    """(#a, #b) in the doubling-block word of length 2^k - 1, by geometric sums."""
    if k < 1:
        raise ValueError("k must be at least 1")
    e1 = (4 ** ((k + 1) // 2) - 1) // 3  # 1 + 4 + 16 + ...
    e2 = 2 * (4 ** (k // 2) - 1) // 3  # 2 + 8 + 32 + ...
    return e1, e2


def doubling_block_degree(k: int, d1: int, d2: int) -> tuple[int, int]:
    """Exponent pair (e1, e2) with deg = d1^e1 * d2^e2 for morphisms of degrees d1, d2."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees must be positive")
    return doubling_block_exponents(k)


def doubling_block_root(k: int, d1: int, d2: int) -> float:
    """deg(gamma_{2^k-1})^(1/(2^k-1))."""
    e1, e2 = doubling_block_exponents(k)
    return math.exp((e1 * math.log(d1) + e2 * math.log(d2)) / ((1 << k) - 1))


def doubling_block_closed_form(k: int) -> tuple[Fraction, Fraction]:
    """The commonly quoted closed form ((2/3)2^k - 1/3, (1/3)2^k - 2/3).

    It agrees with the true counts for odd k only; for even k the counts are
    ((2^k - 1)/3, 2(2^k - 1)/3).  Both give the same pair of subsequence
    limits d1^(2/3) d2^(1/3) (odd k) and d1^(1/3) d2^(2/3) (even k), and the
    formula is kept so reports can show the two side by side.
    """
    p = Fraction(1 << k)
    return (Fraction(2, 3) * p - Fraction(1, 3), Fraction(1, 3) * p - Fraction(2, 3))


def doubling_block_limits(d1: int, d2: int) -> tuple[float, float]:
    """(odd-k limit, even-k limit)."""
    l1, l2 = math.log(d1), math.log(d2)
    return math.exp((2 * l1 + l2) / 3), math.exp((l1 + 2 * l2) / 3)


@dataclass(frozen=True)
class SubadditivityReport:
    checked: int
    violations: tuple = field(default_factory=tuple)
    values: tuple = ()  # (n, E_n) pairs

    @property
    def passed(self) -> bool:
        return not self.violations


def subadditivity_check(measure, S=None, max_total: int = 6, budget: int = 4096, cache=None) -> SubadditivityReport:
    """E_{m+n} <= E_m + E_n for all m, n >= 1 with m + n <= max_total (exact enumeration)."""
    cache = cache if cache is not None else CompositionCache()
    E = {}
    for n in range(1, max_total + 1):
        E[n] = exact_expectation_n(measure, S, n, budget=budget, cache=cache).value
    viol = []
    checked = 0
    for m in range(1, max_total):
        for n in range(1, max_total - m + 1):
            checked += 1
            if E[m + n] > E[m] + E[n] + 1e-12 * max(1.0, E[m + n]):
                viol.append((m, n, E[m + n], E[m] + E[n]))
    return SubadditivityReport(checked, tuple(viol), tuple(sorted(E.items())))
