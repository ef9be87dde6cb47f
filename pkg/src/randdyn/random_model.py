"""The pair (S, nu) and seeded i.i.d. sequences of maps.

Random draws are counter based: draw ``k`` of trial ``t`` under master seed
``s`` is ``splitmix64`` applied to a key derived from ``(s, t)`` plus
``k``, so any position of any trial can be read without replaying a
generator.  Shifting a stream just moves its start position.

Sampling a category from a 64-bit draw ``u`` is an exact inverse CDF:
with thresholds ``T_i = ceil(2^64 * CDF(i))`` the category is the first
``i`` with ``u < T_i`` (``u < x`` iff ``u < ceil(x)`` for integer ``u``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import kernels
from .errors import BudgetExceededError, ConfigError, MathPreconditionError
from .maps import CompositionCache, RationalMap, compose, parse_map

TWO64 = 1 << 64


def exact_thresholds(cdf: Sequence[Fraction]) -> list[int]:
    """ceil(2^64 * c) for each cumulative probability, dropping the tail at 2^64."""
    out = []
    for c in cdf:
        t = -((-c.numerator * TWO64) // c.denominator)
        if t >= TWO64:
            break
        out.append(t)
    return out


@dataclass(frozen=True)
class SequenceStream:
    """Random-access view of one i.i.d. sequence (one trial)."""

    seed: int
    trial: int = 0
    position: int = 0

    def draw(self, k: int = 0) -> int:
        return kernels.draw_u64(self.seed, self.trial, self.position + k)

    def draws(self, count: int, k: int = 0) -> list[int]:
        return kernels.draw_block(self.seed, self.trial, self.position + k, count)

    def shift(self, m: int = 1) -> "SequenceStream":
        return SequenceStream(self.seed, self.trial, self.position + m)

    def uniform(self, k: int = 0) -> float:
        return self.draw(k) / 2.0**64


# ---------------------------------------------------------------------------
# families


def _inv_e_bounds(terms: int = 60) -> tuple[Fraction, Fraction]:
    s = Fraction(0)
    fact = 1
    for k in range(terms + 1):
        if k:
            fact *= k
        s += Fraction((-1) ** k, fact)
    err = Fraction(1, fact * (terms + 1))
    return s - err, s + err


class Family:
    """Plug-in interface for a countable family of maps indexed by j >= 0.

    Subclasses provide exact thresholds for the inverse CDF, the degree and
    map attached to each index, and the first two moments of log(deg) with a
    truncation bound.
    """

    name = "family"

    def thresholds(self) -> list[int]:
        raise NotImplementedError

    def degree(self, j: int) -> int:
        raise NotImplementedError

    def weight(self, j: int) -> float:
        raise NotImplementedError

    def map_for(self, j: int, params: Mapping) -> RationalMap:
        raise NotImplementedError

    def log_degree_moment(self, power: int, tol: float) -> float:
        raise NotImplementedError


class PowerPlusC(Family):
    """{x^d + c : d >= 2} with nu(x^d + c) = 1 / (e (d-2)!).

    Index j = d - 2 is Poisson(1) distributed; the weights sum to
    e^-1 * sum 1/j! = 1.
    """

    name = "power_plus_c"

    def __init__(self):
        self._thresholds = None

    def thresholds(self) -> list[int]:
        if self._thresholds is None:
            lo, hi = _inv_e_bounds()
            partial = Fraction(0)
            fact = 1
            out = []
            for j in range(200):
                if j:
                    fact *= j
                partial += Fraction(1, fact)
                tlo = -((-(partial * lo).numerator * TWO64) // (partial * lo).denominator)
                thi = -((-(partial * hi).numerator * TWO64) // (partial * hi).denominator)
                if tlo != thi:
                    raise ArithmeticError("insufficient precision for e^-1")
                if tlo >= TWO64:
                    break
                out.append(tlo)
            self._thresholds = out
        return self._thresholds

    def degree(self, j: int) -> int:
        return j + 2

    def weight(self, j: int) -> float:
        return math.exp(-1.0 - math.lgamma(j + 1))

    def map_for(self, j: int, params: Mapping) -> RationalMap:
        c = Fraction(params.get("c", 0))
        d = j + 2
        text = f"x^{d} + ({c.numerator})/({c.denominator})"
        return parse_map(text, 1, label=f"x^{d}+{c}")

    def log_degree_moment(self, power: int = 1, tol: float = 1e-15) -> float:
        """sum_j log(j+2)^power / (e j!) truncated once the factorial tail is below tol.

        For j >= J >= 1: log(j+2)^p <= (j+1)^p and the tail is dominated by a
        geometric series, so tail <= 2 (J+2)^p / (e J!) once J >= 2 (p + 1).
        """
        terms = []
        j = 0
        while True:
            terms.append(math.log(j + 2) ** power / math.e * math.exp(-math.lgamma(j + 1)))
            j += 1
            if j >= 2 * (power + 1):
                tail = 2 * (j + 2) ** power / math.e * math.exp(-math.lgamma(j + 1))
                if tail < tol:
                    break
        return math.fsum(terms)


FAMILIES = {"power_plus_c": PowerPlusC}


# ---------------------------------------------------------------------------
# measures


@dataclass
class FiniteMeasure:
    """Finite S with exact rational weights summing to exactly 1."""

    weights: dict
    maps: dict = field(default_factory=dict)
    kind: str = "finite"

    def __post_init__(self):
        self.weights = {k: Fraction(v) for k, v in self.weights.items()}
        if not self.weights:
            raise ConfigError("empty measure")
        for lab, w in self.weights.items():
            if w <= 0:
                raise ConfigError(f"weight of {lab!r} must be strictly positive")
        total = sum(self.weights.values(), Fraction(0))
        if total != 1:
            raise ConfigError(f"weights sum to {total}, not exactly 1")
        if self.maps:
            missing = [lab for lab in self.weights if lab not in self.maps]
            if missing:
                raise ConfigError(f"measure references undefined maps {missing}")
        self._labels = list(self.weights)
        cdf = []
        acc = Fraction(0)
        for lab in self._labels:
            acc += self.weights[lab]
            cdf.append(acc)
        self._thresholds = kernels.threshold_array(exact_thresholds(cdf))

    @classmethod
    def uniform(cls, maps: Mapping[str, RationalMap] | Sequence[RationalMap]) -> "FiniteMeasure":
        if not isinstance(maps, Mapping):
            maps = {m.label: m for m in maps}
        k = len(maps)
        return cls({lab: Fraction(1, k) for lab in maps}, dict(maps))

    @property
    def labels(self) -> list:
        return self._labels

    @property
    def thresholds(self):
        return self._thresholds

    @property
    def n_categories(self) -> int:
        return len(self._labels)

    def descriptor(self, cat: int):
        return self._labels[cat]

    def probability(self, cat: int) -> Fraction:
        return self.weights[self._labels[cat]]

    def map_for(self, descriptor) -> RationalMap:
        return self.maps[descriptor]

    def degree(self, cat: int) -> int:
        return self.maps[self._labels[cat]].degree

    def map_set(self) -> dict:
        return {lab: self.maps[lab] for lab in self._labels}


@dataclass
class FamilyMeasure:
    family: Family
    params: dict = field(default_factory=dict)
    kind: str = "family"

    def __post_init__(self):
        self._thresholds = kernels.threshold_array(self.family.thresholds())
        self._maps: dict = {}

    @property
    def thresholds(self):
        return self._thresholds

    @property
    def n_categories(self) -> int:
        return len(self._thresholds) + 1

    def descriptor(self, cat: int) -> int:
        """Family parameter d of the sampled map."""
        return self.family.degree(cat)

    def probability(self, cat: int) -> float:
        return self.family.weight(cat)

    def degree(self, cat: int) -> int:
        return self.family.degree(cat)

    def map_for(self, descriptor) -> RationalMap:
        if descriptor not in self._maps:
            self._maps[descriptor] = self.family.map_for(descriptor - 2, self.params)
        return self._maps[descriptor]


Measure = FiniteMeasure | FamilyMeasure


def family_measure(name: str, **params) -> FamilyMeasure:
    try:
        fam = FAMILIES[name]()
    except KeyError:
        raise ConfigError(f"unknown family {name!r}") from None
    return FamilyMeasure(fam, dict(params))


# ---------------------------------------------------------------------------
# sampling


def sample_category(measure, stream: SequenceStream, k: int = 0) -> int:
    return kernels.sample_block(stream.seed, stream.trial, stream.position + k, 1, measure.thresholds)[0]


def sample_map(measure, stream: SequenceStream, k: int = 0):
    """Descriptor (map label, or d for a family) of draw ``k`` of the stream."""
    return measure.descriptor(sample_category(measure, stream, k))


def sample_categories(measure, stream: SequenceStream, count: int) -> list[int]:
    return kernels.sample_block(stream.seed, stream.trial, stream.position, count, measure.thresholds)


def sample_word(measure, stream: SequenceStream, count: int) -> list:
    return [measure.descriptor(c) for c in sample_categories(measure, stream, count)]


def category_counts(measure, seed: int, trials: int, n: int, threads: int = 1, trial_start: int = 0):
    """Per-trial category counts over the first n draws (order-free statistics)."""
    if threads <= 1 or trials < 2 * threads:
        return kernels.count_block(seed, trial_start, trials, n, measure.thresholds)
    from concurrent.futures import ThreadPoolExecutor

    chunk = -(-trials // threads)
    starts = list(range(trial_start, trial_start + trials, chunk))
    with ThreadPoolExecutor(threads) as ex:
        parts = ex.map(
            lambda s: kernels.count_block(seed, s, min(chunk, trial_start + trials - s), n, measure.thresholds),
            starts,
        )
        rows = []
        for p in parts:
            rows.extend(p)
    return rows


# ---------------------------------------------------------------------------
# expectations


def _finite_maps(measure, S):
    if S is None:
        S = measure.maps
    if not S:
        raise ConfigError("finite measure needs its map set")
    return S


def expectation_log_deg(measure, S: Mapping | None = None) -> float:
    """E_1[log deg phi]."""
    if measure.kind == "finite":
        S = _finite_maps(measure, S)
        return math.fsum(float(w) * math.log(S[lab].degree) for lab, w in measure.weights.items())
    if not hasattr(measure.family, "log_degree_moment"):
        raise MathPreconditionError(f"family {measure.family.name} has no convergence certificate")
    return measure.family.log_degree_moment(1, 1e-15)


def variance_log_deg(measure, S: Mapping | None = None) -> float:
    m1 = expectation_log_deg(measure, S)
    if measure.kind == "finite":
        S = _finite_maps(measure, S)
        return math.fsum(float(w) * (math.log(S[lab].degree) - m1) ** 2 for lab, w in measure.weights.items())
    return max(0.0, measure.family.log_degree_moment(2, 1e-15) - m1 * m1)


@dataclass(frozen=True)
class ExactExpectation:
    n: int
    distribution: dict  # degree -> exact probability
    words: int

    @property
    def value(self) -> float:
        """E_n[log deg gamma_n]."""
        return math.fsum(float(p) * math.log(d) for d, p in self.distribution.items())

    @property
    def per_step(self) -> float:
        return self.value / self.n if self.n else 0.0

    def log_degree_product(self) -> tuple:
        """E_n as an exact 'sum of p * log d' expression: sorted (d, p) pairs."""
        return tuple(sorted(self.distribution.items()))


def exact_expectation_n(
    measure: FiniteMeasure,
    S: Mapping | None = None,
    n: int = 1,
    budget: int = 4096,
    cache: CompositionCache | None = None,
    cap: int | None = None,
) -> ExactExpectation:
    """Full enumeration of the |S|^n words with exact composed degrees."""
    if measure.kind != "finite":
        raise MathPreconditionError("exact enumeration needs a finite measure")
    S = _finite_maps(measure, S)
    labels = measure.labels
    if len(labels) ** n > budget:
        raise BudgetExceededError(f"|S|^n = {len(labels) ** n} exceeds budget {budget}")
    if n == 0:
        return ExactExpectation(0, {1: Fraction(1)}, 1)
    kw = {} if cap is None else {"cap": cap}
    dist: dict = {}
    count = 0
    # depth-first over words, reusing the composed prefix
    stack = [((lab,), S[lab], measure.weights[lab]) for lab in reversed(labels)]
    while stack:
        word, m, p = stack.pop()
        if len(word) == n:
            dist[m.degree] = dist.get(m.degree, Fraction(0)) + p
            count += 1
            continue
        for lab in reversed(labels):
            key = word + (lab,)
            nxt = cache.get(key) if cache is not None else None
            if nxt is None:
                nxt = compose(S[lab], m, **kw)
                if cache is not None:
                    cache.put(key, nxt)
            stack.append((key, nxt, p * measure.weights[lab]))
    return ExactExpectation(n, dict(sorted(dist.items())), count)
