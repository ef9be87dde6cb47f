import math
from fractions import Fraction

import pytest

from randdyn.errors import BudgetExceededError, ConfigError
from randdyn.maps import parse_map
from randdyn.random_model import (
    TWO64,
    FiniteMeasure,
    SequenceStream,
    exact_expectation_n,
    exact_thresholds,
    expectation_log_deg,
    family_measure,
    sample_categories,
    sample_map,
    variance_log_deg,
)


def test_weights_must_sum_exactly_to_one():
    with pytest.raises(ConfigError):
        FiniteMeasure({"a": Fraction(1, 3), "b": Fraction(1, 3)})
    with pytest.raises(ConfigError):
        FiniteMeasure({"a": Fraction(1), "b": Fraction(0)})
    FiniteMeasure({"a": Fraction(1, 3), "b": Fraction(2, 3)})


def test_exact_thresholds():
    assert exact_thresholds([Fraction(1, 2), Fraction(1)]) == [1 << 63]
    assert exact_thresholds([Fraction(1, 3), Fraction(1)]) == [-(-TWO64 // 3)]


def test_stream_determinism_and_shift():
    s = SequenceStream(99, 4)
    assert s.draws(20) == SequenceStream(99, 4).draws(20)
    assert s.shift(7).draws(13) == s.draws(20)[7:]
    assert SequenceStream(99, 5).draw() != s.draw()


def test_sampling_frequencies(squares_cubes):
    _, m = squares_cubes
    cats = sample_categories(m, SequenceStream(1), 100_000)
    assert abs(cats.count(0) / 1e5 - 0.5) < 0.005
    fam = family_measure("power_plus_c", c=1)
    ds = [fam.descriptor(c) for c in sample_categories(fam, SequenceStream(2), 100_000)]
    assert abs(ds.count(2) / 1e5 - 1 / math.e) < 0.005
    assert sample_map(m, SequenceStream(5, 3)) == sample_map(m, SequenceStream(5, 3))


def test_poisson_thresholds_are_exact_ceilings():
    fam = family_measure("power_plus_c")
    th = list(fam.thresholds)
    # independent check with a long series for e^-1
    inv_e = sum(Fraction((-1) ** k, math.factorial(k)) for k in range(80))
    for j, t in enumerate(th[:15]):
        cdf = inv_e * sum(Fraction(1, math.factorial(i)) for i in range(j + 1))
        assert t == math.ceil(cdf * TWO64)


def test_expectations(squares_cubes):
    _, m = squares_cubes
    assert expectation_log_deg(m) == pytest.approx(math.log(math.sqrt(6)), abs=1e-12)
    fam = family_measure("power_plus_c", c=1)
    ref = math.fsum(math.log(j + 2) / (math.e * math.factorial(j)) for j in range(60))
    assert expectation_log_deg(fam) == pytest.approx(ref, abs=1e-12)
    assert math.exp(expectation_log_deg(fam)) == pytest.approx(2.85052, abs=5e-5)
    point = FiniteMeasure.uniform({"q": parse_map("x^2", 1, "q")})
    assert expectation_log_deg(point) == math.log(2)
    assert variance_log_deg(point) == 0


def test_exact_expectation(squares_cubes, cremona_pair):
    S, m = squares_cubes
    for n in range(5):
        assert exact_expectation_n(m, S, n).value == pytest.approx(n * math.log(math.sqrt(6)), abs=1e-12)
    S2, m2 = cremona_pair
    ex = exact_expectation_n(m2, S2, 2)
    assert ex.words == 4
    assert ex.distribution == {1: Fraction(1, 4), 4: Fraction(3, 4)}
    with pytest.raises(BudgetExceededError):
        exact_expectation_n(m2, S2, 13)
