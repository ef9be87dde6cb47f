import math
from fractions import Fraction

import pytest

from randdyn.errors import EpsUnreachableError, EscapeImpossible
from randdyn.heights import Certification, CertifiedConstant, apply, c_set, parse_point
from randdyn.maps import parse_map
from randdyn.orbit_lab import (
    AS_WANDERING,
    HEURISTIC,
    NOT_AS_WANDERING,
    arithmetic_degree_estimate,
    canonical_height,
    census,
    census_counts,
    escape_function,
    expected_canonical_height,
    finite_orbit_frequency,
    finite_orbit_probability,
    finite_sorbit_decide,
    iterate_orbit,
    telescoping_violations,
    wandering_classify,
)
from randdyn.random_model import SequenceStream


def test_iterate_square(square):
    S, _ = square
    rec = iterate_orbit(S, None, parse_point("2"), 4)
    assert rec.heights == pytest.approx([math.log(2**(2**k)) for k in range(5)])
    assert rec.cum_degrees == [1, 2, 4, 8, 16]


def test_iterate_cycle_and_indeterminacy():
    g = {"g": parse_map("x^2 + x", 1, "g")}
    rec = iterate_orbit(g, None, parse_point("-1"), 10)
    assert rec.status == "cycle_detected" and rec.points[-1].coords == (0, 1)
    s = {"s": parse_map("X1*X2 : X0*X2 : X0*X1", 2, "s")}
    rec = iterate_orbit(s, None, parse_point("[1:0:0]"), 3)
    assert rec.status == "indeterminate_hit" and rec.indeterminate_step == 1


def test_iterate_symbolic_degrees(cremona_pair):
    S, _ = cremona_pair
    rec = iterate_orbit(S, ("s", "s", "q"), parse_point("[1:2:3]"), 3)
    assert rec.cum_degrees == [1, 2, 1, 2]


def test_arithmetic_degree(square):
    S, _ = square
    est = arithmetic_degree_estimate(iterate_orbit(S, None, parse_point("2"), 20))
    for n, v in est.values:
        assert v == pytest.approx((2**n * math.log(2)) ** (1 / n), rel=1e-9)
    assert est.final == pytest.approx(2, rel=0.03)
    assert arithmetic_degree_estimate(iterate_orbit(S, None, parse_point("1"), 5)).degenerate


def test_canonical_height(square, quadratic_pair):
    S, _ = square
    res = canonical_height(S, None, parse_point("2"), 1e-6)
    assert res.value == pytest.approx(math.log(2), abs=1e-12)
    assert res.radius < 1e-6 and res.status is Certification.CERTIFIED
    assert telescoping_violations(res, c_set(S).value, 2) == []
    assert canonical_height(S, None, parse_point("1"), 1e-6).value == 0
    with pytest.raises(EpsUnreachableError):
        canonical_height(S, None, parse_point("2"), 1e-6, max_bits=10_000)
    S2, m2 = quadratic_pair
    r = canonical_height(S2, SequenceStream(3), parse_point("2"), 1e-4, measure=m2)
    assert r.value > r.radius
    assert telescoping_violations(r, c_set(S2).value, 2) == []


def test_functional_identity(quadratic_pair):
    S, m = quadratic_pair
    stream = SequenceStream(8, 1)
    P = parse_point("3")
    lhs = canonical_height(S, stream, P, 1e-5, measure=m)
    from randdyn.random_model import sample_map

    first = sample_map(m, stream)
    rhs = canonical_height(S, stream.shift(1), apply(S[first], P), 1e-5, measure=m)
    assert abs(lhs.value - rhs.value / S[first].degree) <= lhs.radius + rhs.radius


def test_finite_sorbit_decide(square, quadratic_pair):
    S, _ = square
    d = finite_sorbit_decide(S, parse_point("1"))
    assert d.finite and d.orbit == {parse_point("1")}
    S2, _ = quadratic_pair
    d = finite_sorbit_decide(S2, parse_point("0"))
    assert d.finite and d.orbit == {parse_point("0")}
    d = finite_sorbit_decide(S2, parse_point("2"))
    assert not d.finite
    word, Q = d.witness
    from randdyn.heights import weil_height

    assert weil_height(Q) > 2 * c_set(S2).value


def test_escape_function(quadratic_pair):
    S, _ = quadratic_pair
    with pytest.raises(EscapeImpossible):
        escape_function(S, [parse_point("0"), parse_point("-1")])
    assert escape_function(S, [parse_point("-1")]).labels == ("f",)
    assert escape_function(S, []).labels == ()
    F = [parse_point(x) for x in ("-1", "2", "6", "1/2")]
    g = escape_function(S, F)
    for Q in F:
        R = Q
        for lab in g:
            R = apply(S[lab], R)
        assert R not in F


def test_wandering_and_probability(quadratic_pair, square):
    S, m = quadratic_pair
    v = wandering_classify(S, m, parse_point("-1"))
    assert v.verdict == NOT_AS_WANDERING
    assert v.witness[0].labels == ("g",) and v.witness[1] == parse_point("0")
    assert wandering_classify(S, m, parse_point("2")).verdict == AS_WANDERING
    assert finite_orbit_probability(S, m, parse_point("-1")) == Fraction(1, 2)
    assert finite_orbit_probability(S, m, parse_point("0")) == 1
    assert finite_orbit_probability(S, m, parse_point("2")) == 0
    Sq, mq = square
    assert wandering_classify(Sq, mq, parse_point("2")).verdict == AS_WANDERING
    v = wandering_classify(Sq, mq, parse_point("1"))
    assert v.verdict == NOT_AS_WANDERING and v.witness[0].labels == ()


def test_verdict_matches_probability(quadratic_pair):
    S, m = quadratic_pair
    for x in ("-1", "0", "2", "1/2", "-2", "3", "-1/2"):
        P = parse_point(x)
        v = wandering_classify(S, m, P)
        assert (v.verdict == NOT_AS_WANDERING) == (finite_orbit_probability(S, m, P) > 0)


def test_uncertified_constants_are_heuristic(quadratic_pair):
    S, m = quadratic_pair
    C = CertifiedConstant(3.0, Certification.USER_SUPPLIED)
    assert wandering_classify(S, m, parse_point("-1"), constants=C).verdict == HEURISTIC


def test_probability_weighted():
    from randdyn.random_model import FiniteMeasure

    S = {"f": parse_map("2*x^2", 1, "f"), "g": parse_map("x^2 + x", 1, "g")}
    m = FiniteMeasure({"f": Fraction(1, 3), "g": Fraction(2, 3)}, S)
    assert finite_orbit_probability(S, m, parse_point("-1")) == Fraction(2, 3)


def test_frequency(quadratic_pair):
    S, m = quadratic_pair
    fr = finite_orbit_frequency(S, m, parse_point("-1"), 400, 25, seed=0)
    assert fr.undecided == 0 and abs(fr.frequency - 0.5) < 4 * fr.std_error


def test_expected_canonical_height(square, quadratic_pair):
    S, m = square
    assert expected_canonical_height(S, m, parse_point("2")).value == pytest.approx(math.log(2), abs=1e-6)
    S2, m2 = quadratic_pair
    assert expected_canonical_height(S2, m2, parse_point("0")).value == 0
    e = expected_canonical_height(S2, m2, parse_point("-1"))
    e2 = expected_canonical_height(S2, m2, parse_point("2"))
    assert e.value == pytest.approx(0.5 * e2.value / 2, abs=e.error + e2.error)
    mc = expected_canonical_height(S2, m2, parse_point("-1"), "mc", trials=100, eps=1e-4)
    assert abs(mc.value - e.value) < 4 * mc.error + e.error


def test_census(square):
    S, _ = square
    c = census(S, None, parse_point("2"), None, 18, delta=2.0)
    assert c.slope == pytest.approx(1 / math.log(2), rel=1e-9)
    assert c.predicted_slope == pytest.approx(1 / math.log(2)) and c.one_over_delta == 0.5
    hs = [2**n * math.log(2) for n in range(19)]
    for B in (1.0, 10.0, 1000.0):
        assert census_counts(hs, [B])[0][1] == math.floor(math.log2(B / math.log(2))) + 1
    assert all(cnt == 0 for _, cnt in census_counts(hs, [0.1, 0.5]))
