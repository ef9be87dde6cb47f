import pytest

from randdyn.errors import DegreeMismatchError, ParseError
from randdyn.heights import parse_point
from randdyn.maps import (
    CompositionCache,
    MorphismStatus,
    Word,
    compose,
    degree_independence_check,
    identity_map,
    is_indeterminate_at,
    morphism_certificate,
    parse_map,
    resultant,
    word_compose,
)


def test_parse_affine_homogenizes():
    f = parse_map("2*x^2", 1)
    assert str(f) == "2*X0^2 : X1^2" and f.degree == 2
    assert str(parse_map("2x^2", 1)) == "2*X0^2 : X1^2"
    assert str(parse_map("x^2 + x", 1)) == "X0^2 + X0*X1 : X1^2"


def test_parse_reduces_common_factor():
    f = parse_map("X0^2 : X0*X1", 1)
    assert str(f) == "X0 : X1" and f.degree == 1


def test_parse_rational_coefficients_cleared():
    f = parse_map("x^2 + 1/2", 1)
    assert str(f) == "2*X0^2 + X1^2 : 2*X1^2"


@pytest.mark.parametrize("bad", ["x^2 +", "x^^2", "y^2", "x^2 / x"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_map(bad, 1)


def test_mixed_degrees_rejected():
    with pytest.raises(DegreeMismatchError):
        parse_map("X0^2 : X1", 1)


def test_cremona_involution():
    s = parse_map("X1*X2 : X0*X2 : X0*X1", 2, "s")
    ss = compose(s, s)
    assert ss == identity_map(2) and ss.degree == 1
    assert s.morphism_status is MorphismStatus.CERTIFIED_NON_MORPHISM
    assert is_indeterminate_at(s, parse_point("[1:0:0]"))
    assert not is_indeterminate_at(s, parse_point("[1:1:1]"))


def test_compose_order():
    f = parse_map("2*x^2", 1, "f")
    g = parse_map("x^2 + x", 1, "g")
    assert str(compose(f, g)) == "2*X0^4 + 4*X0^3*X1 + 2*X0^2*X1^2 : X1^4"
    w = Word(("g", "f"))  # g first, then f
    assert word_compose({"f": f, "g": g}, w) == compose(f, g)
    assert w.composition_string() == "f o g"
    assert Word(()).composition_string() == "id"


def test_word_compose_cache_consistent():
    S = {"f": parse_map("2*x^2", 1, "f"), "g": parse_map("x^2 + x", 1, "g")}
    cache = CompositionCache()
    w = ("f", "g", "g", "f")
    a = word_compose(S, w, cache)
    b = word_compose(S, w)
    assert a == b and len(cache) > 0
    assert word_compose(S, w, cache) == b and cache.hits > 0


def test_resultant_and_certificate():
    f = parse_map("2*x^2", 1)
    assert resultant(*f.forms) == 4
    assert morphism_certificate(f).status is MorphismStatus.CERTIFIED_MORPHISM
    assert parse_map("X0^2 : X0*X1 + X0^2", 1).degree == 1  # common factor X0


def test_degree_independence():
    s = {"s": parse_map("X1*X2 : X0*X2 : X0*X1", 2, "s")}
    rep = degree_independence_check(s, 2)
    assert not rep.passed and rep.failures[0][0].composition_string() == "s o s"
    ok = degree_independence_check({"a": parse_map("x^2", 1, "a")}, 3)
    assert ok.passed and ok.heuristic
