import pytest

from randdyn.heights import parse_point
from randdyn.maps import parse_map
from randdyn.random_model import FiniteMeasure


@pytest.fixture
def quadratic_pair():
    S = {"f": parse_map("2*x^2", 1, "f"), "g": parse_map("x^2 + x", 1, "g")}
    return S, FiniteMeasure.uniform(S)


@pytest.fixture
def squares_cubes():
    S = {"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")}
    return S, FiniteMeasure.uniform(S)


@pytest.fixture
def square():
    S = {"q": parse_map("x^2", 1, "q")}
    return S, FiniteMeasure.uniform(S)


@pytest.fixture
def cremona_pair():
    S = {
        "s": parse_map("X1*X2 : X0*X2 : X0*X1", 2, "s"),
        "q": parse_map("X0^2 : X1^2 : X2^2", 2, "q"),
    }
    return S, FiniteMeasure.uniform(S)


@pytest.fixture
def pt():
    return parse_point


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[num])
