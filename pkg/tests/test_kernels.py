import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randdyn import _pykernels as py
from randdyn import kernels

pytestmark = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernels not built")

if kernels.compiled_available():
    from randdyn import _ckernels as cy

u64 = st.integers(0, 2**64 - 1)


def _th(seed, k):
    rng = random.Random(seed)
    return kernels.threshold_array(sorted(rng.getrandbits(64) for _ in range(k)))


@given(u64, st.integers(0, 10**6), st.integers(0, 10**6))
@settings(max_examples=200)
def test_draws_agree(seed, trial, pos):
    assert py.draw_u64(seed, trial, pos) == cy.draw_u64(seed, trial, pos)
    assert py.mix64(seed) == cy.mix64(seed)


@given(u64, st.integers(0, 1000), st.integers(1, 6))
@settings(max_examples=100)
def test_sampling_agrees(seed, trial, k):
    th = _th(seed, k)
    assert py.sample_block(seed, trial, 3, 300, th) == list(cy.sample_block(seed, trial, 3, 300, th))
    a = [list(r) for r in py.count_block(seed, trial, 3, 200, th)]
    b = [list(r) for r in cy.count_block(seed, trial, 3, 200, th)]
    assert a == b


@given(
    st.dictionaries(st.integers(0, 1000), st.integers(-(10**40), 10**40), min_size=1, max_size=20),
    st.dictionaries(st.integers(0, 1000), st.integers(-(10**40), 10**40), min_size=1, max_size=20),
)
@settings(max_examples=100)
def test_packed_multiply_agrees(a, b):
    args = (list(a), list(a.values()), list(b), list(b.values()))
    assert py.mul_packed(*args) == dict(cy.mul_packed(*args))


def test_backend_switch_gives_identical_estimates():
    from randdyn.degree_lab import dyndeg_birkhoff_mc
    from randdyn.maps import parse_map
    from randdyn.random_model import FiniteMeasure

    m = FiniteMeasure.uniform({"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")})
    before = kernels.BACKEND
    try:
        kernels.use_backend("python")
        p = dyndeg_birkhoff_mc(m, 300, 10, seed=4)
        kernels.use_backend("cython")
        c = dyndeg_birkhoff_mc(m, 300, 10, seed=4)
    finally:
        kernels.use_backend(before)
    assert p == c
