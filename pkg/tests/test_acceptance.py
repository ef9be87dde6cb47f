"""Acceptance suite: one check per criterion, at the stated tolerances.

Run with pytest (a summary line per criterion is printed at the end of the
session) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction
from pathlib import Path

import pytest

from randdyn.config import load_config
from randdyn.degree_lab import (
    clt_sample,
    doubling_block_degree,
    doubling_block_limits,
    doubling_block_root,
    doubling_block_word,
    dyndeg_birkhoff_mc,
    dyndeg_morphism,
    subadditivity_check,
)
from randdyn.errors import IndeterminatePoint, ZeroVarianceError
from randdyn.heights import Certification, apply, c_set, parse_point, sample_points
from randdyn.maps import compose, identity_map, parse_map, word_compose
from randdyn.orbit_lab import (
    AS_WANDERING,
    NOT_AS_WANDERING,
    arithmetic_degree_estimate,
    canonical_height,
    census,
    finite_orbit_frequency,
    finite_orbit_probability,
    iterate_orbit,
    telescoping_violations,
    wandering_classify,
)
from randdyn.random_model import FiniteMeasure, SequenceStream, exact_expectation_n, family_measure

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: dict[int, str] = {}


def _record(num: int, title: str, checks: list[tuple[str, bool]], elapsed: float, limit: float):
    checks = checks + [(f"runtime {elapsed:.2f}s < {limit:g}s", elapsed < limit)]
    ok = all(c for _, c in checks)
    detail = "; ".join(f"{'ok' if c else 'FAILED'}: {msg}" for msg, c in checks)
    RESULTS[num] = f"criterion {num:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(RESULTS[num])
    return ok, RESULTS[num]


def _line(*texts):
    return {t: parse_map(t, 1, t) for t in texts}


def criterion_1():
    t = time.perf_counter()
    S = {"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")}
    m = FiniteMeasure.uniform(S)
    cf = dyndeg_morphism(m).point_estimate
    mc = dyndeg_birkhoff_mc(m, 10_000, 64, seed=0).point_estimate
    el = time.perf_counter() - t
    return _record(1, "weighted geometric mean", [
        (f"closed form {cf!r} vs sqrt 6, error {abs(cf - math.sqrt(6)):.1e} <= 1e-10", abs(cf - math.sqrt(6)) <= 1e-10),
        (f"Birkhoff MC {mc:.6f} within 1% ({abs(mc / math.sqrt(6) - 1):.2%})", abs(mc / math.sqrt(6) - 1) <= 0.01),
    ], el, 10)


def criterion_2():
    t = time.perf_counter()
    fam = family_measure("power_plus_c", c=1)
    cf = dyndeg_morphism(fam).point_estimate
    mc = dyndeg_birkhoff_mc(fam, 10_000, 64, seed=0).point_estimate
    el = time.perf_counter() - t
    return _record(2, "constant of the x^d + c family", [
        (f"closed form {cf:.6f} vs 2.85052 (|diff| {abs(cf - 2.85052):.1e} <= 5e-4)", abs(cf - 2.85052) <= 5e-4),
        (f"MC {mc:.6f} within 1% of closed form ({abs(mc / cf - 1):.2%})", abs(mc / cf - 1) <= 0.01),
    ], el, 30)


def criterion_3():
    t = time.perf_counter()
    odd_lim, even_lim = doubling_block_limits(2, 3)
    r13, r14 = doubling_block_root(13, 2, 3), doubling_block_root(14, 2, 3)
    S = {"a": parse_map("x^2 + 1", 1, "a"), "b": parse_map("x^3 - x + 2", 1, "b")}
    sym_ok = True
    for k in (1, 2, 3):
        e1, e2 = doubling_block_degree(k, 2, 3)
        sym_ok &= word_compose(S, doubling_block_word(k)).degree == 2**e1 * 3**e2
    el = time.perf_counter() - t
    return _record(3, "doubling-block counterexample", [
        (f"odd subsequence (k=13) {r13:.6f} vs {odd_lim:.6f}", abs(r13 - odd_lim) <= 1e-3),
        (f"even subsequence (k=14) {r14:.6f} vs {even_lim:.6f}", abs(r14 - even_lim) <= 1e-3),
        ("symbolic composition matches counted exponents for k <= 3", sym_ok),
    ], el, 5)


def criterion_4():
    t = time.perf_counter()
    cfg = load_config(CONFIGS / "quadratic_pair.ini")
    p = finite_orbit_probability(cfg.maps, cfg.measure, cfg.point)
    fr = finite_orbit_frequency(cfg.maps, cfg.measure, cfg.point, trials=2000, n=25, seed=cfg.seed)
    el = time.perf_counter() - t
    return _record(4, "exact finite-orbit probability", [
        (f"exact probability {p} == 1/2", p == Fraction(1, 2)),
        (f"MC frequency {fr.frequency:.4f} within 0.03 of 1/2 ({fr.undecided} undecided)",
         abs(fr.frequency - 0.5) <= 0.03),
    ], el, 60)


def criterion_5():
    t = time.perf_counter()
    S = {"f": parse_map("2*x^2", 1, "f"), "g": parse_map("x^2 + x", 1, "g")}
    m = FiniteMeasure.uniform(S)
    v1 = wandering_classify(S, m, parse_point("-1"))
    v2 = wandering_classify(S, m, parse_point("2"))
    el = time.perf_counter() - t
    return _record(5, "wandering classification", [
        (f"P=-1 -> {v1.verdict}", v1.verdict == NOT_AS_WANDERING),
        (f"witness point {v1.witness[1] if v1.witness else None} is 0",
         v1.witness is not None and v1.witness[1] == parse_point("0")),
        (f"P=2 -> {v2.verdict}", v2.verdict == AS_WANDERING),
        ("constants certified", v1.constants_status is Certification.CERTIFIED
         and v2.constants_status is Certification.CERTIFIED),
    ], el, 10)


def criterion_6():
    t = time.perf_counter()
    S = {"q": parse_map("x^2", 1, "q")}
    res = canonical_height(S, None, parse_point("2"), 1e-6)
    C = c_set(S).value
    viol = telescoping_violations(res, C, 2)
    el = time.perf_counter() - t
    return _record(6, "canonical height certificate", [
        (f"value {res.value!r} equals log 2", abs(res.value - math.log(2)) <= 1e-12),
        (f"radius {res.radius:.3g} < 1e-6 reached at n={res.n} (required n <= 12)", res.radius < 1e-6 and res.n <= 12),
        (f"telescoping bound holds at every step ({len(viol)} violations)", not viol),
    ], el, 5)


def criterion_7():
    t = time.perf_counter()
    S = {"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")}
    m = FiniteMeasure.uniform(S)
    target = math.sqrt(6)
    within = 0
    worst = 0.0
    for trial in range(32):
        rec = iterate_orbit(S, SequenceStream(0, trial), parse_point("2"), 20, measure=m)
        v = arithmetic_degree_estimate(rec).final
        dev = abs(v / target - 1)
        worst = max(worst, dev)
        within += dev <= 0.05
    el = time.perf_counter() - t
    return _record(7, "arithmetic degree vs dynamical degree", [
        (f"{within}/32 sequences within 5% of sqrt 6 at n=20 (worst {worst:.1%})", within == 32),
    ], el, 60)


def criterion_8():
    t = time.perf_counter()
    Sq = {"q": parse_map("x^2", 1, "q")}
    c1 = census(Sq, FiniteMeasure.uniform(Sq), parse_point("2"), None, 18)
    S = {"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")}
    m = FiniteMeasure.uniform(S)
    c2 = census(S, m, parse_point("2"), SequenceStream(0), 20)
    el = time.perf_counter() - t
    e1 = abs(c1.slope * math.log(2) - 1)
    e2 = abs(c2.slope / c2.predicted_slope - 1)
    return _record(8, "census slope", [
        (f"x^2 slope {c1.slope:.5f} vs 1/log 2 = {1 / math.log(2):.5f} ({e1:.2%} <= 2%)", e1 <= 0.02),
        (f"mixed slope {c2.slope:.5f} vs 1/log sqrt6 = {c2.predicted_slope:.5f} ({e2:.2%} <= 15%);"
         f" also reported: 1/delta = {c2.one_over_delta:.5f}", e2 <= 0.15),
    ], el, 60)


def criterion_9():
    t = time.perf_counter()
    S = {
        "s": parse_map("X1*X2 : X0*X2 : X0*X1", 2, "s"),
        "q": parse_map("X0^2 : X1^2 : X2^2", 2, "q"),
    }
    m = FiniteMeasure.uniform(S)
    E1 = exact_expectation_n(m, S, 1)
    E2 = exact_expectation_n(m, S, 2)
    rep = subadditivity_check(m, S, max_total=6)
    el = time.perf_counter() - t
    return _record(9, "degree drop (Kingman)", [
        (f"E_1 distribution {E1.distribution} gives log 2", E1.distribution == {2: 1}),
        (f"E_2 distribution {dict(E2.distribution)} over {E2.words} words gives E_2/2 = 0.75 log 2",
         E2.words == 4 and E2.distribution == {1: Fraction(1, 4), 4: Fraction(3, 4)}
         and abs(E2.value / 2 - 0.75 * math.log(2)) <= 1e-15),
        ("strict decrease E_2/2 < E_1", E2.value / 2 < E1.value),
        (f"subadditivity on all {rep.checked} pairs with m+n <= 6", rep.passed and rep.checked == 15),
    ], el, 60)


def criterion_10():
    t = time.perf_counter()
    S = {"a": parse_map("x^2", 1, "a"), "b": parse_map("x^3", 1, "b")}
    ks = clt_sample(FiniteMeasure.uniform(S), 1000, 2000, seed=0).ks_distance
    eq = FiniteMeasure.uniform({"a": parse_map("x^2", 1, "a"), "b": parse_map("2*x^2 + 1", 1, "b")})
    try:
        clt_sample(eq, 1000, 10, seed=0)
        raised = False
    except ZeroVarianceError:
        raised = True
    el = time.perf_counter() - t
    return _record(10, "central limit", [
        (f"KS distance {ks:.4f} < 0.05", ks < 0.05),
        ("ZeroVariance raised for equal degrees", raised),
    ], el, 30)


def criterion_11():
    t = time.perf_counter()
    s = parse_map("X1*X2 : X0*X2 : X0*X1", 2, "s")
    ss = compose(s, s)
    maps = [
        s,
        parse_map("X0^2 : X1^2 : X2^2", 2),
        parse_map("X0^2 + X1*X2 : X1^2 - X0*X2 : X2^2 + 2*X0*X1", 2),
        parse_map("X0*X1 : X1^2 + X2^2 : X0*X2", 2),
    ]
    pts = sample_points(2, 1000, seed=0, max_height=6)
    checked = skipped = bad = 0
    pairs = [(f, g) for f in maps for g in maps]
    for i, P in enumerate(pts):
        f, g = pairs[i % len(pairs)]
        fg = compose(f, g)
        try:
            lhs = apply(f, apply(g, P))
        except IndeterminatePoint:
            skipped += 1
            continue
        try:
            rhs = apply(fg, P)
        except IndeterminatePoint:
            bad += 1
            continue
        checked += 1
        bad += lhs != rhs
    el = time.perf_counter() - t
    return _record(11, "exactness regression", [
        (f"s o s = identity of degree {ss.degree}", ss == identity_map(2) and ss.degree == 1),
        (f"functoriality on {checked} points ({skipped} indeterminate, {bad} mismatches)",
         bad == 0 and checked + skipped == 1000 and checked >= 900),
    ], el, 10)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num):
    ok, line = CRITERIA[num]()
    assert ok, line


if __name__ == "__main__":
    import sys

    results = [CRITERIA[i]()[0] for i in sorted(CRITERIA)]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
