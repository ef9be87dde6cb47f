"""Orbits, canonical heights and finite-orbit questions.

Bounded-height pruning
----------------------
Let ``C`` be any upper bound for the two-sided height constants of the maps
in S (so ``|h(phi Q) - deg(phi) h(Q)| <= C`` for every phi in S), and let
every map have degree >= 2.  If ``h(Q) > 2C`` then for every phi

    h(phi Q) >= 2 h(Q) - C > h(Q) + C > 2C,

so the set ``{h > 2C}`` is mapped into itself and heights along any
sequence started there grow by more than ``C`` per step.  Such a point can
never return to a previous point, its S-orbit is infinite, and no point
below it in the orbit tree has a finite S-orbit.  The argument only uses
``C >= C(phi)``; an over-estimate merely enlarges the region ``{h <= 2C}``
that is explored exhaustively.  That is why every search below may use the
certified upper bound from :mod:`randdyn.heights` in place of the unknown
optimal constant.  Inside the region, Northcott (finitely many rational
points of bounded height) makes every breadth-first closure terminate.

Heights are floats, so the escape test is ``h > 2C + HEIGHT_SLACK``: points
within the slack are kept inside the region, which is always safe.
"""

from __future__ import annotations

import math
import statistics
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .algebra import DEFAULT_TERM_CAP
from .errors import (
    BudgetExceededError,
    DegeneratePointError,
    EpsUnreachableError,
    EscapeImpossible,
    IndeterminatePoint,
    MathPreconditionError,
    NotAMorphismError,
)
from .heights import HEIGHT_SLACK, CertifiedConstant, Certification, ProjPoint, apply, c_set, weil_height
from .maps import CompositionCache, MorphismStatus, Word, word_compose
from .random_model import SequenceStream, sample_map

DEFAULT_MAX_BITS = 1 << 32
DEFAULT_STATE_CAP = 10_000

RUNNING = "running"
CYCLE = "cycle_detected"
INDETERMINATE = "indeterminate_hit"
CAPPED = "resource_capped"


# ---------------------------------------------------------------------------
# helpers


def _lookup(S: Mapping | None, measure) -> Callable:
    if S is not None:
        def get(lab):
            try:
                return S[lab]
            except KeyError:
                from .errors import UnknownLabelError

                raise UnknownLabelError(f"unknown map label {lab!r}") from None
        return get
    if measure is None:
        raise MathPreconditionError("need either a map set or a measure")
    return measure.map_for


def _labeller(sequence, measure, S) -> Callable[[int], object]:
    """k -> label of the (k+1)-th map applied."""
    if isinstance(sequence, SequenceStream):
        if measure is None:
            raise MathPreconditionError("sampling a stream needs a measure")
        return lambda k: sample_map(measure, sequence, k)
    if sequence is None:
        if S is None or len(S) != 1:
            raise MathPreconditionError("a sequence is required unless S has a single map")
        only = next(iter(S))
        return lambda k: only
    labels = tuple(sequence)

    def from_word(k):
        if k >= len(labels):
            raise IndexError(k)
        return labels[k]

    return from_word


def _max_bits(P: ProjPoint) -> int:
    return max(abs(int(c) if not hasattr(c, "bit_length") else c).bit_length() for c in P.coords)


def _resolve_constant(S, constants) -> CertifiedConstant:
    if isinstance(constants, CertifiedConstant):
        return constants
    if constants is not None:
        return CertifiedConstant(float(constants), Certification.USER_SUPPLIED)
    if S is None:
        raise MathPreconditionError("height constants for a map family must be supplied")
    return c_set(S)


def _min_degree(S) -> int:
    d = min(f.degree for f in S.values())
    if d < 2:
        raise MathPreconditionError("every map must have degree at least 2")
    return d


def _require_morphisms(S):
    for lab, f in S.items():
        if f.morphism_status is MorphismStatus.CERTIFIED_NON_MORPHISM:
            raise NotAMorphismError(f"map {lab!r} is not a morphism")


# ---------------------------------------------------------------------------
# orbits


@dataclass
class OrbitRecord:
    start: ProjPoint
    word_so_far: Word
    points: list
    heights: list
    cum_degrees: list
    status: str = RUNNING
    indeterminate_step: int | None = None
    repeat: tuple | None = None  # (earlier index, later index) of the first revisit

    def rows(self):
        """(n, point, height, cum_degree) rows."""
        return [(i, p, h, d) for i, (p, h, d) in enumerate(zip(self.points, self.heights, self.cum_degrees))]


def iterate_orbit(
    S: Mapping | None,
    sequence,
    P: ProjPoint,
    n_max: int,
    *,
    measure=None,
    max_bits: int = DEFAULT_MAX_BITS,
    strict: bool = False,
    cap: int = DEFAULT_TERM_CAP,
) -> OrbitRecord:
    """Apply theta_1, theta_2, ... to P pointwise for up to n_max steps.

    ``sequence`` is a word (labels in application order), a
    :class:`SequenceStream` sampled through ``measure``, or None for a
    single-map S.  With one map a revisited point is a genuine cycle and
    iteration stops; with several maps the revisit is recorded but the
    remaining maps are still applied.  At an indeterminacy point the record
    stops with status ``indeterminate_hit`` (or raises if ``strict``).
    """
    get = _lookup(S, measure)
    label_at = _labeller(sequence, measure, S)
    single = S is not None and len(S) == 1
    symbolic = S is not None and any(not f.morphism_status.is_morphism for f in S.values())
    cache = CompositionCache() if symbolic else None
    rec = OrbitRecord(P, Word(()), [P], [weil_height(P)], [1])
    seen = {P: 0}
    labels = []
    for k in range(n_max):
        try:
            lab = label_at(k)
        except IndexError:
            break
        f = get(lab)
        cur = rec.points[-1]
        if f.degree * _max_bits(cur) + 64 > max_bits:
            rec.status = CAPPED
            break
        try:
            nxt = apply(f, cur)
        except IndeterminatePoint as exc:
            exc.step = k + 1
            if strict:
                raise
            rec.status = INDETERMINATE
            rec.indeterminate_step = k + 1
            break
        labels.append(lab)
        if symbolic:
            deg = word_compose(S, labels, cache, cap).degree
        else:
            deg = rec.cum_degrees[-1] * f.degree
        rec.points.append(nxt)
        rec.heights.append(weil_height(nxt))
        rec.cum_degrees.append(deg)
        idx = len(rec.points) - 1
        if nxt in seen:
            if rec.repeat is None:
                rec.repeat = (seen[nxt], idx)
            if single:
                rec.status = CYCLE
                break
        else:
            seen[nxt] = idx
    rec.word_so_far = Word(labels)
    if rec.status == RUNNING and rec.repeat is not None:
        rec.status = CYCLE
    return rec


@dataclass(frozen=True)
class ArithmeticDegreeEstimate:
    values: tuple  # (n, h(gamma_n P)^(1/n)) for n >= 1 with positive height
    final: float | None
    skipped: tuple = ()  # n with h(gamma_n P) = 0
    degenerate: bool = False


def arithmetic_degree_estimate(record: OrbitRecord, strict: bool = False) -> ArithmeticDegreeEstimate:
    """h(gamma_n P)^(1/n) along the record; zero heights are skipped and listed.

    An orbit made only of height-zero points gives ``degenerate=True`` (or
    raises :class:`DegeneratePointError` when ``strict``).
    """
    vals = []
    skipped = []
    for n, h in enumerate(record.heights):
        if n == 0:
            continue
        if h <= 0:
            skipped.append(n)
        else:
            vals.append((n, math.exp(math.log(h) / n)))
    if not vals:
        if strict:
            raise DegeneratePointError("every height along the orbit is zero")
        return ArithmeticDegreeEstimate((), None, tuple(skipped), True)
    return ArithmeticDegreeEstimate(tuple(vals), vals[-1][1], tuple(skipped), False)


# ---------------------------------------------------------------------------
# canonical heights


@dataclass(frozen=True)
class CanonicalHeight:
    value: float
    radius: float
    n: int
    status: Certification
    trace: tuple = ()  # h(gamma_k P)/deg(gamma_k) for k = 0..n
    degrees: tuple = ()


def canonical_height(
    S: Mapping,
    sequence,
    P: ProjPoint,
    eps: float = 1e-6,
    *,
    measure=None,
    constants=None,
    max_bits: int = DEFAULT_MAX_BITS,
    n_limit: int = 10_000,
) -> CanonicalHeight:
    """h(gamma_n P)/deg(gamma_n) at the first n with C/((d-1) deg(gamma_n)) < eps.

    The radius follows from telescoping: each step changes h/deg by at most
    C/deg(gamma_{k+1}), and deg(gamma_{k+1}) >= d deg(gamma_k).
    """
    _require_morphisms(S)
    C = _resolve_constant(S, constants)
    d = _min_degree(S)
    get = _lookup(S, measure)
    label_at = _labeller(sequence, measure, S)
    cur = P
    deg = 1
    trace = [weil_height(P)]
    degs = [1]
    n = 0
    while True:
        radius = C.value / ((d - 1) * deg)
        if radius < eps:
            return CanonicalHeight(trace[-1], radius, n, C.status, tuple(trace), tuple(degs))
        if n >= n_limit:
            raise EpsUnreachableError(f"radius {radius:.3g} still above {eps} after {n} steps")
        try:
            lab = label_at(n)
        except IndexError:
            raise EpsUnreachableError(f"sequence ended at n={n} with radius {radius:.3g}") from None
        f = get(lab)
        if f.degree * _max_bits(cur) + 64 > max_bits:
            raise EpsUnreachableError(
                f"coordinate cap of {max_bits} bits reached at n={n} with radius {radius:.3g}"
            )
        try:
            cur = apply(f, cur)
        except IndeterminatePoint as exc:
            exc.step = n + 1
            raise
        deg *= f.degree
        n += 1
        trace.append(weil_height(cur) / deg)
        degs.append(deg)


def telescoping_violations(result: CanonicalHeight, C: float, d: int) -> list:
    """Pairs (m, k) with |trace_k - trace_m| > C/((d-1) deg_m) + slack, for k > m."""
    bad = []
    tr, dg = result.trace, result.degrees
    for m in range(len(tr)):
        bound = C / ((d - 1) * dg[m]) + HEIGHT_SLACK
        for k in range(m + 1, len(tr)):
            if abs(tr[k] - tr[m]) > bound:
                bad.append((m, k))
    return bad


@dataclass(frozen=True)
class ExpectedHeight:
    value: float
    error: float  # standard error (mc) or truncation radius (exact)
    mode: str
    samples: int
    status: Certification


def _expansion(S, measure, Q, depth, memo):
    """Sum over words w of length depth of nu(w) h(wQ)/deg(w)."""
    key = (Q, depth)
    if key in memo:
        return memo[key]
    if depth == 0:
        val = weil_height(Q)
    else:
        val = math.fsum(
            float(measure.weights[lab]) * _expansion(S, measure, apply(S[lab], Q), depth - 1, memo) / S[lab].degree
            for lab in measure.labels
        )
    memo[key] = val
    return val


def expected_canonical_height(
    S: Mapping,
    measure,
    P: ProjPoint,
    mode: str = "exact",
    *,
    trials: int = 200,
    seed: int = 0,
    eps: float = 1e-6,
    depth: int = 10,
    constants=None,
    state_cap: int = DEFAULT_STATE_CAP,
) -> ExpectedHeight:
    """Average canonical height of P over random sequences.

    ``mode="mc"`` averages :func:`canonical_height` over sampled sequences.
    ``mode="exact"`` solves E(Q) = sum_phi nu(phi) E(phi Q)/deg(phi) exactly
    in the weights over the reachable points of height <= 2C; escaped
    points get the value of the same recursion expanded ``depth`` levels,
    which is within C/((d-1) d^depth) of the truth.
    """
    C = _resolve_constant(S, constants)
    d = _min_degree(S)
    _require_morphisms(S)
    if mode == "mc":
        vals = []
        for t in range(trials):
            vals.append(
                canonical_height(S, SequenceStream(seed, t), P, eps, measure=measure, constants=C).value
            )
        se = statistics.stdev(vals) / math.sqrt(trials) if trials > 1 else 0.0
        return ExpectedHeight(math.fsum(vals) / trials, se, "mc", trials, C.status)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    radius = C.value / ((d - 1) * d**depth)
    memo: dict = {}
    g = explore(S, P, C.value, state_cap)
    if not g.nodes:
        return ExpectedHeight(_expansion(S, measure, P, depth, memo), radius, "exact", 0, C.status)
    index = {Q: i for i, Q in enumerate(g.nodes)}
    rows = []
    rhs = []
    for Q in g.nodes:
        row = {index[Q]: Fraction(1)}
        b = 0.0
        for lab, img, escaped in g.edges[Q]:
            w = measure.weights[lab] / S[lab].degree
            if escaped:
                b += float(w) * _expansion(S, measure, img, depth, memo)
            else:
                j = index[img]
                row[j] = row.get(j, Fraction(0)) - w
        rows.append(row)
        rhs.append(Fraction(b))
    sol = solve_sparse(rows, rhs)
    return ExpectedHeight(float(sol[index[P]]), radius, "exact", len(g.nodes), C.status)


# ---------------------------------------------------------------------------
# bounded-height exploration


@dataclass
class Exploration:
    """Breadth-first closure of a point inside {h <= 2C}.

    ``edges[Q]`` lists (label, image, escaped) for each map; ``parent`` gives
    the BFS tree as Q -> (previous point, label).
    """

    start: ProjPoint
    threshold: float
    nodes: list = field(default_factory=list)
    edges: dict = field(default_factory=dict)
    parent: dict = field(default_factory=dict)

    def word_to(self, Q) -> Word:
        labels = []
        while Q != self.start:
            Q, lab = self.parent[Q]
            labels.append(lab)
        return Word(reversed(labels))

    def finite_nodes(self) -> set:
        """Retained points whose whole S-orbit stays inside the region."""
        rev: dict = {Q: [] for Q in self.nodes}
        leaking = deque()
        for Q in self.nodes:
            for _, img, escaped in self.edges[Q]:
                if escaped:
                    leaking.append(Q)
                else:
                    rev[img].append(Q)
        infinite = set(leaking)
        while leaking:
            Q = leaking.popleft()
            for R in rev[Q]:
                if R not in infinite:
                    infinite.add(R)
                    leaking.append(R)
        return {Q for Q in self.nodes if Q not in infinite}


def _escaped(Q: ProjPoint, C: float) -> bool:
    return weil_height(Q) > 2 * C + HEIGHT_SLACK


def explore(S: Mapping, P: ProjPoint, C: float, state_cap: int = DEFAULT_STATE_CAP) -> Exploration:
    """Closure of P under S restricted to {h <= 2C}; empty if P itself escaped."""
    _min_degree(S)
    g = Exploration(P, 2 * C)
    if _escaped(P, C):
        return g
    queue = deque([P])
    g.nodes.append(P)
    g.parent[P] = None
    while queue:
        Q = queue.popleft()
        out = []
        for lab, f in S.items():
            try:
                img = apply(f, Q)
            except IndeterminatePoint as exc:
                exc.step = len(g.word_to(Q)) + 1
                raise
            esc = _escaped(img, C)
            out.append((lab, img, esc))
            if not esc and img not in g.parent:
                if len(g.nodes) >= state_cap:
                    raise BudgetExceededError(f"more than {state_cap} points below height {2 * C:.4g}")
                g.parent[img] = (Q, lab)
                g.nodes.append(img)
                queue.append(img)
        g.edges[Q] = out
    return g


@dataclass(frozen=True)
class SOrbitDecision:
    finite: bool
    orbit: frozenset = frozenset()  # the full S-orbit when finite
    witness: tuple | None = None  # (Word, point above 2C) when infinite
    constants_status: Certification = Certification.CERTIFIED


def finite_sorbit_decide(
    S: Mapping, Q: ProjPoint, *, constants=None, state_cap: int = DEFAULT_STATE_CAP
) -> SOrbitDecision:
    """Finite iff the breadth-first closure of Q never leaves {h <= 2C}."""
    C = _resolve_constant(S, constants)
    _min_degree(S)
    if _escaped(Q, C.value):
        return SOrbitDecision(False, witness=(Word(()), Q), constants_status=C.status)
    parent = {Q: None}
    queue = deque([Q])
    while queue:
        R = queue.popleft()
        for lab, f in S.items():
            img = apply(f, R)
            if img in parent:
                continue
            parent[img] = (R, lab)
            if _escaped(img, C.value):
                labels = []
                T = img
                while parent[T] is not None:
                    T, l = parent[T]
                    labels.append(l)
                return SOrbitDecision(False, witness=(Word(reversed(labels)), img), constants_status=C.status)
            if len(parent) > state_cap:
                raise BudgetExceededError(f"more than {state_cap} points below height {2 * C.value:.4g}")
            queue.append(img)
    return SOrbitDecision(True, frozenset(parent), constants_status=C.status)


def _search_exit(S: Mapping, Q: ProjPoint, F: set, state_cap: int):
    """Shortest word taking Q outside F, or (None, closure) if there is none."""
    parent = {Q: None}
    queue = deque([Q])
    while queue:
        R = queue.popleft()
        for lab, f in S.items():
            img = apply(f, R)
            if img in parent:
                continue
            parent[img] = (R, lab)
            if img not in F:
                labels = []
                T = img
                while parent[T] is not None:
                    T, l = parent[T]
                    labels.append(l)
                return list(reversed(labels)), None
            if len(parent) > state_cap:
                raise BudgetExceededError("exit search exceeded the state cap")
            queue.append(img)
    return None, frozenset(parent)


def _apply_word(S, labels, Q):
    for lab in labels:
        Q = apply(S[lab], Q)
    return Q


def escape_function(S: Mapping, F: Sequence[ProjPoint], state_cap: int = DEFAULT_STATE_CAP) -> Word:
    """A single word g with g(Q) outside F for every Q in F.

    Each Q_i gets a shortest exit word f_i.  Then g_1 = f_1 and, for m >= 2,
    g_m = g_{m-1} when g_{m-1}(Q_m) is already outside F, and otherwise
    g_m = f_j o g_{m-1} where Q_j = g_{m-1}(Q_m).  This relies on the
    complement of F being S-stable, which is checked on every point met
    outside F; the result is verified on all of F before returning.
    """
    pts = list(dict.fromkeys(F))
    if not pts:
        return Word(())
    Fset = set(pts)
    exits = {}
    for Q in pts:
        w, closure = _search_exit(S, Q, Fset, state_cap)
        if w is None:
            raise EscapeImpossible(f"the S-orbit of {Q} never leaves the set", point=Q, closure=closure)
        exits[Q] = w
    for Q in pts:
        for f in S.values():
            out = apply(f, Q)
            if out not in Fset and any(apply(g, out) in Fset for g in S.values()):
                raise MathPreconditionError(
                    f"complement of the set is not S-stable: a map sends {out} back into it"
                )
    g = list(exits[pts[0]])
    for Q in pts[1:]:
        img = _apply_word(S, g, Q)
        if img in Fset:
            g = g + exits[img]
    for Q in pts:
        if _apply_word(S, g, Q) in Fset:
            raise MathPreconditionError("escape construction failed: complement of the set is not S-stable")
    return Word(g)


# ---------------------------------------------------------------------------
# wandering and finite-orbit probability

AS_WANDERING = "almost_surely_wandering"
NOT_AS_WANDERING = "not_as_wandering"
HEURISTIC = "heuristic_only"


@dataclass(frozen=True)
class WanderingVerdict:
    verdict: str
    witness: tuple | None  # (Word, ProjPoint) reaching a finite-S-orbit point
    constants_status: Certification
    explored: int = 0

    def __post_init__(self):
        if self.verdict == NOT_AS_WANDERING and self.witness is None:
            raise ValueError("not_as_wandering requires a witness")

    @property
    def wandering(self) -> bool | None:
        """The verdict reached by the search, ignoring certification."""
        return self.witness is None

    def report(self) -> str:
        lines = [f"verdict: {self.verdict}", f"constants: {self.constants_status.value}",
                 f"points explored: {self.explored}"]
        if self.witness is not None:
            w, Q = self.witness
            lines.append(f"witness: {w.composition_string()} sends P to {Q}, which has finite S-orbit")
        return "\n".join(lines)


def wandering_classify(
    S: Mapping, measure, P: ProjPoint, *, constants=None, state_cap: int = DEFAULT_STATE_CAP
) -> WanderingVerdict:
    """P is almost surely wandering iff no point of its S-orbit has finite S-orbit.

    Points above 2C are pruned (see the module docstring); every retained
    point is decided finite or infinite from the explored transition graph.
    Since every weight is positive, any reachable finite-orbit point is hit
    with positive probability.
    """
    C = _resolve_constant(S, constants)
    if measure is not None and measure.kind == "finite" and any(w <= 0 for w in measure.weights.values()):
        raise MathPreconditionError("every weight must be strictly positive")
    g = explore(S, P, C.value, state_cap)
    finite = g.finite_nodes()
    witness = None
    for Q in g.nodes:  # BFS order, so the first hit has a shortest word
        if Q in finite:
            witness = (g.word_to(Q), Q)
            break
    if not C.certified:
        verdict = HEURISTIC
    else:
        verdict = NOT_AS_WANDERING if witness is not None else AS_WANDERING
    return WanderingVerdict(verdict, witness, C.status, len(g.nodes))


def solve_sparse(rows: list[dict], rhs: list[Fraction]) -> list[Fraction]:
    """Exact Gaussian elimination on a sparse system given as {column: value} rows."""
    n = len(rows)
    rows = [dict(r) for r in rows]
    rhs = list(rhs)
    pivots = []
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r].get(col, 0) != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        rows[col], rows[piv] = rows[piv], rows[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        prow = rows[col]
        inv = 1 / Fraction(prow[col])
        for r in range(col + 1, n):
            fac = rows[r].get(col)
            if not fac:
                continue
            fac = fac * inv
            tgt = rows[r]
            for c, v in prow.items():
                nv = tgt.get(c, 0) - fac * v
                if nv:
                    tgt[c] = nv
                else:
                    tgt.pop(c, None)
            rhs[r] -= fac * rhs[col]
        pivots.append(inv)
    sol = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = rhs[r] - sum((v * sol[c] for c, v in rows[r].items() if c > r), Fraction(0))
        sol[r] = acc * pivots[r]
    return sol


def finite_orbit_probability(
    S: Mapping, measure, P: ProjPoint, *, constants=None, state_cap: int = DEFAULT_STATE_CAP
) -> Fraction:
    """Exact probability that the orbit of P along a random sequence is finite.

    p = 1 on finite-S-orbit points, p = 0 once the orbit leaves {h <= 2C},
    and p(Q) = sum_phi nu(phi) p(phi Q) elsewhere.  The system is
    nonsingular: a closed class among the remaining points would be a
    finite S-orbit itself.
    """
    if measure.kind != "finite":
        raise MathPreconditionError("exact probability needs a finite measure")
    C = _resolve_constant(S, constants)
    g = explore(S, P, C.value, state_cap)
    if not g.nodes:
        return Fraction(0)
    finite = g.finite_nodes()
    if P in finite:
        return Fraction(1)
    unknown = [Q for Q in g.nodes if Q not in finite]
    index = {Q: i for i, Q in enumerate(unknown)}
    rows, rhs = [], []
    for Q in unknown:
        row = {index[Q]: Fraction(1)}
        b = Fraction(0)
        for lab, img, escaped in g.edges[Q]:
            w = measure.weights[lab]
            if escaped:
                continue
            if img in finite:
                b += w
            else:
                j = index[img]
                row[j] = row.get(j, Fraction(0)) - w
        rows.append(row)
        rhs.append(b)
    return solve_sparse(rows, rhs)[index[P]]


@dataclass(frozen=True)
class FiniteOrbitFrequency:
    frequency: float
    std_error: float
    trials: int
    finite: int
    escaped: int
    undecided: int


def finite_orbit_frequency(
    S: Mapping, measure, P: ProjPoint, trials: int, n: int, seed: int = 0, *, constants=None
) -> FiniteOrbitFrequency:
    """Monte Carlo share of sampled sequences whose orbit of P is finite.

    A trial counts as finite once its orbit reaches a point with finite
    S-orbit and as infinite once it rises above 2C; trials still undecided
    after n steps count as infinite and are reported separately.
    """
    C = _resolve_constant(S, constants)
    decided: dict = {}
    fin = esc = und = 0
    for t in range(trials):
        stream = SequenceStream(seed, t)
        Q = P
        outcome = None
        for k in range(n + 1):
            if _escaped(Q, C.value):
                outcome = "esc"
                break
            if Q not in decided:
                decided[Q] = finite_sorbit_decide(S, Q, constants=C).finite
            if decided[Q]:
                outcome = "fin"
                break
            if k < n:
                Q = apply(S[sample_map(measure, stream, k)], Q)
        if outcome == "fin":
            fin += 1
        elif outcome == "esc":
            esc += 1
        else:
            und += 1
    p = fin / trials
    return FiniteOrbitFrequency(p, math.sqrt(p * (1 - p) / trials), trials, fin, esc, und)


# ---------------------------------------------------------------------------
# census


@dataclass(frozen=True)
class Census:
    rows: tuple  # (B, count)
    slope: float | None
    predicted_slope: float | None  # 1/log(delta)
    one_over_delta: float | None  # 1/delta
    heights: tuple = ()


def census_counts(heights: Sequence[float], B_grid: Sequence[float]) -> list[tuple]:
    """(B, #{n : h_n <= B}) for each B."""
    hs = sorted(heights)
    import bisect

    return [(B, bisect.bisect_right(hs, B)) for B in B_grid]


def default_census_grid(heights: Sequence[float]) -> list[float]:
    """Geometric midpoints between consecutive distinct positive heights.

    The count is a staircase in log B; sampling it halfway (in log B) between
    jumps avoids the bias a dense grid would give a least-squares slope.
    """
    hs = sorted(set(h for h in heights if h > 0))
    return [math.sqrt(a * b) for a, b in zip(hs, hs[1:])]


def least_squares_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two points")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("degenerate grid")
    return math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx


def census(
    S: Mapping,
    measure,
    P: ProjPoint,
    sequence,
    n_max: int,
    B_grid: Sequence[float] | None = None,
    *,
    delta: float | None = None,
    max_bits: int = DEFAULT_MAX_BITS,
) -> Census:
    """Counts #{0 <= n <= n_max : h(gamma_n P) <= B} and their slope against log B.

    The slope is compared with 1/log(delta) (``predicted_slope``); the value
    1/delta is reported alongside as ``one_over_delta``.
    """
    rec = iterate_orbit(S, sequence, P, n_max, measure=measure, max_bits=max_bits)
    heights = rec.heights
    grid = list(B_grid) if B_grid is not None else default_census_grid(heights)
    rows = census_counts(heights, grid)
    pos = [(B, c) for B, c in rows if B > 0]
    slope = None
    if len(pos) >= 2 and len(set(B for B, _ in pos)) >= 2:
        slope = least_squares_slope([math.log(B) for B, _ in pos], [c for _, c in pos])
    if delta is None and measure is not None:
        from .degree_lab import dyndeg_morphism

        try:
            delta = dyndeg_morphism(measure, S).point_estimate
        except MathPreconditionError:
            delta = None
    pred = 1 / math.log(delta) if delta and delta > 1 else None
    stmt = 1 / delta if delta else None
    return Census(tuple(rows), slope, pred, stmt, tuple(heights))
