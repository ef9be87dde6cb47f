"""Dominant rational self-maps of projective N-space.

A map is stored reduced: its N+1 coordinate forms share a degree, have no
common polynomial factor and no common integer content, and the first
nonzero form has positive leading coefficient.  With that normalization the
degree of a map is well defined, and composition detects degree drop simply
by reducing the substituted tuple.

Words list map labels in *application* order: ``Word(("a", "b"))`` means
apply ``a`` first, then ``b``, i.e. the composite ``b o a``.
"""

from __future__ import annotations

import enum
import itertools
import math
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .algebra import (
    DEFAULT_TERM_CAP,
    HomogeneousForm,
    form_divexact,
    form_eval,
    form_gcd,
    form_substitute,
    format_form,
)
from .errors import (
    ArityError,
    DegreeMismatchError,
    DimensionMismatchError,
    MathPreconditionError,
    ParseError,
    UnknownLabelError,
    ZeroInputError,
)


class MorphismStatus(str, enum.Enum):
    CERTIFIED_MORPHISM = "certified_morphism"
    CERTIFIED_NON_MORPHISM = "certified_non_morphism"
    UNKNOWN = "unknown"
    USER_ASSERTED = "user_asserted"

    @property
    def is_morphism(self) -> bool:
        return self in (MorphismStatus.CERTIFIED_MORPHISM, MorphismStatus.USER_ASSERTED)


@dataclass(frozen=True)
class RationalMap:
    n: int
    forms: tuple
    label: str = "f"
    asserted_morphism: bool = False

    @property
    def degree(self) -> int:
        return self.forms[0].degree

    @cached_property
    def morphism_status(self) -> MorphismStatus:
        return morphism_check(self)

    def with_label(self, label: str) -> "RationalMap":
        out = RationalMap(self.n, self.forms, label, self.asserted_morphism)
        if "morphism_status" in self.__dict__:
            out.__dict__["morphism_status"] = self.__dict__["morphism_status"]
        return out

    def asserting_morphism(self) -> "RationalMap":
        return RationalMap(self.n, self.forms, self.label, True)

    def __call__(self, point):
        from .heights import apply

        return apply(self, point)

    def __str__(self) -> str:
        return format_map(self)

    def __eq__(self, other):
        if not isinstance(other, RationalMap):
            return NotImplemented
        return self.n == other.n and self.forms == other.forms

    def __hash__(self):
        return hash((self.n, self.forms))


def format_map(f: RationalMap) -> str:
    return " : ".join(format_form(F) for F in f.forms)


def identity_map(n: int) -> RationalMap:
    forms = tuple(HomogeneousForm.variable(n + 1, i) for i in range(n + 1))
    out = RationalMap(n, forms, "id")
    out.__dict__["morphism_status"] = MorphismStatus.CERTIFIED_MORPHISM
    return out


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z]\w*)|(.))")


def _tokenize(text: str):
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", int(num)))
        elif name is not None:
            out.append(("var", name))
        elif op is not None and not op.isspace():
            if op not in "+-*/^()":
                raise ParseError(f"unexpected character {op!r} in {text!r}")
            out.append(("op", op))
        pos = m.end()
    return out


class _PolyParser:
    """Recursive-descent parser producing {exps: Fraction} dicts."""

    def __init__(self, tokens, varmap: Mapping[str, int], nv: int, text: str):
        self.toks = tokens
        self.i = 0
        self.varmap = varmap
        self.nv = nv
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, msg):
        raise ParseError(f"{msg} in {self.text!r}")

    def parse(self):
        val = self.expr()
        if self.i != len(self.toks):
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return val

    def expr(self):
        val = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = _qadd(val, rhs, 1 if op == "+" else -1)
        return val

    def term(self):
        val = self.unary()
        while True:
            kind, v = self.peek()
            if kind == "var" or (kind, v) == ("op", "("):
                op = "*"  # implicit product, as in 2x or 3(x+1)
            elif (kind, v) in (("op", "*"), ("op", "/")):
                op = self.take()[1]
            else:
                break
            rhs = self.unary()
            if op == "*":
                val = _qmul(val, rhs)
            else:
                if len(rhs) != 1 or any(next(iter(rhs))):
                    self.fail("division is only allowed by a nonzero constant")
                c = next(iter(rhs.values()))
                val = {e: v / c for e, v in val.items()}
        return val

    def unary(self):
        kind, v = self.peek()
        if kind == "op" and v in "+-":
            self.take()
            inner = self.unary()
            return inner if v == "+" else {e: -c for e, c in inner.items()}
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, v = self.take()
            if kind != "num":
                self.fail("exponent must be a non-negative integer")
            out = {(0,) * self.nv: Fraction(1)}
            for _ in range(v):
                out = _qmul(out, base)
            return out
        return base

    def atom(self):
        kind, v = self.take()
        if kind == "num":
            return {(0,) * self.nv: Fraction(v)} if v else {}
        if kind == "var":
            if v not in self.varmap:
                self.fail(f"unknown variable {v!r}")
            e = [0] * self.nv
            e[self.varmap[v]] = 1
            return {tuple(e): Fraction(1)}
        if (kind, v) == ("op", "("):
            val = self.expr()
            if self.take() != ("op", ")"):
                self.fail("missing ')'")
            return val
        self.fail("unexpected end of expression" if kind is None else f"unexpected token {v!r}")


def _qadd(a, b, sign):
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + sign * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _qmul(a, b):
    out: dict = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            v = out.get(e, 0) + ca * cb
            if v:
                out[e] = v
            else:
                out.pop(e, None)
    return out


def _parse_poly(text: str, varmap: Mapping[str, int], nv: int) -> dict:
    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty coordinate")
    return _PolyParser(toks, varmap, nv, text).parse()


def parse_map(text: str, n: int, label: str = "f", asserted_morphism: bool = False) -> RationalMap:
    """Parse ``"F0 : F1 : ... : FN"`` (or an affine ``p(x)`` when n = 1)."""
    if n < 1:
        raise ParseError("ambient dimension must be at least 1")
    coords = [c for c in text.split(":")]
    nv = n + 1
    if len(coords) == 1 and n == 1 and not re.search(r"X\d", text):
        p = _parse_poly(coords[0], {"x": 0}, 1)
        if not p:
            raise ZeroInputError("the zero polynomial is not a map")
        d = max(e[0] for e in p)
        if d < 1:
            raise ParseError(f"constant expression {text!r} is not a dominant map")
        polys = [
            {(e[0], d - e[0]): c for e, c in p.items()},
            {(0, d): Fraction(1)},
        ]
    else:
        if len(coords) != nv:
            raise ArityError(f"expected {nv} coordinates for n={n}, got {len(coords)}")
        varmap = {f"X{i}": i for i in range(nv)}
        polys = [_parse_poly(c, varmap, nv) for c in coords]
    degrees = set()
    for p in polys:
        ds = {sum(e) for e in p}
        if len(ds) > 1:
            raise DegreeMismatchError(f"coordinate is not homogeneous in {text!r}")
        degrees |= ds
    if not degrees:
        raise ZeroInputError(f"all coordinates vanish in {text!r}")
    if len(degrees) != 1:
        raise DegreeMismatchError(f"coordinates have different degrees in {text!r}")
    d = degrees.pop()
    den = 1
    for p in polys:
        for c in p.values():
            den = den * c.denominator // math.gcd(den, c.denominator)
    forms = [
        HomogeneousForm.from_dict(nv, d, {e: int(c * den) for e, c in p.items()}) for p in polys
    ]
    return reduce_map(forms, n, label=label, asserted_morphism=asserted_morphism)


# ---------------------------------------------------------------------------
# reduction and composition


def reduce_map(
    forms: Sequence[HomogeneousForm],
    n: int | None = None,
    label: str = "f",
    asserted_morphism: bool = False,
) -> RationalMap:
    """Divide out the polynomial gcd and the tuple-wide integer content."""
    forms = list(forms)
    if n is None:
        n = len(forms) - 1
    if len(forms) != n + 1:
        raise ArityError(f"need {n + 1} forms for a self-map of P^{n}")
    nv = forms[0].n_vars
    if nv != n + 1 or any(F.n_vars != nv for F in forms):
        raise ArityError("forms must be in N+1 variables")
    nonzero = [F for F in forms if not F.is_zero()]
    if not nonzero:
        raise ZeroInputError("all-zero tuple of forms")
    d = nonzero[0].degree
    if any(F.degree != d for F in nonzero):
        raise DegreeMismatchError("forms must share a common degree")
    g = form_gcd(nonzero)
    if g.degree > 0:
        forms = [form_divexact(F, g) if not F.is_zero() else HomogeneousForm(nv, d - g.degree) for F in forms]
        d -= g.degree
    else:
        forms = [F if not F.is_zero() else HomogeneousForm(nv, d) for F in forms]
    if d < 1:
        raise MathPreconditionError("reduced map is constant (degree 0), not dominant")
    content = 0
    for F in forms:
        for _, c in F.terms:
            content = math.gcd(content, c)
    first = next(F for F in forms if not F.is_zero())
    if first.leading_coefficient < 0:
        content = -content
    if content != 1:
        forms = [HomogeneousForm(nv, d, tuple((e, c // content) for e, c in F.terms)) for F in forms]
    return RationalMap(n, tuple(forms), label, asserted_morphism)


def compose(f: RationalMap, g: RationalMap, cap: int = DEFAULT_TERM_CAP) -> RationalMap:
    """The reduced map f o g (apply g first)."""
    if f.n != g.n:
        raise DimensionMismatchError(f"cannot compose maps on P^{f.n} and P^{g.n}")
    subs = [form_substitute(F, g.forms, cap) for F in f.forms]
    out = reduce_map(
        subs,
        f.n,
        label=f"{f.label} o {g.label}",
        asserted_morphism=f.asserted_morphism and g.asserted_morphism,
    )
    fs = f.__dict__.get("morphism_status")
    gs = g.__dict__.get("morphism_status")
    if fs is MorphismStatus.CERTIFIED_MORPHISM and gs is MorphismStatus.CERTIFIED_MORPHISM:
        out.__dict__["morphism_status"] = MorphismStatus.CERTIFIED_MORPHISM
    return out


@dataclass(frozen=True)
class Word:
    """Finite sequence of map labels in application order (first applied first)."""

    labels: tuple = ()

    def __init__(self, labels: Iterable = ()):
        object.__setattr__(self, "labels", tuple(labels))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.labels[item])
        return self.labels[item]

    def __add__(self, other: "Word") -> "Word":
        return Word(self.labels + tuple(other))

    def composition_string(self) -> str:
        """Right-to-left composite, e.g. ``b o a`` for Word(("a", "b"))."""
        if not self.labels:
            return "id"
        return " o ".join(str(x) for x in reversed(self.labels))

    def __str__(self):
        return "(" + ", ".join(str(x) for x in self.labels) + ")"


class CompositionCache:
    """Thread-safe memo of word -> composed map; never changes results."""

    def __init__(self, maxsize: int = 100_000):
        self._data: dict = {}
        self._lock = threading.Lock()
        self.maxsize = maxsize
        self.hits = 0

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is not None:
                self.hits += 1
            return val

    def put(self, key, value):
        with self._lock:
            if len(self._data) < self.maxsize:
                self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)


def _resolve(S: Mapping, label) -> RationalMap:
    try:
        return S[label]
    except KeyError:
        raise UnknownLabelError(f"unknown map label {label!r}") from None


def word_compose(
    S: Mapping, w: Word | Sequence, cache: CompositionCache | None = None, cap: int = DEFAULT_TERM_CAP
) -> RationalMap:
    """theta_n o ... o theta_1 for w = (theta_1, ..., theta_n); empty word is the identity."""
    labels = tuple(w)
    for lab in labels:
        _resolve(S, lab)
    if not labels:
        n = next(iter(S.values())).n if S else 1
        return identity_map(n)
    start = 0
    acc = None
    if cache is not None:
        for k in range(len(labels), 0, -1):
            hit = cache.get(labels[:k])
            if hit is not None:
                acc, start = hit, k
                break
    if acc is None:
        acc, start = _resolve(S, labels[0]), 1
    for k in range(start, len(labels)):
        acc = compose(_resolve(S, labels[k]), acc, cap)
        if cache is not None:
            cache.put(labels[: k + 1], acc)
    return acc


# ---------------------------------------------------------------------------
# indeterminacy and morphism certification


def _coords_of(P):
    return tuple(P.coords) if hasattr(P, "coords") else tuple(P)


def is_indeterminate_at(f: RationalMap, P) -> bool:
    coords = _coords_of(P)
    if len(coords) != f.n + 1:
        raise DimensionMismatchError(f"point in P^{len(coords) - 1} for a map on P^{f.n}")
    return all(form_eval(F, coords) == 0 for F in f.forms)


def bareiss_det(M: Sequence[Sequence[int]]) -> int:
    """Fraction-free determinant of an integer matrix."""
    A = [list(r) for r in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k] != 0:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def binary_coefficients(F: HomogeneousForm) -> list[int]:
    """[a_0, ..., a_d] with F = sum a_i X0^(d-i) X1^i."""
    if F.n_vars != 2:
        raise ArityError("binary form expected")
    d = F.degree
    coeffs = [0] * (d + 1)
    for (e0, e1), c in F.terms:
        coeffs[e1] = c
    return coeffs


def sylvester_matrix(F: HomogeneousForm, G: HomogeneousForm) -> list[list[int]]:
    a, b = binary_coefficients(F), binary_coefficients(G)
    m, n = F.degree, G.degree
    size = m + n
    rows = []
    for i in range(n):
        rows.append([0] * i + a + [0] * (size - m - 1 - i))
    for i in range(m):
        rows.append([0] * i + b + [0] * (size - n - 1 - i))
    return rows


def resultant(F: HomogeneousForm, G: HomogeneousForm) -> int:
    return bareiss_det(sylvester_matrix(F, G))


@dataclass(frozen=True)
class MorphismCertificate:
    status: MorphismStatus
    resultant: int | None = None
    witness: tuple | None = None
    grid_bound: int | None = None


def _grid_points(n: int, bound: int):
    seen = set()
    for raw in itertools.product(range(-bound, bound + 1), repeat=n + 1):
        if not any(raw):
            continue
        g = 0
        for x in raw:
            g = math.gcd(g, x)
        pt = tuple(x // g for x in raw)
        first = next(x for x in pt if x)
        if first < 0:
            pt = tuple(-x for x in pt)
        if pt not in seen:
            seen.add(pt)
            yield pt


def morphism_certificate(f: RationalMap, grid_bound: int = 2) -> MorphismCertificate:
    if f.n == 1:
        r = resultant(f.forms[0], f.forms[1])
        status = MorphismStatus.CERTIFIED_MORPHISM if r else MorphismStatus.CERTIFIED_NON_MORPHISM
        return MorphismCertificate(status, resultant=r)
    for pt in _grid_points(f.n, grid_bound):
        if all(form_eval(F, pt) == 0 for F in f.forms):
            return MorphismCertificate(
                MorphismStatus.CERTIFIED_NON_MORPHISM, witness=pt, grid_bound=grid_bound
            )
    status = MorphismStatus.USER_ASSERTED if f.asserted_morphism else MorphismStatus.UNKNOWN
    return MorphismCertificate(status, grid_bound=grid_bound)


def morphism_check(f: RationalMap) -> MorphismStatus:
    """Resultant test on the line; rational grid search for base points otherwise."""
    return morphism_certificate(f).status


# ---------------------------------------------------------------------------
# degree independence


@dataclass
class DegreeIndependenceReport:
    passed: bool
    depth: int
    words_checked: int
    failures: list = field(default_factory=list)
    heuristic: bool = True

    def summary(self) -> str:
        verdict = "pass" if self.passed else "fail"
        note = f"heuristic certificate: all words of length <= {self.depth} checked"
        lines = [f"degree independence: {verdict} ({self.words_checked} words; {note})"]
        for w, d in self.failures:
            lines.append(f"  witness {w.composition_string()} has degree {d}")
        return "\n".join(lines)


def degree_independence_check(
    S: Mapping, depth: int, cap: int = DEFAULT_TERM_CAP, cache: CompositionCache | None = None
) -> DegreeIndependenceReport:
    """Compose every word of length <= depth; flag any of degree <= 1."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    labels = list(S)
    failures = []
    checked = 0
    frontier = [((lab,), S[lab]) for lab in labels]
    for k in range(1, depth + 1):
        nxt = []
        for w, m in frontier:
            checked += 1
            if m.degree <= 1:
                failures.append((Word(w), m.degree))
            if k < depth:
                for lab in labels:
                    key = w + (lab,)
                    hit = cache.get(key) if cache is not None else None
                    if hit is None:
                        hit = compose(S[lab], m, cap)
                        if cache is not None:
                            cache.put(key, hit)
                    nxt.append((key, hit))
        frontier = nxt
    return DegreeIndependenceReport(not failures, depth, checked, failures)
