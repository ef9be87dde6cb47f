"""Rational projective points, Weil heights and height-comparison constants.

For a morphism f of degree d there is a constant C(f) with
``|h(f(P)) - d h(P)| <= C(f)`` for every point.  The exact supremum is not
computable here; every function below returns an *upper bound* together
with how much it can be trusted (:class:`Certification`).  All downstream
bounded-height arguments stay valid with an over-estimate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import kernels
from .algebra import HomogeneousForm, form_eval
from .errors import (
    DimensionMismatchError,
    IndeterminatePoint,
    MathPreconditionError,
    NotAMorphismError,
    ParseError,
    ZeroInputError,
)
from .maps import MorphismStatus, RationalMap, sylvester_matrix

try:
    import gmpy2
except ImportError:  # pragma: no cover
    gmpy2 = None

# Certified inequalities are asserted with this slack to absorb log rounding.
HEIGHT_SLACK = 1e-9
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ProjPoint:
    """Canonical representative: coprime integers, first nonzero entry positive.

    Build instances with :func:`normalize`; the constructor does not check.
    """

    coords: tuple

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def affine(self):
        """x = X0/X1 on the line (None at infinity)."""
        if self.n != 1:
            raise DimensionMismatchError("affine coordinate only defined on P^1")
        x0, x1 = self.coords
        if x1 == 0:
            return None
        return Fraction(int(x0), int(x1))

    def __str__(self):
        return "[" + " : ".join(str(int(c)) if abs(c).bit_length() < 256 else _short(c) for c in self.coords) + "]"


def _short(c) -> str:
    return f"<{abs(c).bit_length()}-bit {'-' if c < 0 else ''}int>"


def _gcd(a, b):
    if gmpy2 is not None and (type(a) is not int or type(b) is not int):
        return gmpy2.gcd(a, b)
    return math.gcd(a, b)


def normalize(raw: Sequence) -> ProjPoint:
    """Clear denominators, divide by the gcd and make the first nonzero entry positive."""
    vals = [x if isinstance(x, (int, Fraction)) or _is_mpz(x) else Fraction(x) for x in raw]
    if not any(vals):
        raise ZeroInputError("the zero tuple is not a projective point")
    den = 1
    for x in vals:
        if isinstance(x, Fraction):
            den = den * x.denominator // math.gcd(den, x.denominator)
    if den != 1:
        vals = [int(x * den) if isinstance(x, Fraction) else x * den for x in vals]
    else:
        vals = [int(x) if isinstance(x, Fraction) else x for x in vals]
    g = 0
    for x in vals:
        g = _gcd(g, x)
        if g == 1:
            break
    if g != 1:
        vals = [x // g for x in vals]
    first = next(x for x in vals if x)
    if first < 0:
        vals = [-x for x in vals]
    return ProjPoint(tuple(vals))


def _is_mpz(x) -> bool:
    return gmpy2 is not None and isinstance(x, type(gmpy2.mpz(0)))


def parse_point(text: str, n: int | None = None) -> ProjPoint:
    """``"[a : b : ...]"`` with integer or rational entries, or a bare affine value on P^1."""
    s = text.strip()
    if s.startswith("[") and s.endswith("]"):
        s = s[1:-1]
    parts = [p.strip() for p in s.split(":")]
    try:
        vals = [Fraction(p) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad point {text!r}: {exc}") from None
    if len(vals) == 1:
        vals = [vals[0], Fraction(1)]
    if n is not None and len(vals) != n + 1:
        raise DimensionMismatchError(f"point {text!r} is not in P^{n}")
    return normalize(vals)


def log_abs(x) -> float:
    """Natural log of |x| for a nonzero big integer, relative error well below 1e-12."""
    x = abs(x)
    b = x.bit_length()
    if b <= 1000:
        return math.log(int(x))
    top = int(x >> (b - 64))
    return math.log(top) + (b - 64) * _LOG2


def weil_height(P: ProjPoint) -> float:
    return log_abs(max(abs(c) for c in P.coords))


def apply(f: RationalMap, P: ProjPoint) -> ProjPoint:
    if len(P.coords) != f.n + 1:
        raise DimensionMismatchError(f"point in P^{len(P.coords) - 1} for a map on P^{f.n}")
    vals = [form_eval(F, P.coords) for F in f.forms]
    if not any(vals):
        raise IndeterminatePoint(f"{f.label} is not defined at {P}", point=P)
    return normalize(vals)


# ---------------------------------------------------------------------------
# height constants


class Certification(str, enum.Enum):
    CERTIFIED = "certified"
    USER_SUPPLIED = "user_supplied"
    EMPIRICAL = "empirical"

    @property
    def rank(self) -> int:
        return {"certified": 2, "user_supplied": 1, "empirical": 0}[self.value]


@dataclass(frozen=True)
class CertifiedConstant:
    value: float
    status: Certification
    samples: int | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("height constants are non-negative")
        if self.status is Certification.EMPIRICAL and self.samples is None:
            raise ValueError("empirical constants must record their sample count")

    @property
    def certified(self) -> bool:
        return self.status is Certification.CERTIFIED


def weakest(statuses: Iterable[Certification]) -> Certification:
    return min(statuses, key=lambda s: s.rank)


def c_upper(f: RationalMap) -> CertifiedConstant:
    """h(f(P)) <= d h(P) + c for all P: c = log max_i(#terms(F_i) * max|coef(F_i)|)."""
    best = max(len(F) * F.max_abs_coefficient() for F in f.forms)
    return CertifiedConstant(math.log(best), Certification.CERTIFIED)


@dataclass(frozen=True)
class Cofactors:
    resultant: int
    # cofactors[i] = (G_i0, G_i1) with G_i0 F0 + G_i1 F1 = R X_i^(2d-1)
    cofactors: tuple


def _solve_fraction(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(A)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                fac = M[r][col]
                M[r] = [a - fac * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def line_cofactors(f: RationalMap) -> Cofactors:
    """Integer forms G_ij of degree d-1 with G_i0 F0 + G_i1 F1 = R X_i^(2d-1).

    Solves the transposed Sylvester system exactly and re-verifies the
    identity by polynomial arithmetic before returning.
    """
    if f.n != 1:
        raise DimensionMismatchError("cofactors are only computed on P^1")
    F0, F1 = f.forms
    d = f.degree
    M = sylvester_matrix(F0, F1)
    from .maps import bareiss_det

    R = bareiss_det(M)
    if R == 0:
        raise NotAMorphismError(f"{f.label} has a common root (resultant 0)")
    size = 2 * d
    At = [[Fraction(M[r][c]) for r in range(size)] for c in range(size)]
    out = []
    for i in range(2):
        target = [Fraction(0)] * size
        target[0 if i == 0 else size - 1] = Fraction(R)
        u = _solve_fraction(At, target)
        if any(x.denominator != 1 for x in u):
            raise ArithmeticError("cofactor solution is not integral")
        g0 = HomogeneousForm.from_dict(2, d - 1, {(d - 1 - j, j): int(u[j]) for j in range(d)})
        g1 = HomogeneousForm.from_dict(2, d - 1, {(d - 1 - j, j): int(u[d + j]) for j in range(d)})
        lhs = g0 * F0 + g1 * F1
        exps = (2 * d - 1, 0) if i == 0 else (0, 2 * d - 1)
        if lhs != HomogeneousForm.monomial(2, exps, R):
            raise ArithmeticError("cofactor identity failed verification")
        out.append((g0, g1))
    return Cofactors(R, tuple(out))


def c_lower_p1(f: RationalMap) -> CertifiedConstant:
    """h(f(P)) >= d h(P) - c on P^1 via the resultant cofactor identity.

    For coprime integer x with H = max|x_i|, pick i with |x_i| = H:
    |R| H^(2d-1) <= 2 d g H^(d-1) max|F(x)|, where g bounds the cofactor
    coefficients, and gcd(F0(x), F1(x)) divides R.  Hence c = log(2 d g).
    """
    if f.n != 1:
        raise DimensionMismatchError("lower height constant is only certified on P^1")
    if f.morphism_status is not MorphismStatus.CERTIFIED_MORPHISM:
        raise NotAMorphismError(f"{f.label} is not a certified morphism")
    cof = line_cofactors(f)
    g = max(G.max_abs_coefficient() for pair in cof.cofactors for G in pair)
    return CertifiedConstant(math.log(2 * f.degree * g), Certification.CERTIFIED)


def c_two_sided(f: RationalMap, n_samples: int = 1000, seed: int = 0) -> CertifiedConstant:
    if f.n == 1 and f.morphism_status is MorphismStatus.CERTIFIED_MORPHISM:
        return CertifiedConstant(
            max(c_upper(f).value, c_lower_p1(f).value), Certification.CERTIFIED
        )
    return c_empirical(f, n_samples, seed)


def c_set(
    S: Mapping[str, RationalMap] | Iterable[RationalMap],
    user_constants: Mapping[str, float] | None = None,
    n_samples: int = 1000,
    seed: int = 0,
) -> CertifiedConstant:
    """C_S = max(1, max over S of C(phi)); status is the weakest member status."""
    maps = list(S.values()) if isinstance(S, Mapping) else list(S)
    if not maps:
        raise ZeroInputError("empty map set")
    consts = []
    for f in maps:
        if user_constants and f.label in user_constants:
            consts.append(CertifiedConstant(float(user_constants[f.label]), Certification.USER_SUPPLIED))
        else:
            consts.append(c_two_sided(f, n_samples, seed))
    value = max(1.0, max(c.value for c in consts))
    status = weakest(c.status for c in consts)
    samples = sum(c.samples or 0 for c in consts) if status is Certification.EMPIRICAL else None
    return CertifiedConstant(value, status, samples)


def c_sup(S: Mapping[str, RationalMap], **kw) -> CertifiedConstant:
    """max over S of C(phi), without the floor at 1."""
    maps = list(S.values())
    consts = [c_two_sided(f, **kw) for f in maps]
    status = weakest(c.status for c in consts)
    samples = sum(c.samples or 0 for c in consts) if status is Certification.EMPIRICAL else None
    return CertifiedConstant(max(c.value for c in consts), status, samples)


def sample_points(n: int, count: int, seed: int, max_height: float = 10.0, stream: int = 0):
    """Deterministic random rational points with h(P) <= max_height.

    Each point first draws a log-uniform bound B <= e^max_height, then
    uniform integer coordinates in [-B, B].
    """
    pos = 0
    out = []
    while len(out) < count:
        draws = kernels.draw_block(seed, stream, pos, n + 2)
        pos += n + 2
        bound = int(math.exp(max_height * (draws[0] / 2.0**64)))
        raw = [d % (2 * bound + 1) - bound for d in draws[1:]]
        if not any(raw):
            continue
        out.append(normalize(raw))
    return out


def c_empirical(f: RationalMap, n_samples: int = 1000, seed: int = 0) -> CertifiedConstant:
    """max |h(f(P)) - d h(P)| over sampled points of height <= 10."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    worst = 0.0
    used = 0
    for P in sample_points(f.n, n_samples, seed):
        try:
            Q = apply(f, P)
        except IndeterminatePoint:
            continue
        used += 1
        worst = max(worst, abs(weil_height(Q) - f.degree * weil_height(P)))
    if used == 0:
        raise MathPreconditionError("every sampled point was indeterminate")
    return CertifiedConstant(worst, Certification.EMPIRICAL, samples=used)


# ---------------------------------------------------------------------------
# approximate mode


@dataclass(frozen=True)
class HeightInterval:
    lo: float
    hi: float

    def contains(self, x: float, slack: float = HEIGHT_SLACK) -> bool:
        return self.lo - slack <= x <= self.hi + slack


def propagate_height_bounds(
    h0: float, degrees: Sequence[int], lower_const: float, upper_const: float
) -> list[HeightInterval]:
    """Intervals for h(gamma_n P) from h(P) without exact coordinates.

    Uses h(phi Q) in [d h(Q) - c_lo, d h(Q) + c_up] step by step; heights are
    never negative.  Only interval bounds are reported.
    """
    out = [HeightInterval(h0, h0)]
    lo = hi = h0
    for d in degrees:
        lo = max(0.0, d * lo - lower_const)
        hi = d * hi + upper_const
        out.append(HeightInterval(lo, hi))
    return out
