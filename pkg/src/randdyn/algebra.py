"""Exact homogeneous forms over the integers.

Polynomials are sparse: a dict mapping exponent tuples to nonzero Python
ints.  :class:`HomogeneousForm` is the immutable public wrapper; the module
level ``_p*`` helpers operate on raw dicts and are shared with ``maps``.

Multiplication goes through :func:`randdyn.kernels.mul_packed`, which packs
each exponent tuple into a single integer key (base = max exponent + 1) so
that monomial multiplication becomes integer addition.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import kernels
from .errors import ArityError, DegreeMismatchError, ResourceLimitError, ZeroInputError

try:
    import gmpy2

    _mpz = gmpy2.mpz
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    gmpy2 = None
    _mpz = None

DEFAULT_TERM_CAP = 10**6
_BIG_BITS = 4096
# primes for the modular coprimality certificate
_PRIMES = (2305843009213693951, 4611686018427387847)

Exps = tuple


# ---------------------------------------------------------------------------
# raw sparse-dict helpers


def _pack(p: Mapping[Exps, int], base: int, nv: int):
    keys = []
    for e in p:
        k = 0
        for x in reversed(e):
            k = k * base + x
        keys.append(k)
    return keys, list(p.values())


def _unpack(packed: Mapping[int, int], base: int, nv: int) -> dict:
    out = {}
    for k, c in packed.items():
        e = []
        for _ in range(nv):
            k, r = divmod(k, base)
            e.append(r)
        out[tuple(e)] = c
    return out


def _maxexp(p):
    return max((max(e) for e in p), default=0)


def _pmul(a: dict, b: dict, cap: int = DEFAULT_TERM_CAP) -> dict:
    if not a or not b:
        return {}
    if len(a) == 1 and len(b) == 1:
        (ea, ca), = a.items()
        (eb, cb), = b.items()
        return {tuple(x + y for x, y in zip(ea, eb)): ca * cb}
    nv = len(next(iter(a)))
    if nv == 0:
        return {(): a[()] * b[()]}
    if len(a) * len(b) > cap:
        bound = _monomial_bound(a, b, nv)
        if bound > cap:
            raise ResourceLimitError(
                f"product may have up to {bound} terms (cap {cap})"
            )
    base = _maxexp(a) + _maxexp(b) + 1
    ka, ca = _pack(a, base, nv)
    kb, cb = _pack(b, base, nv)
    out = _unpack(kernels.mul_packed(ka, ca, kb, cb), base, nv)
    if len(out) > cap:
        raise ResourceLimitError(f"form with {len(out)} terms exceeds cap {cap}")
    return out


def _monomial_bound(a, b, nv):
    da = {sum(e) for e in a}
    db = {sum(e) for e in b}
    if len(da) == 1 and len(db) == 1:
        d = da.pop() + db.pop()
        return math.comb(d + nv - 1, nv - 1)
    return len(a) * len(b)


def _padd(a: dict, b: dict, sign: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + sign * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _pscale(a: dict, c: int) -> dict:
    if c == 0:
        return {}
    return {e: c * v for e, v in a.items()}


def _pshift(a: dict, shift: Exps) -> dict:
    return {tuple(x + y for x, y in zip(e, shift)): c for e, c in a.items()}


def _icontent(a: dict) -> int:
    g = 0
    for c in a.values():
        g = math.gcd(g, c)
        if g == 1:
            break
    return g


def _lead(a: dict) -> Exps:
    # lex order on exponent tuples == graded lex for homogeneous input
    return max(a, key=_glex_key)


def _glex_key(e):
    return (sum(e), e)


def _sign_normal(a: dict) -> dict:
    if a and a[_lead(a)] < 0:
        return _pscale(a, -1)
    return a


def _divexact(a: dict, b: dict) -> dict:
    """Exact quotient a / b; raises ArithmeticError if b does not divide a."""
    if not b:
        raise ZeroDivisionError("division by zero polynomial")
    if not a:
        return {}
    if len(b) == 1:
        (eb, cb), = b.items()
        out = {}
        for e, c in a.items():
            q, r = divmod(c, cb)
            ex = tuple(x - y for x, y in zip(e, eb))
            if r or min(ex) < 0:
                raise ArithmeticError("inexact division")
            out[ex] = q
        return out
    lb = max(b)
    lcb = b[lb]
    rem = dict(a)
    heap = [tuple(-x for x in e) for e in rem]
    heapq.heapify(heap)
    quot = {}
    while rem:
        while True:
            neg = heapq.heappop(heap)
            k = tuple(-x for x in neg)
            if k in rem:
                break
        c = rem[k]
        qe = tuple(x - y for x, y in zip(k, lb))
        q, r = divmod(c, lcb)
        if r or min(qe) < 0:
            raise ArithmeticError("inexact division")
        quot[qe] = q
        for e, cb in b.items():
            t = tuple(x + y for x, y in zip(qe, e))
            v = rem.get(t, 0) - q * cb
            if v:
                if t not in rem:
                    heapq.heappush(heap, tuple(-x for x in t))
                rem[t] = v
            else:
                rem.pop(t, None)
    return quot


def _vars_in(a: dict) -> set:
    out = set()
    for e in a:
        for i, x in enumerate(e):
            if x:
                out.add(i)
    return out


def _deg_in(a: dict, v: int) -> int:
    return max((e[v] for e in a), default=-1)


def _coeffs_in(a: dict, v: int) -> dict:
    out: dict = {}
    for e, c in a.items():
        k = e[v]
        rest = e[:v] + (0,) + e[v + 1 :]
        out.setdefault(k, {})[rest] = c
    return out


def _is_const(a: dict) -> bool:
    return len(a) == 1 and not any(next(iter(a)))


def _gcd_list(polys: Iterable[dict]) -> dict:
    g: dict = {}
    for p in polys:
        g = _pgcd(g, p)
        if _is_const(g) and abs(next(iter(g.values()))) == 1:
            return {next(iter(g)): 1}
    return g


def _pgcd(a: dict, b: dict) -> dict:
    """gcd over Z[x] (hence over Q up to content), positive leading coefficient."""
    if not a:
        return _sign_normal(b)
    if not b:
        return _sign_normal(a)
    nv = len(next(iter(a)))
    zero = (0,) * nv
    va, vb = _vars_in(a), _vars_in(b)
    if not va or not vb:
        g = math.gcd(_icontent(a), _icontent(b))
        return {zero: g}
    common = va & vb
    if not common:
        return {zero: math.gcd(_icontent(a), _icontent(b))}
    only_a = va - vb
    if only_a:
        return _gcd_list([b, *_coeffs_in(a, min(only_a)).values()])
    only_b = vb - va
    if only_b:
        return _gcd_list([a, *_coeffs_in(b, min(only_b)).values()])
    v = min(common)
    ca = _gcd_list(_coeffs_in(a, v).values())
    cb = _gcd_list(_coeffs_in(b, v).values())
    c = _pgcd(ca, cb)
    pa = _divexact(a, ca)
    pb = _divexact(b, cb)
    if _deg_in(pa, v) < _deg_in(pb, v):
        pa, pb = pb, pa
    while True:
        r = _prem(pa, pb, v)
        if not r:
            break
        if _deg_in(r, v) == 0:
            return _sign_normal(c)
        pa, pb = pb, _pp_in(r, v)
    return _sign_normal(_pmul(c, _pp_in(pb, v)))


def _pp_in(a: dict, v: int) -> dict:
    return _sign_normal(_divexact(a, _gcd_list(_coeffs_in(a, v).values())))


def _prem(a: dict, b: dict, v: int) -> dict:
    db = _deg_in(b, v)
    lcb = _coeffs_in(b, v)[db]
    nv = len(next(iter(b)))
    r = a
    while r:
        dr = _deg_in(r, v)
        if dr < db:
            break
        lcr = _coeffs_in(r, v)[dr]
        shift = tuple(dr - db if i == v else 0 for i in range(nv))
        r = _padd(_pmul(lcb, r), _pmul(lcr, _pshift(b, shift)), -1)
    return r


# univariate mod-p helpers for the coprimality certificate

def _upoly_mod(coeffs: dict, p: int) -> list:
    n = max(coeffs, default=-1)
    out = [0] * (n + 1)
    for k, c in coeffs.items():
        out[k] = c % p
    while out and out[-1] == 0:
        out.pop()
    return out


def _ugcd_deg_mod(f: list, g: list, p: int) -> int:
    while g:
        inv = pow(g[-1], p - 2, p)
        while len(f) >= len(g) and f:
            q = f[-1] * inv % p
            s = len(f) - len(g)
            for i, c in enumerate(g):
                f[s + i] = (f[s + i] - q * c) % p
            while f and f[-1] == 0:
                f.pop()
        f, g = g, f
    return len(f) - 1


def _certify_coprime(a: dict, b: dict, rng: random.Random) -> bool:
    """Sound (one-sided) certificate that gcd(a, b) is constant.

    For each variable v, specialize the other variables at a random point
    mod a large prime.  If the leading coefficient of ``a`` in v survives,
    the degree in v of gcd(a, b) is at most the degree of the univariate
    gcd mod p.  Degree 0 in every variable means the gcd is constant.
    """
    nv = len(next(iter(a)))
    for v in range(nv):
        if _deg_in(a, v) <= 0 or _deg_in(b, v) <= 0:
            continue
        ok = False
        for p in _PRIMES:
            pt = [rng.randrange(1, p) for _ in range(nv)]
            ua, ub = {}, {}
            for src, dst in ((a, ua), (b, ub)):
                for e, c in src.items():
                    t = c
                    for i, x in enumerate(e):
                        if i != v and x:
                            t = t * pow(pt[i], x, p) % p
                    dst[e[v]] = (dst.get(e[v], 0) + t) % p
            fa, fb = _upoly_mod(ua, p), _upoly_mod(ub, p)
            if len(fa) - 1 != _deg_in(a, v):
                continue  # leading coefficient vanished; try another point
            ok = _ugcd_deg_mod(fa, fb, p) == 0
            break
        if not ok:
            return False
    return True


# ---------------------------------------------------------------------------
# public form type


@dataclass(frozen=True)
class HomogeneousForm:
    """Homogeneous polynomial in ``n_vars`` variables X0..X{n_vars-1}.

    ``terms`` is a tuple of ``(exponents, coefficient)`` pairs in descending
    graded-lex order with no zero coefficients.  Use :meth:`from_dict` to
    build one; it validates homogeneity and canonicalizes the order.
    """

    n_vars: int
    degree: int
    terms: tuple = ()

    @classmethod
    def from_dict(cls, n_vars: int, degree: int, terms: Mapping[Exps, int]) -> "HomogeneousForm":
        clean = {}
        for e, c in terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != n_vars:
                raise ArityError(f"monomial {e} has wrong arity for {n_vars} variables")
            if min(e, default=0) < 0:
                raise ValueError(f"negative exponent in {e}")
            if not c:
                continue
            if sum(e) != degree:
                raise DegreeMismatchError(f"monomial {e} is not of degree {degree}")
            clean[e] = int(c) if not isinstance(c, int) else c
        items = sorted(clean.items(), key=lambda kv: _glex_key(kv[0]), reverse=True)
        return cls(n_vars, degree, tuple(items))

    @classmethod
    def monomial(cls, n_vars: int, exps: Sequence[int], coef: int = 1) -> "HomogeneousForm":
        return cls.from_dict(n_vars, sum(exps), {tuple(exps): coef})

    @classmethod
    def variable(cls, n_vars: int, i: int) -> "HomogeneousForm":
        return cls.monomial(n_vars, [1 if j == i else 0 for j in range(n_vars)])

    @classmethod
    def constant(cls, n_vars: int, c: int) -> "HomogeneousForm":
        return cls.from_dict(n_vars, 0, {(0,) * n_vars: c})

    def as_dict(self) -> dict:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    @property
    def leading_coefficient(self) -> int:
        return self.terms[0][1] if self.terms else 0

    def max_abs_coefficient(self) -> int:
        return max((abs(c) for _, c in self.terms), default=0)

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "HomogeneousForm") -> "HomogeneousForm":
        _check_compatible(self, other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise DegreeMismatchError("cannot add forms of different degree")
        return HomogeneousForm.from_dict(self.n_vars, self.degree, _padd(self.as_dict(), other.as_dict()))

    def __neg__(self) -> "HomogeneousForm":
        return HomogeneousForm(self.n_vars, self.degree, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other: "HomogeneousForm") -> "HomogeneousForm":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return HomogeneousForm.from_dict(self.n_vars, self.degree, _pscale(self.as_dict(), other))
        _check_compatible(self, other)
        return HomogeneousForm.from_dict(
            self.n_vars, self.degree + other.degree, _pmul(self.as_dict(), other.as_dict())
        )

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "HomogeneousForm":
        return form_pow(self, k)

    def __call__(self, *coords):
        return form_eval(self, coords)

    def __str__(self) -> str:
        return format_form(self)

    def __repr__(self) -> str:
        return f"HomogeneousForm({format_form(self)!r}, n_vars={self.n_vars})"


def _check_compatible(a: HomogeneousForm, b: HomogeneousForm):
    if a.n_vars != b.n_vars:
        raise ArityError(f"forms in {a.n_vars} and {b.n_vars} variables")


def format_form(F: HomogeneousForm, names: Sequence[str] | None = None) -> str:
    if names is None:
        names = [f"X{i}" for i in range(F.n_vars)]
    if not F.terms:
        return "0"
    parts = []
    for idx, (e, c) in enumerate(F.terms):
        mono = "*".join(
            names[i] if x == 1 else f"{names[i]}^{x}" for i, x in enumerate(e) if x
        )
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if idx == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


def form_pow(F: HomogeneousForm, k: int, cap: int = DEFAULT_TERM_CAP) -> HomogeneousForm:
    if k < 0:
        raise ValueError("negative power")
    k0 = k
    result = {(0,) * F.n_vars: 1}
    base = F.as_dict()
    while k:
        if k & 1:
            result = _pmul(result, base, cap)
        k >>= 1
        if k:
            base = _pmul(base, base, cap)
    return HomogeneousForm.from_dict(F.n_vars, F.degree * k0, result)


def _as_big(x):
    if _mpz is not None and type(x) is int and x.bit_length() > _BIG_BITS:
        return _mpz(x)
    return x


def form_eval(F: HomogeneousForm, coords: Sequence[int]):
    """Exact value of ``F`` at integer ``coords``.

    Large coordinates are promoted to ``gmpy2.mpz`` (GMP multiplication);
    the result then compares/hashes like the equal Python int.
    """
    if len(coords) != F.n_vars:
        raise ArityError(f"form in {F.n_vars} variables evaluated at {len(coords)} coordinates")
    xs = [_as_big(x) for x in coords]
    powers: list[dict] = [dict() for _ in xs]
    total = 0
    for e, c in F.terms:
        t = c
        for i, k in enumerate(e):
            if not k:
                continue
            pw = powers[i].get(k)
            if pw is None:
                pw = xs[i] ** k
                powers[i][k] = pw
            t = t * pw
            if not t:
                break
        total += t
    return total


def form_substitute(
    F: HomogeneousForm, G: Sequence[HomogeneousForm], cap: int = DEFAULT_TERM_CAP
) -> HomogeneousForm:
    """F(G_0, ..., G_N) exactly; result has degree F.degree * e."""
    if len(G) != F.n_vars:
        raise ArityError(f"substituting {len(G)} forms into a form in {F.n_vars} variables")
    nv = G[0].n_vars
    e = G[0].degree
    for g in G:
        if g.n_vars != nv:
            raise ArityError("substituted forms have different numbers of variables")
        if g.degree != e:
            raise DegreeMismatchError("substituted forms must share a common degree")
    gd = [g.as_dict() for g in G]
    pow_cache: list[dict] = [{0: {(0,) * nv: 1}} for _ in G]

    def gpow(i, k):
        cache = pow_cache[i]
        if k not in cache:
            h = k // 2
            half = gpow(i, h)
            sq = _pmul(half, half, cap)
            cache[k] = _pmul(sq, gd[i], cap) if k & 1 else sq
        return cache[k]

    # terms sorted lex-descending share exponent prefixes; memoize partial products
    prefix_cache: dict = {(): {(0,) * nv: 1}}
    out: dict = {}
    for exps, c in F.terms:
        for j in range(1, len(exps) + 1):
            key = exps[:j]
            if key not in prefix_cache:
                prev = prefix_cache[exps[: j - 1]]
                prefix_cache[key] = prev if exps[j - 1] == 0 else _pmul(prev, gpow(j - 1, exps[j - 1]), cap)
        out = _padd(out, _pscale(prefix_cache[exps], c))
        if len(out) > cap:
            raise ResourceLimitError(f"substitution exceeded term cap {cap}")
    return HomogeneousForm.from_dict(nv, F.degree * e, out)


def content_and_primitive(F: HomogeneousForm) -> tuple[int, HomogeneousForm]:
    if F.is_zero():
        raise ZeroInputError("content of the zero form")
    c = _icontent(F.as_dict())
    c = abs(c)
    return c, HomogeneousForm(F.n_vars, F.degree, tuple((e, v // c) for e, v in F.terms))


def form_divexact(F: HomogeneousForm, D: HomogeneousForm) -> HomogeneousForm:
    _check_compatible(F, D)
    if F.is_zero():
        return HomogeneousForm(F.n_vars, F.degree - D.degree)
    q = _divexact(F.as_dict(), D.as_dict())
    return HomogeneousForm.from_dict(F.n_vars, F.degree - D.degree, q)


def form_gcd(forms: Sequence[HomogeneousForm], seed: int = 0) -> HomogeneousForm:
    """Primitive gcd of the forms with positive leading coefficient.

    Zero forms are ignored.  Fast paths: the common monomial factor is
    pulled out first; if any remaining form is a monomial, or a modular
    certificate proves coprimality, the rest of the gcd is 1.  Otherwise a
    primitive pseudo-remainder sequence is run pairwise.
    """
    if not forms:
        raise ZeroInputError("gcd of an empty list")
    nv = forms[0].n_vars
    for F in forms:
        if F.n_vars != nv:
            raise ArityError("gcd of forms in different numbers of variables")
    polys = [F.as_dict() for F in forms if not F.is_zero()]
    if not polys:
        raise ZeroInputError("gcd of all-zero forms")
    mono = [min(e[i] for p in polys for e in p) for i in range(nv)]
    mono_t = tuple(mono)
    if any(mono):
        neg = tuple(-x for x in mono)
        polys = [_pshift(p, neg) for p in polys]
    polys = [_divexact(p, {(0,) * nv: _icontent(p)}) for p in polys]
    polys.sort(key=len)
    rest: dict = {(0,) * nv: 1}
    if not any(len(p) == 1 for p in polys):
        rng = random.Random(seed)
        g = polys[0]
        for p in polys[1:]:
            if _certify_coprime(g, p, rng):
                g = {(0,) * nv: 1}
                break
            g = _pgcd(g, p)
            if _is_const(g):
                break
        rest = g
    rest = _sign_normal(_divexact(rest, {(0,) * nv: _icontent(rest)}))
    out = _pshift(rest, mono_t)
    deg = sum(next(iter(out)))
    return HomogeneousForm.from_dict(nv, deg, out)
