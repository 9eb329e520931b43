"""Valuation core: scalars, Laurent polynomials, Gauss valuations, Newton polygons.

All radii and norms live on the additive (valuation) side: a radius rho is stored
as r = -log(rho), exactly, as a rational number.  Two coefficient models are
supported:

* ``FieldMode.padic(p)`` -- scalars are exact rationals with the p-adic
  valuation, log base p.  val(p) = 1.
* ``FieldMode.eqchar0(prec)`` -- scalars are truncated Laurent series in an
  auxiliary variable ``u`` over Q with the u-adic valuation, log base e kept
  symbolic.  val(u) = 1.  Operations that would need coefficients past the
  tracked precision raise :class:`PrecisionError` instead of silently
  truncating.

Valuations are ``Fraction``s; ``+inf``/``-inf`` use the ``math`` floats, which
compare exactly against rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import (
    DegenerateInputError,
    IntervalError,
    LiftingError,
    ModeError,
    NormalizationError,
    ParameterError,
    PrecisionError,
    SlopeCollisionError,
)

INF = math.inf
NEG_INF = -math.inf

QLike = Union[int, str, Fraction]


def as_fraction(x: QLike) -> Fraction:
    """Coerce ints, Fractions and 'num/den' strings to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ParameterError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise ParameterError(f"cannot interpret {x!r} as an exact rational")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def padic_val(x: Fraction, p: int):
    """p-adic valuation of an exact rational; +inf for zero."""
    if x == 0:
        return INF
    v = 0
    num = x.numerator
    while num % p == 0:
        num //= p
        v += 1
    den = x.denominator
    while den % p == 0:
        den //= p
        v -= 1
    return v


def factorial_val(k: int, p: int) -> int:
    """val_p(k!) by Legendre's formula."""
    v = 0
    q = p
    while q <= k:
        v += k // q
        q *= p
    return v


@dataclass(frozen=True)
class FieldMode:
    """Coefficient-field model: ('padic', p) or ('eqchar0', prec)."""

    kind: str
    p: int = 0
    prec: int = 0

    @staticmethod
    def padic(p: int) -> "FieldMode":
        if not isinstance(p, int) or not is_prime(p):
            raise ParameterError(f"p must be a prime integer, got {p!r}")
        return FieldMode("padic", p=p)

    @staticmethod
    def eqchar0(prec: int = 16) -> "FieldMode":
        if not isinstance(prec, int) or prec <= 0:
            raise ParameterError(f"prec must be a positive integer, got {prec!r}")
        return FieldMode("eqchar0", prec=prec)

    @property
    def omega_val(self) -> Fraction:
        """c_omega = -log(omega): 1/(p-1) in p-adic mode, 0 in equal characteristic."""
        if self.kind == "padic":
            return Fraction(1, self.p - 1)
        return Fraction(0)

    def scalar(self, x) -> "Scalar":
        if isinstance(x, Scalar):
            if x.mode != self:
                raise ModeError("scalar belongs to a different field mode")
            return x
        if self.kind == "padic":
            return Scalar(self, frac=as_fraction(x))
        return Scalar(self, series={0: as_fraction(x)} if as_fraction(x) != 0 else {},
                      known_to=INF)

    def series_scalar(self, coeffs: dict, known_to=INF) -> "Scalar":
        if self.kind != "eqchar0":
            raise ModeError("series scalars only exist in eqchar0 mode")
        clean = {int(n): as_fraction(c) for n, c in coeffs.items() if as_fraction(c) != 0}
        if known_to is not INF:
            clean = {n: c for n, c in clean.items() if n < known_to}
        return Scalar(self, series=clean, known_to=known_to)

    def zero(self) -> "Scalar":
        return self.scalar(0)

    def one(self) -> "Scalar":
        return self.scalar(1)

    def derivation_val(self, k: int, r: Fraction):
        """Valuation of the k-fold derivation's operator norm at the point r.

        p-adic: val(k!) - k*r (the norm is |k!| rho^{-k}); equal characteristic
        zero: -k*r (k! is a unit).
        """
        if self.kind == "padic":
            return factorial_val(k, self.p) - k * r
        return -k * r


class Scalar:
    """Exact field element in one of the two coefficient models.

    p-adic mode wraps a Fraction.  eqchar0 mode holds a finite u-support map
    plus ``known_to``: coefficients of u^n are known exactly for n < known_to
    (INF means the element is exact).
    """

    __slots__ = ("mode", "frac", "series", "known_to")

    def __init__(self, mode: FieldMode, frac: Fraction | None = None,
                 series: dict | None = None, known_to=INF):
        self.mode = mode
        if mode.kind == "padic":
            self.frac = frac if frac is not None else Fraction(0)
            self.series = None
            self.known_to = INF
        else:
            self.frac = None
            self.series = dict(series) if series else {}
            self.known_to = known_to

    # -- predicates -------------------------------------------------------

    def is_zero(self) -> bool:
        """Provably zero (truncated zeros, with unknown tail, return False)."""
        if self.mode.kind == "padic":
            return self.frac == 0
        return not self.series and self.known_to is INF

    def is_truncated_zero(self) -> bool:
        return self.mode.kind == "eqchar0" and not self.series and self.known_to is not INF

    def is_one(self) -> bool:
        if self.mode.kind == "padic":
            return self.frac == 1
        return self.series == {0: Fraction(1)} and self.known_to is INF

    # -- valuation ---------------------------------------------------------

    def val(self):
        """Additive valuation; +inf for provable zero."""
        if self.mode.kind == "padic":
            return padic_val(self.frac, self.mode.p)
        if not self.series:
            if self.known_to is INF:
                return INF
            raise PrecisionError(
                f"valuation of a series known only up to u^{self.known_to} "
                "with no visible support")
        return min(self.series)

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Scalar") -> "Scalar":
        if not isinstance(other, Scalar):
            other = self.mode.scalar(other)
        if other.mode != self.mode:
            raise ModeError("cannot mix scalars from different field modes")
        return other

    def __add__(self, other):
        other = self._check(other)
        if self.mode.kind == "padic":
            return Scalar(self.mode, frac=self.frac + other.frac)
        known = min(self.known_to, other.known_to)
        out = dict(self.series)
        for n, c in other.series.items():
            out[n] = out.get(n, Fraction(0)) + c
        out = {n: c for n, c in out.items() if c != 0 and n < known}
        return Scalar(self.mode, series=out, known_to=known)

    def __neg__(self):
        if self.mode.kind == "padic":
            return Scalar(self.mode, frac=-self.frac)
        return Scalar(self.mode, series={n: -c for n, c in self.series.items()},
                      known_to=self.known_to)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __mul__(self, other):
        other = self._check(other)
        if self.mode.kind == "padic":
            return Scalar(self.mode, frac=self.frac * other.frac)
        if self.is_zero() or other.is_zero():
            return Scalar(self.mode, series={}, known_to=INF)

        def eff_min(s: "Scalar"):
            # a truncated zero is O(u^known_to)
            return min(s.series) if s.series else s.known_to

        known = INF
        if self.known_to is not INF:
            known = self.known_to + eff_min(other)
        if other.known_to is not INF:
            known = min(known, other.known_to + eff_min(self))
        out: dict = {}
        for n1, c1 in self.series.items():
            for n2, c2 in other.series.items():
                n = n1 + n2
                if n < known:
                    out[n] = out.get(n, Fraction(0)) + c1 * c2
        out = {n: c for n, c in out.items() if c != 0}
        return Scalar(self.mode, series=out, known_to=known)

    def inverse(self) -> "Scalar":
        if self.mode.kind == "padic":
            if self.frac == 0:
                raise ZeroDivisionError("inverse of zero")
            return Scalar(self.mode, frac=1 / self.frac)
        if not self.series:
            if self.known_to is INF:
                raise ZeroDivisionError("inverse of zero")
            raise PrecisionError("cannot invert a series with no visible support")
        o = min(self.series)
        lead = self.series[o]
        # Known inverse terms: u^{-o}/lead * (1 + g)^{-1} with g of positive order,
        # expanded while coefficients stay certified.
        span = (self.known_to - o) if self.known_to is not INF else self.mode.prec
        span = min(span, self.mode.prec)
        g = {n - o: c / lead for n, c in self.series.items() if n != o}
        inv = {0: Fraction(1)}
        acc = {0: Fraction(1)}  # (-g)^k accumulated
        for _ in range(1, span):
            nxt: dict = {}
            for n1, c1 in acc.items():
                for n2, c2 in g.items():
                    n = n1 + n2
                    if n < span:
                        nxt[n] = nxt.get(n, Fraction(0)) - c1 * c2
            acc = {n: c for n, c in nxt.items() if c != 0}
            if not acc:
                break
            for n, c in acc.items():
                inv[n] = inv.get(n, Fraction(0)) + c
        exact = not g and self.known_to is INF
        known = INF if exact else span - o
        out = {n - o: c / lead for n, c in inv.items() if c != 0}
        if known is not INF:
            out = {n: c for n, c in out.items() if n < known}
        return Scalar(self.mode, series=out, known_to=known)

    def __truediv__(self, other):
        other = self._check(other)
        return self * other.inverse()

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = self.mode.scalar(other)
            except (ParameterError, ModeError):
                return NotImplemented
        if self.mode != other.mode:
            return False
        if self.mode.kind == "padic":
            return self.frac == other.frac
        return self.series == other.series and self.known_to == other.known_to

    def __hash__(self):
        if self.mode.kind == "padic":
            return hash((self.mode, self.frac))
        return hash((self.mode, tuple(sorted(self.series.items())), self.known_to))

    # -- views --------------------------------------------------------------

    def residue(self) -> Fraction:
        """Constant coefficient (u^0 term) of a nonnegative-valuation element."""
        if self.mode.kind == "padic":
            return self.frac
        if self.series and min(self.series) < 0:
            raise DegenerateInputError("residue of a negative-valuation series")
        if self.known_to <= 0:
            raise PrecisionError("residue not determined at this precision")
        return self.series.get(0, Fraction(0))

    def as_fraction(self) -> Fraction:
        """The element as an exact rational; fails off the rational locus."""
        if self.mode.kind == "padic":
            return self.frac
        if all(n == 0 for n in self.series) and self.known_to is INF:
            return self.series.get(0, Fraction(0))
        raise ModeError("series scalar is not an exact rational")

    def sort_key(self):
        if self.mode.kind == "padic":
            return (self.frac,)
        return tuple(sorted(self.series.items()))

    def __repr__(self):
        if self.mode.kind == "padic":
            return f"Scalar({self.frac})"
        body = " + ".join(f"{c}*u^{n}" for n, c in sorted(self.series.items())) or "0"
        tail = "" if self.known_to is INF else f" + O(u^{self.known_to})"
        return f"Scalar({body}{tail})"


class LaurentPoly:
    """Finite-support Laurent polynomial over one field mode.

    ``coeffs`` maps integer exponents to nonzero scalars.  ``trunc_order``
    (optional) records that exponents >= trunc_order are unknown; it is set
    only on approximate results and is propagated conservatively.
    """

    __slots__ = ("mode", "coeffs", "trunc_order")

    def __init__(self, mode: FieldMode, coeffs: dict | None = None,
                 trunc_order: int | None = None):
        self.mode = mode
        clean: dict = {}
        if coeffs:
            for n, c in coeffs.items():
                s = mode.scalar(c)
                if not s.is_zero():
                    if trunc_order is None or n < trunc_order:
                        clean[int(n)] = s
        self.coeffs = clean
        self.trunc_order = trunc_order

    # -- constructors --------------------------------------------------------

    @staticmethod
    def from_dict(mode: FieldMode, d: dict, trunc_order: int | None = None) -> "LaurentPoly":
        return LaurentPoly(mode, d, trunc_order)

    @staticmethod
    def constant(mode: FieldMode, c) -> "LaurentPoly":
        return LaurentPoly(mode, {0: c})

    @staticmethod
    def monomial(mode: FieldMode, c, n: int) -> "LaurentPoly":
        return LaurentPoly(mode, {n: c})

    @staticmethod
    def zero(mode: FieldMode) -> "LaurentPoly":
        return LaurentPoly(mode, {})

    @staticmethod
    def one(mode: FieldMode) -> "LaurentPoly":
        return LaurentPoly(mode, {0: 1})

    @staticmethod
    def variable(mode: FieldMode) -> "LaurentPoly":
        return LaurentPoly(mode, {1: 1})

    # -- structure -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_one(self) -> bool:
        return set(self.coeffs) == {0} and self.coeffs[0].is_one()

    def is_monomial(self) -> bool:
        return len(self.coeffs) == 1

    def min_exp(self) -> int:
        if not self.coeffs:
            raise DegenerateInputError("zero polynomial has no support")
        return min(self.coeffs)

    def max_exp(self) -> int:
        if not self.coeffs:
            raise DegenerateInputError("zero polynomial has no support")
        return max(self.coeffs)

    def coeff(self, n: int) -> Scalar:
        return self.coeffs.get(n, self.mode.zero())

    def support(self) -> list:
        return sorted(self.coeffs)

    def _check(self, other) -> "LaurentPoly":
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(self.mode, other)
        if other.mode != self.mode:
            raise ModeError("cannot mix Laurent polynomials from different modes")
        return other

    @staticmethod
    def _merge_trunc(a: int | None, b: int | None) -> int | None:
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    # -- ring operations -------------------------------------------------------

    def __add__(self, other):
        other = self._check(other)
        out = {n: c for n, c in self.coeffs.items()}
        for n, c in other.coeffs.items():
            if n in out:
                s = out[n] + c
                if s.is_zero():
                    del out[n]
                else:
                    out[n] = s
            else:
                out[n] = c
        return LaurentPoly(self.mode, out, self._merge_trunc(self.trunc_order, other.trunc_order))

    def __neg__(self):
        return LaurentPoly(self.mode, {n: -c for n, c in self.coeffs.items()},
                           self.trunc_order)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __mul__(self, other):
        other = self._check(other)
        trunc = None
        if self.trunc_order is not None:
            trunc = self.trunc_order + (other.min_exp() if other.coeffs else 0)
        if other.trunc_order is not None:
            t2 = other.trunc_order + (self.min_exp() if self.coeffs else 0)
            trunc = t2 if trunc is None else min(trunc, t2)
        out: dict = {}
        for n1, c1 in self.coeffs.items():
            for n2, c2 in other.coeffs.items():
                n = n1 + n2
                if trunc is not None and n >= trunc:
                    continue
                if n in out:
                    out[n] = out[n] + c1 * c2
                else:
                    out[n] = c1 * c2
        return LaurentPoly(self.mode, out, trunc)

    def scalar_mul(self, c) -> "LaurentPoly":
        s = self.mode.scalar(c)
        return LaurentPoly(self.mode, {n: v * s for n, v in self.coeffs.items()},
                           self.trunc_order)

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by t^k."""
        return LaurentPoly(self.mode, {n + k: c for n, c in self.coeffs.items()},
                           None if self.trunc_order is None else self.trunc_order + k)

    def monomial_div(self, c, n: int) -> "LaurentPoly":
        """Exact division by the monomial c*t^n."""
        inv = self.mode.scalar(c).inverse()
        return self.scalar_mul(inv).shift(-n)

    def __eq__(self, other):
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return (self.mode == other.mode and self.coeffs == other.coeffs
                and self.trunc_order == other.trunc_order)

    def __hash__(self):
        return hash((self.mode, tuple(sorted((n, c) for n, c in self.coeffs.items()))))

    def __pow__(self, k: int) -> "LaurentPoly":
        if not isinstance(k, int):
            raise ParameterError("polynomial powers must be integers")
        if k < 0:
            if not self.is_monomial():
                raise ParameterError("negative powers only exist for monomials")
            n = self.min_exp()
            return LaurentPoly.monomial(self.mode, self.coeffs[n].inverse(), -n) ** (-k)
        out = LaurentPoly.one(self.mode)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def truncate(self, order: int) -> "LaurentPoly":
        return LaurentPoly(self.mode, {n: c for n, c in self.coeffs.items() if n < order},
                           order)

    def drop_trunc(self) -> "LaurentPoly":
        return LaurentPoly(self.mode, self.coeffs, None)

    def residue_class(self, j: int, p: int) -> "LaurentPoly":
        """Terms with exponent = j mod p, reindexed by (exp - j)/p.

        Used to regroup a polynomial in t as a polynomial in s = t^p.
        """
        out = {(n - j) // p: c for n, c in self.coeffs.items() if (n - j) % p == 0}
        return LaurentPoly(self.mode, out)

    def __repr__(self):
        if not self.coeffs:
            return "LaurentPoly(0)"
        terms = " + ".join(f"({self.coeffs[n]!r})*t^{n}" for n in sorted(self.coeffs))
        tail = "" if self.trunc_order is None else f" + O(t^{self.trunc_order})"
        return f"LaurentPoly({terms}{tail})"


# -- derivations ---------------------------------------------------------------

DERIVATIONS = ("ddt", "t_ddt")


def derive(f: LaurentPoly, kind: str) -> LaurentPoly:
    """Apply d/dt or t*d/dt to a Laurent polynomial."""
    if kind not in DERIVATIONS:
        raise ParameterError(f"unknown derivation {kind!r}")
    shift = -1 if kind == "ddt" else 0
    out = {}
    for n, c in f.coeffs.items():
        if n != 0:
            out[n + shift] = c * f.mode.scalar(n)
    trunc = None
    if f.trunc_order is not None:
        trunc = f.trunc_order + shift
    return LaurentPoly(f.mode, out, trunc)


# -- Gauss valuations ------------------------------------------------------------


def gauss_val(f: LaurentPoly, r):
    """w_r(f) = min_n (val(c_n) + n*r); +inf for the zero polynomial.

    ``r`` may be +-inf, in which case the limiting value is returned (the
    extreme exponent decides).
    """
    if f.is_zero():
        return INF
    if r is INF or r is NEG_INF:
        n = f.min_exp() if r is INF else f.max_exp()
        v = f.coeffs[n].val()
        if n == 0:
            return v
        sign = 1 if r is INF else -1
        return INF if sign * n > 0 else NEG_INF
    r = as_fraction(r)
    best = None
    for n, c in f.coeffs.items():
        w = c.val() + n * r
        if best is None or w < best:
            best = w
    return best


def interval_gauss_val(f: LaurentPoly, r1, r2):
    """min of w_r(f) over r in [r1, r2]; equals the endpoint minimum.

    w_r is a minimum of affine functions of r, hence concave, so its minimum
    over a closed interval is attained at an endpoint.
    """
    lo = r1 if r1 in (INF, NEG_INF) else as_fraction(r1)
    hi = r2 if r2 in (INF, NEG_INF) else as_fraction(r2)
    if not lo <= hi:
        raise IntervalError(f"empty interval: r1={r1} > r2={r2}")
    return min(gauss_val(f, lo), gauss_val(f, hi))


# -- Newton polygons --------------------------------------------------------------


@dataclass(frozen=True)
class NewtonPolygon:
    """Root-valuation multiset of a polynomial at a fixed Gauss point.

    ``entries`` is a tuple of (root_val, multiplicity) sorted by strictly
    increasing root_val; root valuations are the negatives of the lower-hull
    slopes.  +inf entries account for vanishing low-order coefficients.
    """

    entries: tuple
    degree: int

    def multiset(self) -> list:
        out = []
        for v, m in self.entries:
            out.extend([v] * m)
        return out

    def count_above(self, cut) -> int:
        return sum(m for v, m in self.entries if v > cut)

    def restrict(self, lo=NEG_INF, hi=INF) -> "NewtonPolygon":
        kept = tuple((v, m) for v, m in self.entries if lo < v < hi)
        return NewtonPolygon(kept, sum(m for _, m in kept))

    def __contains__(self, cut) -> bool:
        return any(v == cut for v, _ in self.entries)


def newton_polygon(coeffs: Sequence[LaurentPoly], r) -> NewtonPolygon:
    """Newton polygon of sum_i coeffs[i] T^i at the Gauss point r.

    The leading coefficient must be nonzero; zero inner coefficients are
    allowed and vanishing low-order ones produce +inf root valuations.
    """
    if r is INF or r is NEG_INF:
        raise IntervalError("Newton polygons require a finite Gauss point")
    r = as_fraction(r)
    coeffs = list(coeffs)
    if not coeffs or coeffs[-1].is_zero():
        raise DegenerateInputError("leading coefficient must be nonzero")
    n = len(coeffs) - 1
    if n == 0:
        return NewtonPolygon((), 0)
    pts = [(i, gauss_val(c, r)) for i, c in enumerate(coeffs) if not c.is_zero()]
    j0 = pts[0][0]
    entries = []
    if j0 > 0:
        entries.append((INF, j0))
    # lower convex hull, left to right, exact arithmetic
    hull: list = []
    for i, y in pts:
        while len(hull) >= 2:
            (i1, y1), (i2, y2) = hull[-2], hull[-1]
            # drop middle point if it lies on or above the chord
            if (y2 - y1) * (i - i1) >= (y - y1) * (i2 - i1):
                hull.pop()
            else:
                break
        hull.append((i, y))
    segs = []
    for (i1, y1), (i2, y2) in zip(hull, hull[1:]):
        slope = Fraction(y2 - y1, i2 - i1)
        segs.append((-slope, i2 - i1))
    segs.reverse()  # hull slopes increase, so root_vals now increase
    entries = segs + entries
    return NewtonPolygon(tuple(entries), n)


# -- slope factorization -----------------------------------------------------------


@dataclass
class SplitResult:
    """Two monic factors and a certified bound on w_r(input - low*high)."""

    low: list
    high: list
    bound: object  # Fraction or +inf


def _poly_w(poly: Sequence[LaurentPoly], r):
    vals = [gauss_val(c, r) for c in poly]
    return min(vals) if vals else INF


def _poly_mul(a: Sequence[LaurentPoly], b: Sequence[LaurentPoly]) -> list:
    mode = a[0].mode
    out = [LaurentPoly.zero(mode) for _ in range(len(a) + len(b) - 1)]
    for i, ca in enumerate(a):
        if ca.is_zero():
            continue
        for j, cb in enumerate(b):
            if cb.is_zero():
                continue
            out[i + j] = out[i + j] + ca * cb
    return out


def _poly_sub(a: Sequence[LaurentPoly], b: Sequence[LaurentPoly]) -> list:
    mode = a[0].mode if a else b[0].mode
    size = max(len(a), len(b))
    out = []
    for i in range(size):
        ca = a[i] if i < len(a) else LaurentPoly.zero(mode)
        cb = b[i] if i < len(b) else LaurentPoly.zero(mode)
        out.append(ca - cb)
    return out


def _poly_add(a: Sequence[LaurentPoly], b: Sequence[LaurentPoly]) -> list:
    return _poly_sub(a, [-c for c in b])


def approx_inverse(f: LaurentPoly, r, target) -> LaurentPoly:
    """g with w_r(f*g - 1) >= target, via Newton iteration with certified pruning.

    Requires a strictly dominant monomial of f at the Gauss point (otherwise
    the inverse has no adequate truncated Laurent representative and a
    :class:`LiftingError` is raised).  The residual 1 - f*g is recomputed
    exactly each round, so the termination test certifies the bound; pruned
    terms are chosen so their contribution to the residual already meets it.
    """
    r = as_fraction(r)
    if f.is_zero():
        raise ZeroDivisionError("inverse of zero polynomial")
    w = gauss_val(f, r)
    argmins = [n for n, c in f.coeffs.items() if c.val() + n * r == w]
    if len(argmins) != 1:
        raise LiftingError(
            "no dominant monomial at this Gauss point; inverse not representable "
            "as a truncated Laurent series")
    n0 = argmins[0]
    g = LaurentPoly.monomial(f.mode, f.coeffs[n0].inverse(), -n0)
    prune_at = target - w  # dropping tau from g perturbs the residual by f*tau
    for _ in range(200):
        e = LaurentPoly.one(f.mode) - f * g
        if gauss_val(e, r) >= target:
            return g
        g = g + g * e
        g = LaurentPoly(f.mode, {n: c for n, c in g.coeffs.items()
                                 if c.val() + n * r < prune_at})
    raise LiftingError("series inversion did not converge within budget")


def split_by_slope(coeffs: Sequence[LaurentPoly], r, cut, t_prec: int = 8) -> SplitResult:
    """Factor a monic polynomial into slope parts below/above ``cut``.

    Returns monic factors (low: root_val < cut, high: root_val > cut) with a
    certified Gauss-valuation bound on the recombination error, computed by
    two-factor Newton lifting at the Gauss point ``r``.
    """
    from . import linalg  # local import; linalg builds on this module

    r = as_fraction(r)
    cut = as_fraction(cut)
    if t_prec < 1:
        raise ParameterError("t_prec must be a positive number of valuation units")
    coeffs = list(coeffs)
    if not coeffs or all(c.is_zero() for c in coeffs):
        raise DegenerateInputError("zero polynomial cannot be factored")
    mode = coeffs[0].mode
    lead = coeffs[-1]
    if lead.is_zero():
        raise NormalizationError("leading coefficient is zero")
    if not lead.is_one():
        if not lead.is_monomial():
            raise NormalizationError(
                "input is not monic and its leading coefficient is not an "
                "exactly invertible monomial")
        n0 = lead.min_exp()
        c0 = lead.coeffs[n0]
        coeffs = [c.monomial_div(c0, n0) for c in coeffs]
    np_ = newton_polygon(coeffs, r)
    if cut in np_:
        raise SlopeCollisionError(f"cut {cut} coincides with a Newton-polygon slope")
    n = len(coeffs) - 1
    k = np_.count_above(cut)
    target_np_high = tuple((v, m) for v, m in np_.entries if v > cut)
    target_np_low = tuple((v, m) for v, m in np_.entries if v < cut)
    one = [LaurentPoly.one(mode)]
    if k == 0:
        return SplitResult(low=coeffs, high=one, bound=INF)
    if k == n:
        return SplitResult(low=one, high=coeffs, bound=INF)

    base_val = _poly_w(coeffs, r)
    target = base_val + t_prec

    # initial factors from the polygon vertex at index k
    vertex = coeffs[k]
    inv_vertex = approx_inverse(vertex, r, t_prec + 2)
    high = [c * inv_vertex for c in coeffs[: k + 1]]
    high[k] = LaurentPoly.one(mode)
    low = list(coeffs[k:])  # already monic

    def prune(poly: list, floor) -> list:
        # dropping tau from one factor perturbs the product by tau*(other),
        # which keeps w_r >= target as long as w_r(tau) >= target - floor
        lim = target - floor + 1
        return [LaurentPoly(mode, {m: c for m, c in q.coeffs.items()
                                   if c.val() + m * r < lim}) for q in poly]

    best = NEG_INF
    stall = 0
    for _ in range(80):
        err = _poly_sub(coeffs, _poly_mul(low, high))
        ew = _poly_w(err, r)
        if ew >= target or all(c.is_zero() for c in err):
            bound = INF if all(c.is_zero() for c in err) else ew
            got_high = newton_polygon(high, r)
            got_low = newton_polygon(low, r)
            if got_high.entries != target_np_high or got_low.entries != target_np_low:
                raise LiftingError("lifted factors do not match the polygon parts")
            return SplitResult(low=low, high=high, bound=bound)
        if ew <= best:
            stall += 1
            if stall >= 3:
                raise LiftingError("lifting stalled before reaching the target bound")
        else:
            best = ew
            stall = 0
        # Newton step: solve low*dh + high*dl = err with deg dh < k, deg dl < n-k
        dh, dl = linalg.solve_factor_correction(low, high, err, k, n - k, r, target)
        floor = min(_poly_w(low, r), _poly_w(high, r), 0)
        high = prune(_poly_add(high, dh), floor)
        low = prune(_poly_add(low, dl), floor)
        high[k] = LaurentPoly.one(mode)
        low[n - k] = LaurentPoly.one(mode)
    raise LiftingError("lifting budget exhausted")
