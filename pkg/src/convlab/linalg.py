"""Exact linear algebra over Laurent polynomials and over Q.

Internal support module.  Three layers:

* polynomial division/gcd for :class:`~convlab.valcore.LaurentPoly` (t is a
  unit, so everything is normalized to ordinary polynomials first);
* a small fraction field ``FracLP`` with gcd reduction, plus Gaussian
  elimination, Bareiss determinants and adjugate inverses built on it;
* dense exact linear algebra over ``Fraction`` (solve, inverse, kernel,
  characteristic polynomial, rational roots) used by the exponent tools.

Scalar inverses are exact for p-adic rationals and for monomial series
scalars; anywhere else the routines detect the inexactness and either fall
back (gcd := 1) or raise.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    DegenerateInputError,
    LiftingError,
    ModeError,
    ParameterError,
    SingularMatrixError,
)
from .valcore import INF, LaurentPoly, Scalar, approx_inverse, as_fraction, gauss_val


# -- exact scalar helpers ------------------------------------------------------


def scalar_exact_inverse(s: Scalar) -> Optional[Scalar]:
    """Inverse of a scalar when exactly representable, else None."""
    if s.mode.kind == "padic":
        return None if s.frac == 0 else s.inverse()
    if len(s.series) == 1 and s.known_to is INF:
        return s.inverse()
    return None


# -- polynomial division and gcd -----------------------------------------------


def _strip(f: LaurentPoly) -> LaurentPoly:
    """Normalize away the t-monomial unit factor (min exponent -> 0)."""
    if f.is_zero():
        return f
    return f.shift(-f.min_exp())


def lp_divmod(a: LaurentPoly, b: LaurentPoly):
    """Long division a = q*b + rem in the polynomial ring (after stripping).

    Returns None when a needed scalar inverse is not exactly representable.
    """
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    a = _strip(a)
    b = _strip(b)
    lead_inv = scalar_exact_inverse(b.coeffs[b.max_exp()])
    if lead_inv is None:
        return None
    db = b.max_exp()
    q = LaurentPoly.zero(a.mode)
    rem = a
    while not rem.is_zero() and rem.max_exp() >= db:
        n = rem.max_exp()
        c = rem.coeffs[n] * lead_inv
        term = LaurentPoly.monomial(a.mode, c, n - db)
        q = q + term
        rem = rem - term * b
    return q, rem


def lp_exact_div(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    """Exact quotient a/b in the Laurent ring; raises if not divisible."""
    if a.is_zero():
        return a
    shift = a.min_exp() - b.min_exp()
    dm = lp_divmod(a, b)
    if dm is None or not dm[1].is_zero():
        raise SingularMatrixError("inexact polynomial division")
    return dm[0].shift(shift)


def lp_gcd(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    """gcd up to units (t powers and scalars); falls back to 1 when division
    cannot be carried out exactly."""
    a, b = _strip(a), _strip(b)
    while not b.is_zero():
        dm = lp_divmod(a, b)
        if dm is None:
            return LaurentPoly.one(a.mode)
        a, b = b, _strip(dm[1]) if not dm[1].is_zero() else dm[1]
    if a.is_zero():
        return a
    lead_inv = scalar_exact_inverse(a.coeffs[a.max_exp()])
    return a.scalar_mul(lead_inv) if lead_inv is not None else a


# -- fraction field -------------------------------------------------------------


class FracLP:
    """num/den over LaurentPoly with opportunistic gcd reduction."""

    __slots__ = ("num", "den")

    def __init__(self, num: LaurentPoly, den: LaurentPoly | None = None, reduce: bool = True):
        if den is None:
            den = LaurentPoly.one(num.mode)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        self.num = num
        self.den = den
        if reduce:
            self._reduce()

    def _reduce(self):
        if self.num.is_zero():
            self.den = LaurentPoly.one(self.num.mode)
            return
        # fold the denominator's unit part into the numerator
        if self.den.is_monomial():
            n = self.den.min_exp()
            self.num = self.num.monomial_div(self.den.coeffs[n], n)
            self.den = LaurentPoly.one(self.num.mode)
            return
        g = lp_gcd(self.num, self.den)
        if not g.is_one() and not g.is_zero():
            try:
                self.num = lp_exact_div(self.num, g)
                self.den = lp_exact_div(self.den, g)
            except SingularMatrixError:
                pass
        if self.den.is_monomial():
            n = self.den.min_exp()
            self.num = self.num.monomial_div(self.den.coeffs[n], n)
            self.den = LaurentPoly.one(self.num.mode)
            return
        # keep the denominator anchored: min exponent 0, unit lead if possible
        sh = self.den.min_exp()
        if sh:
            self.den = self.den.shift(-sh)
            self.num = self.num.shift(-sh)
        lead_inv = scalar_exact_inverse(self.den.coeffs[self.den.max_exp()])
        if lead_inv is not None:
            self.den = self.den.scalar_mul(lead_inv)
            self.num = self.num.scalar_mul(lead_inv)

    @staticmethod
    def of(x: LaurentPoly) -> "FracLP":
        return FracLP(x, reduce=False)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other: "FracLP") -> "FracLP":
        return FracLP(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other: "FracLP") -> "FracLP":
        return FracLP(self.num * other.den - other.num * self.den, self.den * other.den)

    def __neg__(self) -> "FracLP":
        return FracLP(-self.num, self.den, reduce=False)

    def __mul__(self, other: "FracLP") -> "FracLP":
        return FracLP(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "FracLP") -> "FracLP":
        if other.is_zero():
            raise ZeroDivisionError("division by zero fraction")
        return FracLP(self.num * other.den, self.den * other.num)

    def as_poly(self) -> LaurentPoly:
        """The fraction as an exact Laurent polynomial; raises if it is not one."""
        if self.den.is_one():
            return self.num
        return lp_exact_div(self.num, self.den)

    def to_series(self, r, target) -> LaurentPoly:
        """Truncated Laurent representative q with w_r(q - num/den) >= target."""
        if self.num.is_zero():
            return self.num
        if self.den.is_one():
            return self.num
        if self.den.is_monomial():
            n = self.den.min_exp()
            return self.num.monomial_div(self.den.coeffs[n], n)
        want = target - gauss_val(self.num, r) + gauss_val(self.den, r) + 1
        inv = approx_inverse(self.den, r, want)
        return self.num * inv

    def __repr__(self):
        return f"FracLP({self.num!r} / {self.den!r})"


# -- elimination over FracLP ------------------------------------------------------


def _to_frac_matrix(rows) -> list:
    out = []
    for row in rows:
        out.append([e if isinstance(e, FracLP) else FracLP.of(e) for e in row])
    return out


def solve_lp(A, b) -> list:
    """Solve A x = b exactly over the fraction field of the Laurent ring.

    A is a square matrix of LaurentPoly/FracLP, b a vector; returns FracLP
    entries.  Raises SingularMatrixError when the matrix is singular.
    """
    n = len(A)
    M = _to_frac_matrix(A)
    v = [e if isinstance(e, FracLP) else FracLP.of(e) for e in b]
    if any(len(row) != n for row in M) or len(v) != n:
        raise ParameterError("solve_lp needs a square system")
    for col in range(n):
        piv = None
        best = None
        for rr in range(col, n):
            if not M[rr][col].is_zero():
                size = len(M[rr][col].num.coeffs) + len(M[rr][col].den.coeffs)
                if best is None or size < best:
                    best, piv = size, rr
        if piv is None:
            raise SingularMatrixError("singular system in exact elimination")
        M[col], M[piv] = M[piv], M[col]
        v[col], v[piv] = v[piv], v[col]
        inv_p = M[col][col]
        for rr in range(col + 1, n):
            if M[rr][col].is_zero():
                continue
            factor = M[rr][col] / inv_p
            for cc in range(col, n):
                M[rr][cc] = M[rr][cc] - factor * M[col][cc]
            v[rr] = v[rr] - factor * v[col]
    x = [None] * n
    for row in range(n - 1, -1, -1):
        acc = v[row]
        for cc in range(row + 1, n):
            acc = acc - M[row][cc] * x[cc]
        x[row] = acc / M[row][row]
    return x


def cramer_solve_lp(A, b, det: LaurentPoly | None = None) -> list:
    """Solve A x = b by Cramer determinants over the Laurent ring.

    Every solution entry is returned as an unreduced FracLP sharing det(A)
    as its denominator.  This sidesteps fraction-field elimination (and all
    gcd reduction) entirely, which matters when the caller already holds
    det(A) and clears denominators downstream anyway.
    """
    n = len(A)
    if any(len(row) != n for row in A) or len(b) != n:
        raise ParameterError("cramer_solve_lp needs a square system")
    if det is None:
        det = det_lp(A)
    if det.is_zero():
        raise SingularMatrixError("singular system in Cramer solve")
    out = []
    for j in range(n):
        Aj = [[b[i] if c == j else A[i][c] for c in range(n)] for i in range(n)]
        out.append(FracLP(det_lp(Aj), det, reduce=False))
    return out


def det_lp(A) -> LaurentPoly:
    """Exact determinant of a LaurentPoly matrix (fraction-free Bareiss)."""
    n = len(A)
    if n == 0:
        raise DegenerateInputError("determinant of an empty matrix")
    if any(len(row) != n for row in A):
        raise ParameterError("determinant needs a square matrix")
    mode = A[0][0].mode
    shift_total = 0
    M = []
    for row in A:
        nonzero = [e for e in row if not e.is_zero()]
        if not nonzero:
            return LaurentPoly.zero(mode)
        sh = min(e.min_exp() for e in nonzero)
        shift_total += sh
        M.append([e.shift(-sh) for e in row])
    sign = 1
    prev = LaurentPoly.one(mode)
    for col in range(n - 1):
        piv = next((rr for rr in range(col, n) if not M[rr][col].is_zero()), None)
        if piv is None:
            return LaurentPoly.zero(mode)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            sign = -sign
        for rr in range(col + 1, n):
            for cc in range(col + 1, n):
                num = M[rr][cc] * M[col][col] - M[rr][col] * M[col][cc]
                M[rr][cc] = lp_exact_div(num, prev)
            M[rr][col] = LaurentPoly.zero(mode)
        prev = M[col][col]
    d = M[n - 1][n - 1].shift(shift_total)
    return d if sign > 0 else -d


def invert_lp_matrix(U) -> list:
    """Exact inverse of a LaurentPoly matrix.

    The inverse exists over the Laurent ring iff det(U) is a unit, i.e. a
    monomial; otherwise SingularMatrixError is raised (callers translate to
    GaugeError).  Constant rational matrices take a fast dense path.
    """
    n = len(U)
    mode = U[0][0].mode

    def const_frac(e: LaurentPoly):
        if e.is_zero():
            return Fraction(0)
        if set(e.coeffs) == {0}:
            try:
                return e.coeffs[0].as_fraction()
            except ModeError:
                return None
        return None

    consts = [[const_frac(e) for e in row] for row in U]
    if all(c is not None for row in consts for c in row):
        inv = rational_matrix_inverse(consts)
        return [[LaurentPoly.constant(mode, c) for c in row] for row in inv]

    d = det_lp(U)
    if d.is_zero():
        raise SingularMatrixError("matrix is singular")
    if not d.is_monomial():
        raise SingularMatrixError("determinant is not a monomial; no exact inverse")
    nexp = d.min_exp()
    dc = d.coeffs[nexp]
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[U[rr][cc] for cc in range(n) if cc != j]
                     for rr in range(n) if rr != i]
            cof = det_lp(minor) if minor else LaurentPoly.one(mode)
            if (i + j) % 2:
                cof = -cof
            out[j][i] = cof.monomial_div(dc, nexp)
    return out


def mat_mul(A, B) -> list:
    """Product of two LaurentPoly matrices."""
    n, k, m = len(A), len(B), len(B[0])
    mode = A[0][0].mode
    out = [[LaurentPoly.zero(mode) for _ in range(m)] for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = LaurentPoly.zero(mode)
            for s in range(k):
                if not A[i][s].is_zero() and not B[s][j].is_zero():
                    acc = acc + A[i][s] * B[s][j]
            out[i][j] = acc
    return out


def mat_vec(A, v) -> list:
    mode = A[0][0].mode
    out = []
    for row in A:
        acc = LaurentPoly.zero(mode)
        for e, x in zip(row, v):
            if not e.is_zero() and not x.is_zero():
                acc = acc + e * x
        out.append(acc)
    return out


# -- slope-factorization correction step --------------------------------------------


def solve_factor_correction(low, high, err, deg_dh: int, deg_dl: int, r, target):
    """Solve low*dh + high*dl = err with deg dh < deg_dh, deg dl < deg_dl.

    The square Sylvester-style system is solved exactly over the fraction
    field and the entries are converted to truncated Laurent representatives
    accurate past ``target`` at the Gauss point ``r``.
    """
    mode = low[0].mode
    n = deg_dh + deg_dl
    if len(err) < n + 1:
        err = list(err) + [LaurentPoly.zero(mode)] * (n + 1 - len(err))
    A = [[LaurentPoly.zero(mode) for _ in range(n)] for _ in range(n)]
    for j in range(deg_dh):          # unknowns dh_j, multiplied by low
        for i, c in enumerate(low):
            m = i + j
            if m < n:
                A[m][j] = A[m][j] + c
    for j in range(deg_dl):          # unknowns dl_j, multiplied by high
        for i, c in enumerate(high):
            m = i + j
            if m < n:
                A[m][deg_dh + j] = A[m][deg_dh + j] + c
    b = err[:n]
    try:
        x = solve_lp(A, b)
    except SingularMatrixError as exc:
        raise LiftingError(f"correction system is singular: {exc}") from exc
    floor = min(min(gauss_val(c, r) for c in low),
                min(gauss_val(c, r) for c in high), 0)
    conv_target = target - floor + 2
    dh = [x[j].to_series(r, conv_target) for j in range(deg_dh)]
    dl = [x[deg_dh + j].to_series(r, conv_target) for j in range(deg_dl)]
    return dh, dl


# -- dense exact linear algebra over Q ------------------------------------------------


def rational_solve(A, b) -> list:
    """Solve a dense Fraction system exactly."""
    n = len(A)
    M = [[as_fraction(e) for e in row] + [as_fraction(bb)]
         for row, bb in zip(A, b)]
    for col in range(n):
        piv = next((rr for rr in range(col, n) if M[rr][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("singular rational system")
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [e / pv for e in M[col]]
        for rr in range(n):
            if rr != col and M[rr][col] != 0:
                f = M[rr][col]
                M[rr] = [e - f * g for e, g in zip(M[rr], M[col])]
    return [M[i][n] for i in range(n)]


def rational_matrix_inverse(A) -> list:
    n = len(A)
    M = [[as_fraction(e) for e in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(A)]
    for col in range(n):
        piv = next((rr for rr in range(col, n) if M[rr][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("singular rational matrix")
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        M[col] = [e / pv for e in M[col]]
        for rr in range(n):
            if rr != col and M[rr][col] != 0:
                f = M[rr][col]
                M[rr] = [e - f * g for e, g in zip(M[rr], M[col])]
    return [row[n:] for row in M]


def rational_kernel(A) -> list:
    """Basis of the right kernel of a Fraction matrix (rows of length n)."""
    if not A:
        return []
    rows = [list(map(as_fraction, row)) for row in A]
    m, n = len(rows), len(rows[0])
    pivots = []
    rank = 0
    for col in range(n):
        piv = next((rr for rr in range(rank, m) if rows[rr][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        rows[rank] = [e / pv for e in rows[rank]]
        for rr in range(m):
            if rr != rank and rows[rr][col] != 0:
                f = rows[rr][col]
                rows[rr] = [e - f * g for e, g in zip(rows[rr], rows[rank])]
        pivots.append(col)
        rank += 1
        if rank == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for rr, pc in enumerate(pivots):
            vec[pc] = -rows[rr][fc]
        basis.append(vec)
    return basis


def rational_mat_mul(A, B) -> list:
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0))
             for col in zip(*B)] for row in A]


def rational_charpoly(A) -> list:
    """Characteristic polynomial det(T*I - A) by Faddeev-LeVerrier.

    Returns coefficients [c_0, ..., c_n] with c_n = 1, as Fractions.
    """
    n = len(A)
    A = [[as_fraction(e) for e in row] for row in A]
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    coeffs = [Fraction(1)]  # c_n
    M = [row[:] for row in ident]
    AM = A
    for k in range(1, n + 1):
        AM = rational_mat_mul(A, M)
        c = -sum(AM[i][i] for i in range(n)) / k
        coeffs.append(c)
        if k < n:
            M = [[AM[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
    coeffs.reverse()
    return coeffs


def _poly_eval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _synthetic_div(coeffs: Sequence[Fraction], root: Fraction) -> list:
    """coeffs / (T - root), assuming exact divisibility; ascending order."""
    out = [Fraction(0)] * (len(coeffs) - 1)
    carry = Fraction(0)
    for i in range(len(coeffs) - 1, 0, -1):
        carry = coeffs[i] + carry * root
        out[i - 1] = carry
    return out


def rational_roots(coeffs: Sequence[Fraction]):
    """All rational roots (with multiplicity) of a Q[T] polynomial.

    Returns (roots, remainder_degree): remainder_degree > 0 means a
    nontrivial factor without rational roots survives.
    """
    coeffs = [as_fraction(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        raise DegenerateInputError("zero polynomial has every root")
    roots = []
    # strip T = 0 roots
    while coeffs[0] == 0:
        roots.append(Fraction(0))
        coeffs = coeffs[1:]
    if len(coeffs) == 1:
        return roots, 0
    from math import gcd
    den_l = 1
    for c in coeffs:
        den_l = den_l * c.denominator // gcd(den_l, c.denominator)
    ints = [int(c * den_l) for c in coeffs]

    def divisors(x: int) -> list:
        x = abs(x)
        out = set()
        f = 1
        while f * f <= x:
            if x % f == 0:
                out.add(f)
                out.add(x // f)
            f += 1
        return sorted(out)

    candidates = set()
    for pp in divisors(ints[0]):
        for qq in divisors(ints[-1]):
            candidates.add(Fraction(pp, qq))
            candidates.add(Fraction(-pp, qq))
    for cand in sorted(candidates):
        while len(coeffs) > 1 and _poly_eval(coeffs, cand) == 0:
            roots.append(cand)
            coeffs = _synthetic_div(coeffs, cand)
    return sorted(roots), len(coeffs) - 1
