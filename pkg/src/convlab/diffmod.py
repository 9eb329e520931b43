"""Differential modules over discs and annuli: gauges, duals, tensors,
cyclic vectors, pushforward along t -> t^p, and the standard test modules.

A module of rank n is a matrix N with D(e_j) = sum_i N[i][j] e_i, so the
action on coordinate vectors is D(x) = N x + d(x), with d either d/dt or
t*d/dt.  The working interval (r_min, r_max) is on the additive radius side:
the disc |t| <= beta is r in [-log beta, +inf)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import linalg
from .errors import (
    CyclicSearchError,
    DegenerateInputError,
    GaugeError,
    IntervalError,
    ModeError,
    ParameterError,
    SingularMatrixError,
)
from .valcore import (
    INF,
    NEG_INF,
    DERIVATIONS,
    FieldMode,
    LaurentPoly,
    as_fraction,
    derive,
)


def _as_radius(x):
    if x is INF or x is NEG_INF:
        return x
    return as_fraction(x)


class DiffModule:
    """Finite differential module presented by a matrix over one field mode."""

    __slots__ = ("mode", "derivation", "interval", "matrix")

    def __init__(self, mode: FieldMode, derivation: str, interval, matrix):
        if derivation not in DERIVATIONS:
            raise ParameterError(f"unknown derivation {derivation!r}")
        r_min, r_max = (_as_radius(interval[0]), _as_radius(interval[1]))
        if not r_min <= r_max:
            raise IntervalError(f"empty working interval [{r_min}, {r_max}]")
        n = len(matrix)
        rows = []
        for row in matrix:
            if len(row) != n:
                raise ParameterError("module matrix must be square")
            entries = []
            for e in row:
                if not isinstance(e, LaurentPoly):
                    e = LaurentPoly.constant(mode, e)
                if e.mode != mode:
                    raise ModeError("matrix entry from a different field mode")
                entries.append(e)
            rows.append(entries)
        self.mode = mode
        self.derivation = derivation
        self.interval = (r_min, r_max)
        self.matrix = rows

    @property
    def rank(self) -> int:
        return len(self.matrix)

    def is_zero_matrix(self) -> bool:
        return all(e.is_zero() for row in self.matrix for e in row)

    def contains_radius(self, r) -> bool:
        r = _as_radius(r)
        return self.interval[0] <= r <= self.interval[1]

    def apply_D(self, x: Sequence[LaurentPoly]) -> list:
        """D(x) = N x + d(x) on a coordinate vector."""
        if len(x) != self.rank:
            raise ParameterError("vector length does not match the rank")
        out = linalg.mat_vec(self.matrix, list(x)) if self.rank else []
        return [acc + derive(xi, self.derivation) for acc, xi in zip(out, x)]

    # -- constructions -----------------------------------------------------

    def change_basis(self, U) -> "DiffModule":
        """Gauge transform: N' = U^{-1} (N U + d(U)).

        U must be exactly invertible over the Laurent ring (unit, i.e.
        monomial, determinant); otherwise GaugeError.
        """
        U = [[e if isinstance(e, LaurentPoly) else LaurentPoly.constant(self.mode, e)
              for e in row] for row in U]
        try:
            Uinv = linalg.invert_lp_matrix(U)
        except SingularMatrixError as exc:
            raise GaugeError(str(exc)) from exc
        dU = [[derive(e, self.derivation) for e in row] for row in U]
        NU = linalg.mat_mul(self.matrix, U)
        S = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(NU, dU)]
        return DiffModule(self.mode, self.derivation, self.interval,
                          linalg.mat_mul(Uinv, S))

    def dual(self) -> "DiffModule":
        n = self.rank
        mat = [[-self.matrix[j][i] for j in range(n)] for i in range(n)]
        return DiffModule(self.mode, self.derivation, self.interval, mat)

    def _merge_interval(self, other) -> tuple:
        lo = max(self.interval[0], other.interval[0])
        hi = min(self.interval[1], other.interval[1])
        if not lo <= hi:
            raise IntervalError("working intervals do not overlap")
        return (lo, hi)

    def _check_compatible(self, other: "DiffModule"):
        if self.mode != other.mode:
            raise ModeError("modules live over different field modes")
        if self.derivation != other.derivation:
            raise ParameterError("modules use different derivations")

    def tensor(self, other: "DiffModule") -> "DiffModule":
        self._check_compatible(other)
        n1, n2 = self.rank, other.rank
        zero = LaurentPoly.zero(self.mode)
        mat = [[zero for _ in range(n1 * n2)] for _ in range(n1 * n2)]
        for i in range(n1):
            for j in range(n1):
                if self.matrix[i][j].is_zero():
                    continue
                for k in range(n2):
                    mat[i * n2 + k][j * n2 + k] = mat[i * n2 + k][j * n2 + k] \
                        + self.matrix[i][j]
        for k in range(n2):
            for l in range(n2):
                if other.matrix[k][l].is_zero():
                    continue
                for i in range(n1):
                    mat[i * n2 + k][i * n2 + l] = mat[i * n2 + k][i * n2 + l] \
                        + other.matrix[k][l]
        return DiffModule(self.mode, self.derivation,
                          self._merge_interval(other), mat)

    def direct_sum(self, other: "DiffModule") -> "DiffModule":
        self._check_compatible(other)
        n1, n2 = self.rank, other.rank
        zero = LaurentPoly.zero(self.mode)
        mat = [[zero for _ in range(n1 + n2)] for _ in range(n1 + n2)]
        for i in range(n1):
            for j in range(n1):
                mat[i][j] = self.matrix[i][j]
        for i in range(n2):
            for j in range(n2):
                mat[n1 + i][n1 + j] = other.matrix[i][j]
        return DiffModule(self.mode, self.derivation,
                          self._merge_interval(other), mat)

    def switch_derivation(self, target: str) -> "DiffModule":
        if target not in DERIVATIONS:
            raise ParameterError(f"unknown derivation {target!r}")
        if target == self.derivation:
            return self
        shift = 1 if target == "t_ddt" else -1
        mat = [[e.shift(shift) for e in row] for row in self.matrix]
        return DiffModule(self.mode, target, self.interval, mat)

    def __repr__(self):
        return (f"DiffModule(rank={self.rank}, {self.derivation}, "
                f"interval={self.interval})")


# -- cyclic vectors ---------------------------------------------------------------


@dataclass
class CyclicData:
    """A cyclic vector, the companion coefficients a_i of
    D^n v = sum a_i D^i v (fraction-field entries), and the nonvanishing
    Wronskian-style certificate det[v | Dv | ... | D^{n-1} v]."""

    vector: list
    companion: list
    certificate: LaurentPoly
    tried: int


def _candidate_ladder(mode: FieldMode, n: int):
    """Deterministic sequence of candidate cyclic vectors."""
    one = LaurentPoly.one(mode)
    zero = LaurentPoly.zero(mode)
    for j in range(n):
        yield [one if i == j else zero for i in range(n)]
    total = 2
    while True:
        for ell in range(1, total):
            s = total - ell
            yield [LaurentPoly.monomial(mode, Fraction(s) ** j, ell * j)
                   for j in range(n)]
        total += 1


def cyclic_vector(M: DiffModule, budget: int = 40) -> CyclicData:
    """Find a cyclic vector by walking a deterministic candidate ladder.

    The certificate is the exact determinant of the iterated-derivative
    matrix; candidates with vanishing determinant are recorded and skipped.
    Exhausting the budget raises CyclicSearchError carrying the rejects.
    """
    n = M.rank
    if n == 0:
        raise DegenerateInputError("rank-0 module has no cyclic vector")
    rejected = []
    ladder = _candidate_ladder(M.mode, n)
    for tried in range(1, budget + 1):
        v = next(ladder)
        cols = [list(v)]
        for _ in range(n - 1):
            cols.append(M.apply_D(cols[-1]))
        W = [[cols[j][i] for j in range(n)] for i in range(n)]
        cert = linalg.det_lp(W)
        if cert.is_zero():
            rejected.append(v)
            continue
        rhs = M.apply_D(cols[-1])
        sol = linalg.cramer_solve_lp(W, rhs, det=cert)
        return CyclicData(vector=v, companion=sol, certificate=cert, tried=tried)
    raise CyclicSearchError(
        f"no cyclic vector among the first {budget} ladder candidates",
        candidates=rejected)


def companion_poly_with_cleared_denominators(comp) -> list:
    """Monic companion relation as a polynomial with LaurentPoly coefficients.

    Given fraction-field a_i with D^n v = sum a_i D^i v, returns the
    coefficient list of Q*(T^n - sum a_i T^i) for the common denominator Q.
    Clearing a global factor shifts the Newton polygon vertically and leaves
    its slopes -- hence all root valuations -- unchanged.
    """
    if not comp:
        raise DegenerateInputError("empty companion relation")
    mode = comp[0].num.mode
    q = LaurentPoly.one(mode)
    for a in comp:
        g = linalg.lp_gcd(q, a.den)
        q = q * (a.den if g.is_one() else linalg.lp_exact_div(a.den, g))
    coeffs = []
    for i, a in enumerate(comp):
        scale = linalg.lp_exact_div(q, a.den)
        coeffs.append(-(a.num * scale))
    coeffs.append(q)
    return coeffs


# -- pushforward along t = s^{1/p} ... s = t^p ---------------------------------------


def frobenius_descendant(M: DiffModule) -> DiffModule:
    """Pushforward along the p-power map: a rank p*n module over s = t^p.

    Basis e_i t^j (0 <= j < p) over the s-line; the derivation becomes d/ds
    via d/ds = p^{-1} t^{1-p} d/dt, and radii transform as r -> p*r.
    Requires a p-adic mode and a working interval bounded away from the
    center (r_max finite)."""
    if M.mode.kind != "padic":
        raise ModeError("pushforward along t -> t^p needs a p-adic mode")
    if M.interval[1] is INF:
        raise IntervalError("pushforward needs r_max < +inf (an annulus)")
    M = M.switch_derivation("ddt")
    p = M.mode.p
    n = M.rank
    mode = M.mode
    zero = LaurentPoly.zero(mode)
    big = p * n
    mat = [[zero for _ in range(big)] for _ in range(big)]

    def flat(i: int, j: int) -> int:
        return j * n + i

    pinv = Fraction(1, p)
    for i in range(n):
        for j in range(p):
            # D'(e_i t^j) = p^{-1} t^{1-p} (t^j sum_k N_ki e_k + j t^{j-1} e_i)
            contributions = []
            for k in range(n):
                if not M.matrix[k][i].is_zero():
                    contributions.append(
                        (k, M.matrix[k][i].shift(j + 1 - p).scalar_mul(pinv)))
            if j:
                contributions.append(
                    (i, LaurentPoly.monomial(mode, Fraction(j, p), j - p)))
            for k, poly in contributions:
                for jp in range(p):
                    part = poly.residue_class(jp, p)
                    if not part.is_zero():
                        mat[flat(k, jp)][flat(i, j)] = \
                            mat[flat(k, jp)][flat(i, j)] + part
    interval = (p * M.interval[0],
                INF if M.interval[1] is INF else p * M.interval[1])
    return DiffModule(mode, "ddt", interval, mat)


def twist_module(mode: FieldMode, m_idx: int, interval) -> DiffModule:
    """Rank-1 module with matrix (m_idx/p) s^{-1}: the residue-class twists
    that appear as pushforwards of trivial modules."""
    if mode.kind != "padic":
        raise ModeError("twist modules are p-adic objects")
    if not 0 <= m_idx < mode.p:
        raise ParameterError("twist index must lie in [0, p)")
    mat = [[LaurentPoly.monomial(mode, Fraction(m_idx, mode.p), -1)]]
    return DiffModule(mode, "ddt", interval, mat)


# -- standard test modules -------------------------------------------------------------


def _is_prime_power(e: int, p: int) -> bool:
    if e == 1:
        return True
    while e % p == 0:
        e //= p
    return e == 1


def test_module(mode: FieldMode, lam, h: int, e: int, m: int, interval) -> DiffModule:
    """The basic irregular witness M(lam, h, e, m) of rank e.

    Over the module's own variable (tau with tau^m = t):
    D(v_i) = tau^{-1} v_{i+1} for i < e and D(v_e) = lam tau^{h-1} v_1;
    the given t-interval is rescaled by 1/m.  Parameter constraints:
    lam != 0; e a power of p (p-adic) or 1 (equal characteristic);
    p does not divide m; gcd(h, e*m) = 1."""
    from math import gcd
    lam = as_fraction(lam)
    if lam == 0:
        raise ParameterError("lam must be nonzero")
    if not (isinstance(h, int) and isinstance(e, int) and isinstance(m, int)):
        raise ParameterError("h, e, m must be integers")
    if e < 1 or m < 1:
        raise ParameterError("e and m must be positive")
    if mode.kind == "padic":
        if not _is_prime_power(e, mode.p):
            raise ParameterError("e must be a power of p")
        if m % mode.p == 0:
            raise ParameterError("m must be prime to p")
    elif e != 1:
        raise ParameterError("e must be 1 in equal characteristic")
    if gcd(h, e * m) != 1:
        raise ParameterError("h must be prime to e*m")
    zero = LaurentPoly.zero(mode)
    mat = [[zero for _ in range(e)] for _ in range(e)]
    for i in range(e - 1):
        mat[i + 1][i] = LaurentPoly.monomial(mode, 1, -1)
    mat[0][e - 1] = mat[0][e - 1] + LaurentPoly.monomial(mode, lam, h - 1)
    r_lo, r_hi = _as_radius(interval[0]), _as_radius(interval[1])
    scaled = (r_lo if r_lo in (INF, NEG_INF) else r_lo / m,
              r_hi if r_hi in (INF, NEG_INF) else r_hi / m)
    return DiffModule(mode, "ddt", scaled, mat)
