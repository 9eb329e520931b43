"""Exponent combinatorics and regular-singular normal forms.

The combinatorial half works with multisets of exact rationals: the
nearest-integer distance, Liouville profiles through symmetric residues,
weak equivalence tested depth by depth with bipartite matchings, and the
induced partitions.  The constructive half operates on differential modules
for the derivation t*d/dt: shearing the residue spectrum until it is
prepared, and the two basis iterations that certify a matrix of nonnegative
valuation (one for discs, one for annuli with a spectral gap).
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from . import linalg
from .diffmod import DiffModule
from .errors import (
    BudgetError,
    DegenerateInputError,
    IntegralityError,
    IntervalError,
    IrregularityError,
    ModeError,
    ParameterError,
    PreparednessError,
    SingularMatrixError,
    SpectrumError,
)
from .valcore import (
    INF,
    FieldMode,
    LaurentPoly,
    as_fraction,
    derive,
    interval_gauss_val,
    is_prime,
)

INTEGER = "Integer"
RATIONAL_NON_LIOUVILLE = "RationalNonLiouville"

CONSISTENT = "ConsistentToDepth"
REFUTED = "RefutedAtDepth"

SHEAR_TARGETS = ("prepared", "zero-integers")


def _check_prime(p: int) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise ParameterError(f"p must be a prime integer, got {p!r}")
    return p


def _zp_fraction(a, p: int) -> Fraction:
    a = as_fraction(a)
    if a.denominator % p == 0:
        raise IntegralityError(f"{a} is not a p-adic integer for p = {p}")
    return a


def frac_dist(x) -> Fraction:
    """Distance from x to the nearest integer."""
    x = as_fraction(x)
    lo = x - (x.numerator // x.denominator)
    return min(lo, 1 - lo)


def residue_distance(a, p: int, m: int) -> int:
    """p^m * <a/p^m>: the distance from a to the nearest multiple of p^m.

    For a p-adic integer a this is the absolute value of the representative
    of a mod p^m closest to zero.
    """
    p = _check_prime(p)
    if not isinstance(m, int) or m < 1:
        raise ParameterError(f"depth must be a positive integer, got {m!r}")
    a = _zp_fraction(a, p)
    pk = p ** m
    r = a.numerator * pow(a.denominator, -1, pk) % pk
    return min(r, pk - r)


class ExponentMultiset:
    """Multiset of exact rational exponents over one field mode.

    In p-adic mode every entry must lie in Z_p, i.e. have denominator
    coprime to p; equal-characteristic-zero mode admits any rationals.
    """

    __slots__ = ("mode", "entries")

    def __init__(self, mode: FieldMode, entries):
        vals = sorted(as_fraction(e) for e in entries)
        if mode.kind == "padic":
            for e in vals:
                if e.denominator % mode.p == 0:
                    raise IntegralityError(
                        f"exponent {e} is not a p-adic integer for p = {mode.p}")
        self.mode = mode
        self.entries = tuple(vals)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        return (isinstance(other, ExponentMultiset)
                and self.mode == other.mode and self.entries == other.entries)

    def __repr__(self):
        return f"ExponentMultiset({{{', '.join(str(e) for e in self.entries)}}})"


def _entry_list(A, p: int | None = None) -> list:
    entries = A.entries if isinstance(A, ExponentMultiset) else A
    if p is None:
        return [as_fraction(e) for e in entries]
    return [_zp_fraction(e, p) for e in entries]


@dataclass(frozen=True)
class LiouvilleVerdict:
    """Outcome of profiling one exponent: a status, the profile
    (m, p^m*<a/p^m>) for m = 1..m_max, and a short proof note."""

    status: str
    profile: tuple
    note: str = ""


def liouville_profile(a, p: int, m_max: int) -> LiouvilleVerdict:
    """Classify a rational p-adic integer against the Liouville condition.

    Integers are recognized exactly.  Every rational non-integer is
    RationalNonLiouville: its residues satisfy den*|s_m| >= p^m - |num|,
    so the profile eventually grows linearly in p^m and the liminf of
    p^m <a/p^m> / m is infinite.  Liouville status is never claimed from
    finite data.
    """
    p = _check_prime(p)
    if not isinstance(m_max, int) or m_max < 1:
        raise ParameterError(f"m_max must be a positive integer, got {m_max!r}")
    a = _zp_fraction(a, p)
    profile = tuple((m, residue_distance(a, p, m)) for m in range(1, m_max + 1))
    if a.denominator == 1:
        return LiouvilleVerdict(INTEGER, profile,
                                note=f"exact integer; profile stabilizes at {abs(a)}")
    note = (f"den*|s_m| >= {p}^m - {abs(a.numerator)} forces growth like "
            f"{p}^m/{a.denominator}, so p^m<a/p^m>/m diverges")
    return LiouvilleVerdict(RATIONAL_NON_LIOUVILLE, profile, note=note)


@dataclass(frozen=True)
class WeakEquivalenceVerdict:
    """ConsistentToDepth carries the matching found at the deepest level;
    RefutedAtDepth carries a Hall witness (rows, columns) whose admissible
    neighborhood is too small at that depth."""

    status: str
    depth: int
    permutation: tuple | None = None
    witness: tuple | None = None


def _perfect_matching(admissible, n: int):
    """Kuhn augmenting-path matching on an n x n admissibility relation.

    Returns (permutation, None) with permutation[i] = matched column of
    row i, or (None, witness) with a Hall violator (rows, columns).
    Identity pairs are seeded first so that equal multisets match by the
    identity permutation.
    """
    col_of_row = [-1] * n
    row_of_col = [-1] * n
    for i in range(n):
        if i in admissible[i]:
            col_of_row[i] = i
            row_of_col[i] = i

    def augment(i, seen):
        for j in admissible[i]:
            if j in seen:
                continue
            seen.add(j)
            if row_of_col[j] < 0 or augment(row_of_col[j], seen):
                row_of_col[j] = i
                col_of_row[i] = j
                return True
        return False

    for i in range(n):
        if col_of_row[i] >= 0:
            continue
        seen: set = set()
        if not augment(i, seen):
            rows = sorted({i} | {row_of_col[j] for j in seen})
            return None, (tuple(rows), tuple(sorted(seen)))
    return tuple(col_of_row), None


def weakly_equivalent(A, B, p: int, c=Fraction(1), m_max: int = 12) -> WeakEquivalenceVerdict:
    """Test weak equivalence of two equal-size multisets depth by depth.

    At each m <= m_max a permutation sigma with
    p^m <(a_sigma(i) - b_i)/p^m> <= c*m must exist; its existence is decided
    by a perfect matching on the admissibility graph.  A refutation at one
    depth is a genuine obstruction for the given c; consistency through
    m_max is reported as such and never upgraded to a proof.
    """
    p = _check_prime(p)
    a = _entry_list(A, p)
    b = _entry_list(B, p)
    if len(a) != len(b):
        raise ParameterError(f"multiset sizes differ: {len(a)} vs {len(b)}")
    c = as_fraction(c)
    if c < 0:
        raise ParameterError(f"the matching scale c must be nonnegative, got {c}")
    if not isinstance(m_max, int) or m_max < 1:
        raise ParameterError(f"m_max must be a positive integer, got {m_max!r}")
    n = len(a)
    if n == 0:
        return WeakEquivalenceVerdict(CONSISTENT, m_max, permutation=())
    diffs = [[aj - bi for aj in a] for bi in b]

    def depth_result(m: int):
        pk = p ** m
        bound = c * m
        admissible = []
        for i in range(n):
            row = set()
            for j in range(n):
                d = diffs[i][j]
                r = d.numerator * pow(d.denominator, -1, pk) % pk
                if min(r, pk - r) <= bound:
                    row.add(j)
            admissible.append(row)
        return _perfect_matching(admissible, n)

    workers = _env_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(depth_result, range(1, m_max + 1)))
        for m, (perm, witness) in enumerate(results, start=1):
            if perm is None:
                return WeakEquivalenceVerdict(REFUTED, m, witness=witness)
        return WeakEquivalenceVerdict(CONSISTENT, m_max, permutation=results[-1][0])
    perm = None
    for m in range(1, m_max + 1):
        perm, witness = depth_result(m)
        if perm is None:
            return WeakEquivalenceVerdict(REFUTED, m, witness=witness)
    return WeakEquivalenceVerdict(CONSISTENT, m_max, permutation=perm)


def _env_workers() -> int:
    raw = os.environ.get("CONVLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class LiouvillePartition:
    """Blocks of mutually linked exponents plus an exactness flag."""

    blocks: tuple
    exact: bool


def liouville_partition(A, p: int, c=Fraction(1), m_max: int = 12) -> LiouvillePartition:
    """Partition a multiset into components linked by integer differences.

    Rational differences are never Liouville (their profiles grow
    provably), so for the rationals representable here the linking
    relation reduces to a - b being an integer and the partition is exact.
    The scale parameters are validated for interface compatibility; they
    would only influence entries with undecidable profiles.
    """
    p = _check_prime(p)
    entries = _entry_list(A, p)
    c = as_fraction(c)
    if c < 0:
        raise ParameterError(f"the matching scale c must be nonnegative, got {c}")
    if not isinstance(m_max, int) or m_max < 1:
        raise ParameterError(f"m_max must be a positive integer, got {m_max!r}")
    groups: dict = {}
    for e in entries:
        key = e - (e.numerator // e.denominator)
        groups.setdefault(key, []).append(e)
    blocks = sorted(tuple(sorted(g)) for g in groups.values())
    return LiouvillePartition(tuple(blocks), exact=True)


def prepared(A, mode: FieldMode) -> bool:
    """No two entries differ from each other by a nonzero integer.

    This is the equal-characteristic-zero reading of the preparedness
    condition val(a1 - a2 - m) > 0: nonzero integers are units there, so
    the condition degenerates to an exact hit.
    """
    if mode.kind != "eqchar0":
        raise ModeError("preparedness uses the equal-characteristic-zero valuation")
    vals = _entry_list(A)
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            d = vals[i] - vals[j]
            if d != 0 and d.denominator == 1:
                return False
    return True


# -- residue spectra and shearing ---------------------------------------------------


def _require_t_ddt(M: DiffModule):
    if M.derivation != "t_ddt":
        raise ParameterError("this operation needs the t*d/dt derivation")


def _require_regular(M: DiffModule):
    for row in M.matrix:
        for e in row:
            if not e.is_zero() and e.min_exp() < 0:
                raise IrregularityError(
                    "matrix has a pole at t = 0: negative exponent "
                    f"{e.min_exp()} present")


def _rational_constant_matrix(M: DiffModule) -> list:
    """Constant term of the matrix as exact rationals, or SpectrumError."""
    out = []
    for row in M.matrix:
        line = []
        for e in row:
            s = e.coeff(0)
            try:
                line.append(s.as_fraction())
            except ModeError as exc:
                raise SpectrumError(
                    "constant matrix term is not rational; the residue "
                    "spectrum is out of scope") from exc
        out.append(line)
    return out


def _residue_matrix(matrix) -> list:
    """u-residue of the constant term.  Exponents are only defined up to
    positive-valuation perturbations, so this is the matrix whose spectrum
    they are; a negative-valuation constant term has no residue and is
    rejected by the scalar layer."""
    return [[e.coeff(0).residue() for e in row] for row in matrix]


def _split_spectrum(N0) -> list:
    """Eigenvalues of a rational matrix with multiplicity; SpectrumError
    if the characteristic polynomial has an irrational factor."""
    roots, remainder = linalg.rational_roots(linalg.rational_charpoly(N0))
    if remainder:
        raise SpectrumError(
            "residue matrix has irrational eigenvalues (irreducible factor "
            f"of degree {remainder} left over)")
    return sorted(roots)


def residue_exponent(M: DiffModule) -> ExponentMultiset:
    """Eigenvalue multiset of the residue of the constant matrix term, as
    the exponent of a module regular at t = 0."""
    _require_t_ddt(M)
    _require_regular(M)
    return ExponentMultiset(M.mode, _split_spectrum(_residue_matrix(M.matrix)))


@dataclass(frozen=True)
class ShearResult:
    """Sheared module together with the gauge that realizes it."""

    module: DiffModule
    gauge: tuple


def _coset_targets(roots, zero_integers: bool) -> dict:
    """Normal form for each Z-coset of eigenvalues: the coset minimum, with
    the integer coset optionally pinned at 0."""
    cosets: dict = {}
    for lam in roots:
        key = lam - (lam.numerator // lam.denominator)
        cosets.setdefault(key, []).append(lam)
    targets = {}
    for key, members in cosets.items():
        if zero_integers and key == 0:
            targets[key] = Fraction(0)
        else:
            targets[key] = min(members)
    return {lam: targets[lam - (lam.numerator // lam.denominator)] for lam in roots}


def _primary_basis(N0, roots):
    """Change of basis splitting Q^n into generalized eigenspaces.

    Returns (columns matrix C, {eigenvalue: column indices}); assumes the
    characteristic polynomial splits over Q.
    """
    n = len(N0)
    mult: dict = {}
    for lam in roots:
        mult[lam] = mult.get(lam, 0) + 1
    cols = []
    blocks = {}
    for lam in sorted(mult):
        shifted = [[N0[i][j] - (lam if i == j else 0) for j in range(n)]
                   for i in range(n)]
        power = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for _ in range(mult[lam]):
            power = linalg.rational_mat_mul(power, shifted)
        kernel = linalg.rational_kernel(power)
        blocks[lam] = list(range(len(cols), len(cols) + len(kernel)))
        cols.extend(kernel)
    assert len(cols) == n, "primary decomposition must span the full space"
    C = [[cols[j][i] for j in range(n)] for i in range(n)]
    return C, blocks


def _prepare_by_shearing(M: DiffModule, zero_integers: bool):
    """Iterate single t-power shifts until the residue spectrum sits at its
    coset normal form.  Returns (module, gauge matrix, sheared?)."""
    mode = M.mode
    n = M.rank
    one = LaurentPoly.one(mode)
    zero = LaurentPoly.zero(mode)
    gauge = [[one if i == j else zero for j in range(n)] for i in range(n)]
    module = M
    moved = False
    potential = None
    while True:
        N0 = _residue_matrix(module.matrix)
        roots = _split_spectrum(N0)
        targets = _coset_targets(roots, zero_integers)
        spread = sum(abs(lam - targets[lam]) for lam in roots)
        if potential is not None:
            assert spread < potential, "shearing must strictly reduce the spread"
        potential = spread
        if spread == 0:
            break
        moved = True
        lam = max((abs(x - targets[x]), x) for x in roots if x != targets[x])[1]
        direction = -1 if lam > targets[lam] else 1
        C, blocks = _primary_basis(N0, roots)
        C_lp = [[LaurentPoly.constant(mode, e) for e in row] for row in C]
        module = module.change_basis(C_lp)
        step = [[one if i == j else zero for j in range(n)] for i in range(n)]
        for idx in blocks[lam]:
            step[idx][idx] = LaurentPoly.monomial(mode, 1, direction)
        module = module.change_basis(step)
        gauge = linalg.mat_mul(linalg.mat_mul(gauge, C_lp), step)
    return module, tuple(tuple(row) for row in gauge), moved


def shear(M: DiffModule, target: str = "prepared") -> ShearResult:
    """Shift residue eigenvalues by t-power gauges until prepared.

    "prepared" sends every Z-coset of eigenvalues to its minimum;
    "zero-integers" additionally pins the integer coset at 0.  The module
    changes only by a meromorphic gauge: transforming back along the
    inverse gauge recovers the input exactly.
    """
    if M.mode.kind != "eqchar0":
        raise ModeError("shearing is defined for the equal-characteristic-zero model")
    _require_t_ddt(M)
    _require_regular(M)
    if target not in SHEAR_TARGETS:
        raise ParameterError(f"unknown shear target {target!r}; use one of {SHEAR_TARGETS}")
    module, gauge, _ = _prepare_by_shearing(M, zero_integers=(target == "zero-integers"))
    return ShearResult(module, gauge)


# -- the disc solver -----------------------------------------------------------------


def _clip_high(f: LaurentPoly, order: int) -> LaurentPoly:
    if f.is_zero() or f.max_exp() <= order:
        return f
    return LaurentPoly(f.mode, {n: c for n, c in f.coeffs.items() if n <= order})


def _poly_trim(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_mul_q(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _poly_trim(out)


def _poly_divmod_q(a: list, b: list):
    a = a[:]
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    inv = 1 / b[-1]
    for k in range(len(a) - len(b), -1, -1):
        f = a[k + len(b) - 1] * inv
        q[k] = f
        if f:
            for j, y in enumerate(b):
                a[k + j] -= f * y
    return _poly_trim(q), _poly_trim(a[:len(b) - 1])


def _poly_sub_q(a: list, b: list) -> list:
    out = [Fraction(0)] * max(len(a), len(b))
    for i, x in enumerate(a):
        out[i] += x
    for i, y in enumerate(b):
        out[i] -= y
    return _poly_trim(out)


def _poly_shift_q(p: list, s: Fraction) -> list:
    """Coefficients of p(T + s)."""
    out = [Fraction(0)] * len(p)
    power = [Fraction(1)]
    for c in p:
        for idx, q in enumerate(power):
            out[idx] += c * q
        power = _poly_mul_q(power, [s, Fraction(1)])
    return _poly_trim(out)


def _poly_inverse_mod(a: list, modulus: list) -> list:
    """Inverse of a modulo a monic polynomial over Q, by extended Euclid."""
    r0, r1 = modulus[:], _poly_divmod_q(a, modulus)[1]
    s0, s1 = [], [Fraction(1)]
    while r1:
        q, r = _poly_divmod_q(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_sub_q(s0, _poly_mul_q(q, s1))
    if len(r0) != 1:
        raise PreparednessError(
            "P(T - j) is not invertible modulo P(T): the exponents are not prepared")
    inv0 = 1 / r0[0]
    return _poly_divmod_q([x * inv0 for x in s0], modulus)[1]


def _apply_poly_in_D(M: DiffModule, coeffs: list, vec: list, order: int) -> list:
    """Evaluate a Q[T] polynomial at T = D on a coordinate vector, clipped
    to t-degree <= order."""
    n = M.rank
    if not coeffs:
        return [LaurentPoly.zero(M.mode)] * n
    acc = [v.scalar_mul(coeffs[-1]) for v in vec]
    for c in reversed(coeffs[:-1]):
        acc = [_clip_high(e, order) for e in M.apply_D(acc)]
        if c:
            acc = [a + v.scalar_mul(c) for a, v in zip(acc, vec)]
    return [_clip_high(e, order) for e in acc]


def fuchs_basis(M: DiffModule, t_order: int, step_budget: int = 64) -> list:
    """Basis matrix making D act by its constant term, to t-degree t_order.

    Runs the corrector iteration e <- P(D - j) Q_j(D) e for j = 1..t_order,
    where P is the characteristic polynomial of the constant matrix term
    and Q_j inverts P(T - j) modulo P(T).  On the returned basis (congruent
    to the identity mod t) the action of D equals the constant term exactly
    through t-degree t_order.
    """
    if M.mode.kind != "eqchar0":
        raise ModeError("the disc solver works in the equal-characteristic-zero model")
    _require_t_ddt(M)
    _require_regular(M)
    if not isinstance(t_order, int) or t_order < 0:
        raise ParameterError(f"t_order must be a nonnegative integer, got {t_order!r}")
    if t_order > step_budget:
        raise BudgetError(
            f"{t_order} corrector steps needed, budget allows {step_budget}")
    n = M.rank
    N0 = _rational_constant_matrix(M)
    P = linalg.rational_charpoly(N0)
    vectors = [[LaurentPoly.constant(M.mode, int(i == r)) for r in range(n)]
               for i in range(n)]
    for j in range(1, t_order + 1):
        Pj = _poly_shift_q(P, Fraction(-j))
        Qj = _poly_inverse_mod(Pj, P)
        vectors = [_apply_poly_in_D(M, Pj, _apply_poly_in_D(M, Qj, v, t_order), t_order)
                   for v in vectors]
    return [[vectors[i][r] for i in range(n)] for r in range(n)]


# -- the annulus solver ---------------------------------------------------------------


class ConstantBasisResult(NamedTuple):
    basis: tuple
    residual: object


def _sylvester_inverse(Nbar, i: int, n: int) -> list:
    """Inverse of X -> Nbar X - X Nbar + i X on n x n matrices, vectorized."""
    size = n * n
    L = [[Fraction(0)] * size for _ in range(size)]
    for a in range(n):
        for b in range(n):
            row = a * n + b
            L[row][row] += i
            for c in range(n):
                L[row][c * n + b] += Nbar[a][c]
                L[row][a * n + c] -= Nbar[c][b]
    try:
        return linalg.rational_matrix_inverse(L)
    except SingularMatrixError as exc:
        raise PreparednessError(
            f"Sylvester operator for mode {i} is singular: eigenvalues "
            "differ by a nonzero integer") from exc


def _nonconstant_val(matrix, n: int, lo, hi):
    """Least Gauss valuation of the nonconstant part over [lo, hi]."""
    best = INF
    for i in range(n):
        for j in range(n):
            f = matrix[i][j]
            tail = LaurentPoly(f.mode, {k: c for k, c in f.coeffs.items() if k != 0})
            if not tail.is_zero():
                best = min(best, interval_gauss_val(tail, lo, hi))
    return best


def constant_basis(M: DiffModule, iterations: int) -> ConstantBasisResult:
    """Conjugate an annulus module toward its constant term.

    Needs a positive spectral gap: the nonconstant part of the matrix must
    have positive Gauss valuation on the whole working interval, while the
    constant term has valuation >= 0.  Each round solves one Sylvester
    equation per Fourier mode against the rational residue of the constant
    term (sheared first if its eigenvalues are not prepared) and conjugates
    by I + X; the residual valuation of what is left grows by at least the
    initial gap per round.  Terms whose valuation provably exceeds every
    reportable residual are dropped; the returned residual is exact unless
    the matrix became constant only up to such terms, in which case the
    dropped floor is reported.
    """
    if M.mode.kind != "eqchar0":
        raise ModeError("the annulus solver works in the equal-characteristic-zero model")
    _require_t_ddt(M)
    if not isinstance(iterations, int) or iterations < 0:
        raise ParameterError(f"iterations must be a nonnegative integer, got {iterations!r}")
    lo, hi = M.interval
    if hi == INF:
        raise IntervalError("the annulus solver needs a closed working interval")
    mode = M.mode
    n = M.rank
    one = LaurentPoly.one(mode)
    zero = LaurentPoly.zero(mode)
    basis = [[one if i == j else zero for j in range(n)] for i in range(n)]
    work = [row[:] for row in M.matrix]

    Nbar = _residue_matrix(work)
    roots = _split_spectrum(Nbar)
    if not prepared(roots, mode):
        if any(k < 0 for row in work for f in row for k in f.coeffs):
            raise DegenerateInputError(
                "unprepared residue spectrum cannot be sheared in the presence "
                "of negative Fourier modes")
        module, gauge, _ = _prepare_by_shearing(M, zero_integers=False)
        work = [list(row) for row in module.matrix]
        basis = [list(row) for row in gauge]
        Nbar = _residue_matrix(work)
        roots = _split_spectrum(Nbar)
        assert prepared(roots, mode), "shearing must leave a prepared spectrum"

    gap = _nonconstant_val(work, n, lo, hi)
    if gap == INF:
        return ConstantBasisResult(tuple(tuple(row) for row in basis), INF)
    if gap <= 0:
        raise DegenerateInputError(
            f"no positive spectral gap: val(N - N_0) = {gap} on the interval")

    stop_val = (iterations + 2) * gap
    max_mode = max(max(abs(k) for k in f.coeffs) if f.coeffs else 0
                   for row in work for f in row)
    window = max(1, max_mode) * (iterations + 2) + 2
    dropped = [INF]

    def clip(f: LaurentPoly) -> LaurentPoly:
        keep: dict = {}
        for k, c in f.coeffs.items():
            mode_floor = min(k * lo, k * hi)
            if abs(k) > window:
                dropped[0] = min(dropped[0], c.val() + mode_floor)
                continue
            series = {}
            for udeg, q in c.series.items():
                if udeg + mode_floor > stop_val:
                    dropped[0] = min(dropped[0], udeg + mode_floor)
                else:
                    series[udeg] = q
            if series:
                keep[k] = mode.series_scalar(series, c.known_to)
        return LaurentPoly(mode, keep)

    def clip_matrix(rows):
        return [[clip(e) for e in row] for row in rows]

    sylvester: dict = {}
    residual = gap
    for _ in range(iterations):
        tail_modes: dict = {}
        for i in range(n):
            for j in range(n):
                for k, c in work[i][j].coeffs.items():
                    if k != 0:
                        tail_modes.setdefault(k, {})[(i, j)] = c
        if not tail_modes:
            residual = INF
            break
        X = [[LaurentPoly.zero(mode) for _ in range(n)] for _ in range(n)]
        for k, cells in tail_modes.items():
            if k not in sylvester:
                sylvester[k] = _sylvester_inverse(Nbar, k, n)
            inv = sylvester[k]
            udegs = sorted({d for s in cells.values() for d in s.series})
            comp: dict = {}
            for d in udegs:
                rhs = [Fraction(0)] * (n * n)
                for (i, j), s in cells.items():
                    rhs[i * n + j] = -s.series.get(d, Fraction(0))
                sol = [sum(row[m] * rhs[m] for m in range(n * n)) for row in inv]
                for i in range(n):
                    for j in range(n):
                        v = sol[i * n + j]
                        if v:
                            comp.setdefault((i, j), {})[d] = v
            for (i, j), series in comp.items():
                X[i][j] = X[i][j] + LaurentPoly(mode, {k: mode.series_scalar(series)})
        V = [[X[i][j] + (one if i == j else zero) for j in range(n)] for i in range(n)]
        neg_x = [[-X[i][j] for j in range(n)] for i in range(n)]
        inverse = [[one if i == j else zero for j in range(n)] for i in range(n)]
        term = [row[:] for row in neg_x]
        guard = 0
        while any(not e.is_zero() for row in term for e in row):
            inverse = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(inverse, term)]
            term = clip_matrix(linalg.mat_mul(term, neg_x))
            guard += 1
            assert guard <= 4 * (iterations + 4), "Neumann series failed to terminate"
        dV = [[derive(e, "t_ddt") for e in row] for row in V]
        WV = linalg.mat_mul(work, V)
        work = clip_matrix(linalg.mat_mul(
            inverse, [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(WV, dV)]))
        basis = linalg.mat_mul(basis, V)
        new_res = _nonconstant_val(work, n, lo, hi)
        assert new_res == INF or new_res > residual, "residual must strictly increase"
        residual = new_res
        if residual == INF:
            break
    residual = min(residual, dropped[0])
    return ConstantBasisResult(tuple(tuple(row) for row in basis), residual)
