"""Intrinsic convergence radii: exact multisets, recursive refinement,
the iterated-derivative oracle, and piecewise-affine radius profiles.

Radii are reported as ``irlog = -log(IR) >= 0`` (0 means solutions converge
on the whole disc, values above ``c_omega = -log omega`` are the range where
the companion Newton polygon determines them exactly).  At a Gauss point r
the profile functions are ``f_i(r) = r + irlog_i(r)`` with f_1 >= f_2 >= ...
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import linalg
from .diffmod import DiffModule, cyclic_vector, companion_poly_with_cleared_denominators, \
    frobenius_descendant
from .errors import (
    AmbiguousInversionError,
    ConvlabError,
    CyclicSearchError,
    DegenerateInputError,
    IntervalError,
    InversionError,
    InversionInfeasibleError,
    ParameterError,
)
from .valcore import INF, FieldMode, as_fraction, derive, gauss_val, newton_polygon

EXACT = "exact"
LOWER_BOUND = "lower_bound"


def junk_irlog(p: int) -> Fraction:
    """irlog of the nontrivial twist factors created by pushforward."""
    return Fraction(p, p - 1)


def clip_irlog(x, mode: FieldMode):
    """Clip below the omega threshold: what any norm-limited method can see."""
    return max(x, mode.omega_val)


@dataclass(frozen=True)
class RadialEntry:
    """One radius value with multiplicity.

    kind == "exact": irlog is the exact value.
    kind == "lower_bound": the radius is certified >= the stored level only
    (true irlog <= stored irlog); produced where the polygon is blind.
    """

    irlog: Fraction
    multiplicity: int
    kind: str = EXACT
    certificate: str = ""

    @property
    def is_exact(self) -> bool:
        return self.kind == EXACT


@dataclass(frozen=True)
class RadiiMultiset:
    """Radius entries sorted by descending irlog (largest = slowest part)."""

    entries: tuple

    @staticmethod
    def build(items) -> "RadiiMultiset":
        merged = {}
        for e in items:
            key = (e.irlog, e.kind, e.certificate)
            merged[key] = merged.get(key, 0) + e.multiplicity
        ordered = sorted(
            ((RadialEntry(k[0], m, k[1], k[2])) for k, m in merged.items()),
            key=lambda e: (-e.irlog, e.kind, e.certificate))
        return RadiiMultiset(tuple(ordered))

    @property
    def total(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    @property
    def fully_exact(self) -> bool:
        return all(e.is_exact for e in self.entries)

    def expand(self) -> list:
        out = []
        for e in self.entries:
            out.extend([e] * e.multiplicity)
        return out

    def irlogs(self) -> list:
        """Multiplicity-expanded irlog values, descending."""
        return [e.irlog for e in self.expand()]

    def f_values(self, r) -> list:
        r = as_fraction(r)
        return [r + v for v in self.irlogs()]

    def top(self) -> RadialEntry:
        if not self.entries:
            raise DegenerateInputError("empty radius multiset")
        return self.entries[0]


# -- Christol-Dwork at one Gauss point -----------------------------------------------


def _coupling_components(matrix, n: int) -> list:
    """Connected components of the basis-coupling graph (symmetrized nonzero
    pattern).  Indices in different components never interact under D."""
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(n):
        for j in range(i + 1, n):
            if not (matrix[i][j].is_zero() and matrix[j][i].is_zero()):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def christol_dwork(M: DiffModule, r) -> RadiiMultiset:
    """Radius multiset read off the companion Newton polygon at radius r.

    Roots with valuation below -r are converted exactly; the rest of the
    spectrum is blind there: p-adically it yields lower-bound entries at
    c_omega, in equal characteristic zero the clip forces exact zeros.
    """
    r = as_fraction(r)
    if not M.contains_radius(r):
        raise IntervalError(f"radius {r} outside the working interval {M.interval}")
    n = M.rank
    if n == 0:
        return RadiiMultiset(())
    M = M.switch_derivation("ddt")
    comega = M.mode.omega_val
    if M.is_zero_matrix():
        return RadiiMultiset.build(
            [RadialEntry(Fraction(0), n, EXACT, "trivial")])
    comps = _coupling_components(M.matrix, n)
    if len(comps) > 1:
        # A block-diagonal module is a direct sum; radii are the union.
        out = []
        for idx in comps:
            sub = DiffModule(M.mode, M.derivation, M.interval,
                             [[M.matrix[a][b] for b in idx] for a in idx])
            out.extend(christol_dwork(sub, r).entries)
        return RadiiMultiset.build(out)
    cyc = cyclic_vector(M)
    coeffs = companion_poly_with_cleared_denominators(cyc.companion)
    poly = newton_polygon(coeffs, r)
    out = []
    for sigma, mult in poly.entries:
        if sigma < -r:
            out.append(RadialEntry(comega - r - sigma, mult, EXACT, "cd"))
        elif M.mode.kind == "padic":
            out.append(RadialEntry(comega, mult, LOWER_BOUND, "cd"))
        else:
            out.append(RadialEntry(Fraction(0), mult, EXACT, "cd-char0"))
    return RadiiMultiset.build(out)


# -- pushforward law and its inversion ------------------------------------------------


def push_multiset(ms: RadiiMultiset, p: int) -> RadiiMultiset:
    """Forward radii law along t -> t^p, in irlog units.

    x < c_omega: contributes {p x} and (p-1) junk copies at p/(p-1);
    x >= c_omega: contributes p copies of x + 1.
    """
    comega = Fraction(1, p - 1)
    out = []
    for e in ms.entries:
        if not e.is_exact:
            raise InversionError("cannot push a lower-bound entry forward")
        if e.irlog < comega:
            out.append(RadialEntry(p * e.irlog, e.multiplicity, EXACT, "push"))
            out.append(RadialEntry(junk_irlog(p), (p - 1) * e.multiplicity,
                                   EXACT, "push-junk"))
        else:
            out.append(RadialEntry(e.irlog + 1, p * e.multiplicity, EXACT, "push"))
    return RadiiMultiset.build(out)


def invert_descendant_multiset(ms: RadiiMultiset, p: int) -> RadiiMultiset:
    """Invert the pushforward law: recover the upstairs multiset.

    Entries strictly below the junk level J = p/(p-1) are small-branch
    images p*x (lower-bound entries keep their kind, with bound divided by
    p); each consumes p-1 junk copies at exactly J.  Entries above J must
    appear in groups of p and pull back to x = value - 1.  Any imbalance in
    the junk pool is an explicit failure: missing junk is infeasible, junk
    left over cannot be attributed and raises AmbiguousInversionError.
    """
    junk = junk_irlog(p)
    small = []
    junk_count = 0
    out = []
    for e in ms.entries:
        if not e.is_exact:
            if e.irlog >= junk:
                raise InversionInfeasibleError(
                    f"lower-bound entry at {e.irlog} cannot arise from a pushforward")
            small.append(e)
        elif e.irlog < junk:
            small.append(e)
        elif e.irlog == junk:
            junk_count += e.multiplicity
        else:
            if e.multiplicity % p:
                raise InversionInfeasibleError(
                    f"entry {e.irlog} has multiplicity {e.multiplicity}, "
                    f"not divisible by {p}")
            out.append(RadialEntry(e.irlog - 1, e.multiplicity // p,
                                   e.kind, "descend"))
    need = sum(e.multiplicity for e in small) * (p - 1)
    if junk_count < need:
        raise InversionInfeasibleError(
            f"need {need} junk entries at {junk}, found {junk_count}")
    if junk_count > need:
        raise AmbiguousInversionError(
            f"{junk_count - need} junk entries at {junk} are unaccounted for; "
            "the inversion is not certified at the boundary",
            entry=(junk, junk_count - need))
    for e in small:
        out.append(RadialEntry(e.irlog / p, e.multiplicity, e.kind, "descend"))
    return RadiiMultiset.build(out)


# -- the full computation with recursion ------------------------------------------------


def module_radii(M: DiffModule, r, depth: int = 2) -> RadiiMultiset:
    """Exact radius multiset at r, refining blind spots via pushforward.

    Lower-bound entries left by the polygon are chased through up to
    ``depth`` descendants (each step divides the remaining uncertainty by
    p).  With depth exhausted the partial multiset is returned as-is, so
    callers can detect and flag the remaining lower-bound entries.
    """
    r = as_fraction(r)
    base = christol_dwork(M, r)
    if base.fully_exact or depth <= 0:
        return base
    p = M.mode.p
    restricted = DiffModule(M.mode, M.derivation, (r, r), M.matrix)
    desc = frobenius_descendant(restricted)
    down = module_radii(desc, p * r, depth - 1)
    try:
        up = invert_descendant_multiset(down, p)
    except AmbiguousInversionError:
        # boundary collision with the junk level: keep the direct view and
        # leave the residual lower-bound mass flagged
        return base
    except InversionError:
        if not down.fully_exact:
            # bounds too loose to invert cleanly; keep the direct view
            return base
        raise
    # cross-check: the exactly-visible part must be reproduced verbatim
    def visible_part(ms):
        out = {}
        for e in ms.entries:
            if e.is_exact and e.irlog > M.mode.omega_val:
                out[e.irlog] = out.get(e.irlog, 0) + e.multiplicity
        return out

    if visible_part(base) != visible_part(up):
        raise InversionError(
            "descendant inversion disagrees with the directly visible entries")
    return up


# -- iterated-derivative oracle ----------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    """Numerical spectral estimate of the top irlog at one Gauss point."""

    r: Fraction
    k_max: int
    irlog: Fraction
    estimates: tuple  # ((k, irlog_k), ...)


def spectral_radius_oracle(M: DiffModule, r, k_max: int = 64,
                           schedule: Sequence[int] = (8, 16, 32, 64)) -> OracleResult:
    """Estimate the largest irlog from iterated-derivative norms.

    N_k is the matrix of D^k on the basis; the k-th estimate is
    c_omega - r - V_k / k with V_k = min(w_r(N_k), val(k!) - k r), the
    second term being the exact norm of the k-th power of the derivation.
    The estimate converges to the true top irlog from above as k grows.
    """
    r = as_fraction(r)
    if not M.contains_radius(r):
        raise IntervalError(f"radius {r} outside the working interval {M.interval}")
    if M.rank == 0:
        raise DegenerateInputError("rank-0 module has no spectral radius")
    if k_max < 1:
        raise ParameterError("k_max must be positive")
    M = M.switch_derivation("ddt")
    comega = M.mode.omega_val
    marks = sorted(set(k for k in schedule if 1 <= k <= k_max) | {k_max})
    N = M.matrix
    Nk = N
    estimates = []
    for k in range(1, k_max + 1):
        if k > 1:
            prod = linalg.mat_mul(N, Nk)
            Nk = [[prod[i][j] + derive(Nk[i][j], "ddt")
                   for j in range(M.rank)] for i in range(M.rank)]
        if k in marks:
            wmat = min(gauss_val(e, r) for row in Nk for e in row)
            vk = min(wmat, M.mode.derivation_val(k, r))
            estimates.append((k, comega - r - Fraction(vk, k)))
    return OracleResult(r=r, k_max=k_max, irlog=estimates[-1][1],
                        estimates=tuple(estimates))


# -- piecewise-affine functions -----------------------------------------------------------


class PAFunction:
    """Continuous piecewise-affine function on [xs[0], xs[-1]].

    Stored as breakpoints with values; every piece carries a certified flag.
    """

    def __init__(self, xs, ys, certified=None):
        xs = [as_fraction(x) for x in xs]
        ys = [as_fraction(y) for y in ys]
        if len(xs) != len(ys) or len(xs) < 2:
            raise ParameterError("need matching breakpoints and values (>= 2)")
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise ParameterError("breakpoints must be strictly increasing")
        self.xs = xs
        self.ys = ys
        self.certified = list(certified) if certified is not None \
            else [True] * (len(xs) - 1)
        if len(self.certified) != len(xs) - 1:
            raise ParameterError("one certified flag per piece")

    @property
    def domain(self) -> tuple:
        return (self.xs[0], self.xs[-1])

    def slopes(self) -> list:
        return [(y2 - y1) / (x2 - x1) for (x1, x2, y1, y2)
                in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])]

    def evaluate(self, x):
        x = as_fraction(x)
        if not self.xs[0] <= x <= self.xs[-1]:
            raise IntervalError(f"{x} outside the domain {self.domain}")
        for i in range(len(self.xs) - 1):
            if x <= self.xs[i + 1]:
                t0, t1 = self.xs[i], self.xs[i + 1]
                return self.ys[i] + (self.ys[i + 1] - self.ys[i]) * (x - t0) / (t1 - t0)
        return self.ys[-1]

    def __add__(self, other: "PAFunction") -> "PAFunction":
        if self.domain != other.domain:
            raise IntervalError("cannot add functions on different domains")
        xs = sorted(set(self.xs) | set(other.xs))
        ys = [self.evaluate(x) + other.evaluate(x) for x in xs]
        cert = []
        for a, b in zip(xs, xs[1:]):
            mid = (a + b) / 2
            cert.append(self._piece_certified(mid) and other._piece_certified(mid))
        return PAFunction(xs, ys, cert)

    def _piece_certified(self, x) -> bool:
        for i in range(len(self.xs) - 1):
            if self.xs[i] <= x <= self.xs[i + 1]:
                return self.certified[i]
        return False

    def simplify(self) -> "PAFunction":
        """Merge adjacent pieces with equal slope and certification."""
        xs = [self.xs[0]]
        ys = [self.ys[0]]
        cert = []
        slopes = self.slopes()
        for i in range(len(slopes)):
            if i > 0 and slopes[i] == slopes[i - 1] and \
                    self.certified[i] == cert[-1]:
                xs[-1] = self.xs[i + 1]
                ys[-1] = self.ys[i + 1]
            else:
                xs.append(self.xs[i + 1])
                ys.append(self.ys[i + 1])
                cert.append(self.certified[i])
        return PAFunction(xs, ys, cert)

    def breakpoints(self) -> list:
        """Interior points where the slope actually changes."""
        out = []
        slopes = self.slopes()
        for i in range(1, len(slopes)):
            if slopes[i] != slopes[i - 1]:
                out.append(self.xs[i])
        return out

    def as_dict(self) -> dict:
        return {
            "breakpoints": [str(x) for x in self.xs],
            "values": [str(y) for y in self.ys],
            "certified": list(self.certified),
        }

    @staticmethod
    def from_dict(d: dict) -> "PAFunction":
        return PAFunction([Fraction(x) for x in d["breakpoints"]],
                          [Fraction(y) for y in d["values"]],
                          list(d["certified"]))

    def __eq__(self, other):
        if not isinstance(other, PAFunction):
            return NotImplemented
        return (self.xs, self.ys, self.certified) == \
            (other.xs, other.ys, other.certified)

    def __repr__(self):
        return f"PAFunction({len(self.xs)} points on {self.domain})"


# -- radius profiles over an interval --------------------------------------------------------


@dataclass
class RadiiProfile:
    """Sampled radius profile: f_i(r) = r + irlog_i(r), f_1 >= ... >= f_n."""

    r1: Fraction
    r2: Fraction
    rank: int
    functions: list
    flags: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.flags and all(all(f.certified) for f in self.functions)

    def uncertified_fraction(self) -> Fraction:
        span = self.r2 - self.r1
        if span == 0:
            return Fraction(0)
        worst = Fraction(0)
        for f in self.functions:
            bad = sum((b - a for (a, b, c) in
                       zip(f.xs, f.xs[1:], f.certified) if not c), Fraction(0))
            worst = max(worst, bad)
        return worst / span

    def sum_functions(self) -> list:
        """Partial sums F_i = f_1 + ... + f_i."""
        out = []
        acc = None
        for f in self.functions:
            acc = f if acc is None else acc + f
            out.append(acc)
        return out


def _profile_workers() -> int:
    raw = os.environ.get("CONVLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sample_radii(M: DiffModule, x, depth: int):
    try:
        ms = module_radii(M, x, depth)
    except (InversionError, CyclicSearchError) as exc:
        return None, f"{type(exc).__name__}"
    if not ms.fully_exact:
        return None, "lower-bound-only"
    return ms.f_values(x), None


def _chord_slopes(xs, vals):
    return [(vals[i + 1] - vals[i]) / (xs[i + 1] - xs[i])
            for i in range(len(xs) - 1)]


def _certify(slopes, rank) -> list:
    """A chord is certified inside a run of >= 2 equal admissible slopes."""
    out = []
    for i, s in enumerate(slopes):
        admissible = s.denominator <= rank
        neighbor = (i > 0 and slopes[i - 1] == s) or \
            (i + 1 < len(slopes) and slopes[i + 1] == s)
        out.append(admissible and neighbor)
    return out


def radii_profile(M: DiffModule, r1, r2, grid: int = 32, depth: int = 2,
                  refine_budget: int = 64) -> RadiiProfile:
    """Sample f_i over [r1, r2] and assemble certified piecewise-affine curves.

    Uncertified stretches get one midpoint-refinement round (up to
    ``refine_budget`` extra samples); whatever remains uncertified afterwards
    is flagged, as are sample points where the exact computation fails."""
    r1, r2 = as_fraction(r1), as_fraction(r2)
    if not r1 < r2:
        raise IntervalError("need r1 < r2 for a profile")
    if grid < 2:
        raise ParameterError("grid must have at least 2 intervals")
    if not (M.contains_radius(r1) and M.contains_radius(r2)):
        raise IntervalError("profile interval leaves the working interval")
    xs = [r1 + (r2 - r1) * Fraction(i, grid) for i in range(grid + 1)]
    samples = {}
    flags = []

    def run(points):
        todo = [x for x in points if x not in samples]
        workers = _profile_workers()
        if workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda x: _sample_radii(M, x, depth), todo))
        else:
            results = [_sample_radii(M, x, depth) for x in todo]
        for x, (vals, flag) in zip(todo, results):
            samples[x] = vals
            if flag is not None:
                flags.append((str(flag), x))

    run(xs)
    good = [x for x in xs if samples[x] is not None]
    if len(good) < 2:
        raise DegenerateInputError("profile failed at almost every sample")

    # one local refinement round over uncertified stretches
    n = M.rank
    refine = set()
    for i in range(n):
        vals = [samples[x][i] for x in good]
        cert = _certify(_chord_slopes(good, vals), n)
        for j, ok in enumerate(cert):
            if not ok:
                refine.add((good[j] + good[j + 1]) / 2)
    refine = sorted(refine)[:refine_budget]
    if refine:
        run(refine)

    pts = sorted(x for x in samples if samples[x] is not None)
    functions = []
    for i in range(n):
        vals = [samples[x][i] for x in pts]
        cert = _certify(_chord_slopes(pts, vals), n)
        functions.append(PAFunction(pts, vals, cert).simplify())
    prof = RadiiProfile(r1=r1, r2=r2, rank=n, functions=functions, flags=flags)
    return prof


# -- variation report ---------------------------------------------------------------------


@dataclass(frozen=True)
class VariationRecord:
    prop: str
    index: int
    span: tuple
    ok: bool
    witness: object = None


@dataclass(frozen=True)
class VariationReport:
    records: tuple

    @property
    def ok(self) -> bool:
        return all(rec.ok for rec in self.records)

    def failures(self) -> list:
        return [rec for rec in self.records if not rec.ok]


def variation_check(profile: RadiiProfile, context: str = "annulus") -> VariationReport:
    """Structural laws of radius profiles, checked span by span.

    * each partial sum F_i is convex;
    * F_n has integer slopes;
    * slopes of each f_i have denominator at most the rank;
    * on a disc, F_i is nonincreasing wherever f_i stays above the diagonal;
    * every f_i stays >= r (radii never exceed the ambient disc).
    """
    if context not in ("disc", "annulus"):
        raise ParameterError("context must be 'disc' or 'annulus'")
    recs = []
    n = profile.rank
    sums = profile.sum_functions()
    for i, f in enumerate(profile.functions, start=1):
        slopes = f.slopes()
        for j, s in enumerate(slopes):
            span = (f.xs[j], f.xs[j + 1])
            recs.append(VariationRecord(
                "slope-denominator", i, span, s.denominator <= n, s))
        for j in range(len(f.xs)):
            x = f.xs[j]
            recs.append(VariationRecord(
                "above-diagonal", i, (x, x), f.ys[j] >= x, f.ys[j] - x))
    for i, F in enumerate(sums, start=1):
        slopes = F.slopes()
        for j in range(1, len(slopes)):
            span = (F.xs[j - 1], F.xs[j + 1])
            recs.append(VariationRecord(
                "convex", i, span, slopes[j] >= slopes[j - 1],
                (slopes[j - 1], slopes[j])))
        if i == n:
            for j, s in enumerate(slopes):
                span = (F.xs[j], F.xs[j + 1])
                recs.append(VariationRecord(
                    "integer-slopes", i, span, s.denominator == 1, s))
        if context == "disc":
            f = profile.functions[i - 1]
            for j, s in enumerate(slopes):
                a, b = F.xs[j], F.xs[j + 1]
                mid = (a + b) / 2
                if f.evaluate(mid) > mid:
                    recs.append(VariationRecord(
                        "disc-monotone", i, (a, b), s <= 0, s))
    return VariationReport(tuple(recs))
