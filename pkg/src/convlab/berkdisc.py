"""Combinatorics of the nonarchimedean closed disc: classified points,
the radius homotopy, domination, rooted skeleta and controlling subdivisions.

Points are the multiplicative seminorms zeta_{z,rho} (center z, radius rho),
stored on the additive side: ``radius_log = -log rho``, so the disc of
multiplicative radius beta is rooted at ``root_radius_log = -log beta`` and
larger ``radius_log`` means a smaller ball.  Type-1 points sit at
radius_log = +inf; type-4 points are caller-supplied strictly nested chains
with a declared limit.  Centers are K-rational in the chosen field model.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    ContainmentError,
    DegenerateInputError,
    IntervalError,
    ParameterError,
)
from .valcore import INF, FieldMode, Scalar, as_fraction, padic_val

T1, T2, T3, T4 = "T1", "T2", "T3", "T4"


def _center_val(mode: FieldMode, a, b) -> Fraction:
    """Valuation of the difference of two centers (INF when equal)."""
    if mode.kind == "padic":
        return padic_val(as_fraction(a) - as_fraction(b), mode.p)
    if not isinstance(a, Scalar) or not isinstance(b, Scalar):
        raise ParameterError("equal-characteristic centers must be scalars")
    return (a - b).val()


def _center_key(mode: FieldMode, z):
    if mode.kind == "padic":
        return as_fraction(z)
    return z.sort_key()


class DiscPoint:
    """One classified point of the closed disc.

    Use the constructors: :meth:`rational` (type 1), :meth:`ball` (type 2),
    :meth:`irrational_marker` (type 3; no arithmetic is permitted on these)
    and :meth:`limit_chain` (type 4).
    """

    __slots__ = ("mode", "center", "radius_log", "type_tag", "chain",
                 "limit_radius_log", "bracket")

    def __init__(self, mode, center, radius_log, type_tag, chain=(),
                 limit_radius_log=None, bracket=None):
        self.mode = mode
        self.center = center
        self.radius_log = radius_log
        self.type_tag = type_tag
        self.chain = chain
        self.limit_radius_log = limit_radius_log
        self.bracket = bracket

    # -- constructors --------------------------------------------------------

    @staticmethod
    def rational(mode: FieldMode, z) -> "DiscPoint":
        """The classical point zeta_{z,0} (radius_log = +inf)."""
        return DiscPoint(mode, z, INF, T1)

    @staticmethod
    def ball(mode: FieldMode, z, radius_log) -> "DiscPoint":
        """zeta_{z,rho} with rational radius_log: a type-2 point (the value
        group of the algebraically closed base is divisible, so every
        rational radius_log lands in it)."""
        if radius_log is INF:
            return DiscPoint.rational(mode, z)
        return DiscPoint(mode, z, as_fraction(radius_log), T2)

    @staticmethod
    def irrational_marker(mode: FieldMode, z, bracket) -> "DiscPoint":
        """A type-3 marker: the radius is declared irrational and only a
        rational bracketing pair is recorded.  No arithmetic happens here."""
        lo, hi = as_fraction(bracket[0]), as_fraction(bracket[1])
        if not lo < hi:
            raise ParameterError("bracket must be a nonempty open interval")
        return DiscPoint(mode, z, None, T3, bracket=(lo, hi))

    @staticmethod
    def limit_chain(mode: FieldMode, chain, limit_radius_log) -> "DiscPoint":
        """A type-4 point: a strictly nested chain of balls with empty
        intersection.  Nesting is verified; emptiness is taken on trust."""
        if len(chain) < 2:
            raise ParameterError("a chain needs at least two balls")
        limit = as_fraction(limit_radius_log)
        items = [(z, as_fraction(r)) for z, r in chain]
        for (z0, r0), (z1, r1) in zip(items, items[1:]):
            if not r1 > r0:
                raise ParameterError("chain radii must strictly decrease")
            if _center_val(mode, z1, z0) < r0:
                raise ParameterError("chain balls must be nested")
        if not limit > items[-1][1]:
            raise ParameterError("declared limit must lie beyond the chain")
        z_last, _ = items[-1]
        return DiscPoint(mode, z_last, None, T4, chain=tuple(items),
                         limit_radius_log=limit)

    # -- basic geometry --------------------------------------------------------

    def diameter(self) -> Fraction:
        """rho(x) in additive units: +inf for type 1, the declared limit for
        type 4."""
        if self.type_tag == T1:
            return INF
        if self.type_tag == T2:
            return self.radius_log
        if self.type_tag == T4:
            return self.limit_radius_log
        raise ParameterError("type-3 markers carry no exact radius")

    def _proxy(self) -> tuple:
        """(center, radius_log) usable for ultrametric estimates."""
        if self.type_tag == T3:
            raise ParameterError("no arithmetic at type-3 markers")
        return self.center, self.diameter()

    def __eq__(self, other):
        if not isinstance(other, DiscPoint):
            return NotImplemented
        if self.mode != other.mode or self.type_tag != other.type_tag:
            return False
        if self.type_tag == T1:
            return _center_val(self.mode, self.center, other.center) is INF
        if self.type_tag == T2:
            return self.radius_log == other.radius_log and \
                _center_val(self.mode, self.center, other.center) >= self.radius_log
        if self.type_tag == T3:
            return self.bracket == other.bracket and \
                _center_val(self.mode, self.center, other.center) is INF
        if len(self.chain) != len(other.chain) or \
                self.limit_radius_log != other.limit_radius_log:
            return False
        return all(r0 == r1 and _center_val(self.mode, z0, z1) >= r0
                   for (z0, r0), (z1, r1) in zip(self.chain, other.chain))

    __hash__ = None

    def __repr__(self):
        if self.type_tag == T2:
            return f"DiscPoint({self.type_tag}, {self.center}, r={self.radius_log})"
        return f"DiscPoint({self.type_tag}, {self.center})"


def homotopy(x: DiscPoint, rho_log, root_radius_log=None) -> DiscPoint:
    """H(x, rho): expand x to the enclosing ball of radius rho (additive:
    the radius_log drops to rho_log unless x is already bigger).

    With ``root_radius_log`` supplied, the target radius is checked to stay
    inside the ambient disc."""
    rho_log = rho_log if rho_log is INF else as_fraction(rho_log)
    if x.type_tag == T3:
        raise ParameterError("no arithmetic at type-3 markers")
    if root_radius_log is not None:
        root_radius_log = as_fraction(root_radius_log)
        if rho_log is not INF and rho_log < root_radius_log:
            raise ContainmentError(
                f"target radius {rho_log} leaves the ambient disc at {root_radius_log}")
        z, diam = x._proxy()
        if diam < root_radius_log or \
                _center_val(x.mode, z, _zero_center(x.mode)) < root_radius_log:
            raise ContainmentError("point outside the ambient disc")
    if x.type_tag == T4:
        if rho_log is INF or rho_log >= x.limit_radius_log:
            return x
        for z, r in x.chain:
            if r >= rho_log:
                return DiscPoint.ball(x.mode, z, rho_log)
        raise DegenerateInputError(
            "chain too short to represent the requested ball")
    if rho_log is INF or rho_log >= x.radius_log:
        return x
    return DiscPoint.ball(x.mode, x.center, rho_log)


def join_radius_log(x: DiscPoint, y: DiscPoint) -> Fraction:
    """The additive radius at which the root paths of x and y merge:
    min(val(z - w), radius_log(x), radius_log(y))."""
    zx, rx = x._proxy()
    zy, ry = y._proxy()
    return min(_center_val(x.mode, zx, zy), rx, ry)


def dominates(y: DiscPoint, x: DiscPoint) -> bool:
    """True iff y = H(x, rho) for some rho, i.e. y lies on the root path."""
    if y.type_tag == T3 or x.type_tag == T3:
        raise ParameterError("no arithmetic at type-3 markers")
    return homotopy(x, y.diameter()) == y


@dataclass(frozen=True)
class SkeletonEdge:
    parent: int
    child: int
    r_start: Fraction   # radius_log at the parent (smaller)
    r_end: Fraction     # radius_log at the child


class Skeleton:
    """Union of the root paths of finitely many points, as a rooted tree.

    Vertices are the root (the Gauss point of the ambient disc), the
    generators and all pairwise branch points; edges carry the additive
    radius interval they span."""

    def __init__(self, mode: FieldMode, root_radius_log, generators):
        self.mode = mode
        self.root_radius_log = as_fraction(root_radius_log)
        self.root = DiscPoint.ball(mode, _zero_center(mode), self.root_radius_log)
        gens = []
        for g in generators:
            if g.type_tag == T3:
                raise ParameterError("type-3 markers cannot generate a skeleton")
            _, diam = g._proxy()
            if diam < self.root_radius_log or \
                    _center_val(mode, g.center, self.root.center) < self.root_radius_log:
                raise ContainmentError("generator outside the ambient disc")
            if not any(g == h for h in gens):
                gens.append(g)
        gens.sort(key=lambda g: (_center_key(mode, g.center),
                                 g.diameter() is INF,
                                 0 if g.diameter() is INF else g.diameter()))
        self.generators = gens
        self.vertices, self.edges = self._build()

    def _build(self):
        verts = [self.root]

        def add(pt):
            for v in verts:
                if v == pt:
                    return
            verts.append(pt)

        for g in self.generators:
            add(g)
        for i, a in enumerate(self.generators):
            for b in self.generators[i + 1:]:
                r = max(join_radius_log(a, b), self.root_radius_log)
                add(homotopy(a, r))
        edges = []
        for ci, v in enumerate(verts):
            if ci == 0:
                continue
            parent, pr = None, None
            for pi, w in enumerate(verts):
                if pi == ci or not dominates(w, v) or w == v:
                    continue
                rw = w.diameter()
                if parent is None or rw > pr:
                    parent, pr = pi, rw
            edges.append(SkeletonEdge(parent, ci, verts[parent].diameter(),
                                      v.diameter()))
        return verts, edges

    def contains(self, x: DiscPoint) -> bool:
        """Membership in the union of root paths."""
        if x == self.root:
            return True
        return any(homotopy(g, x.diameter()) == x for g in self.generators
                   if g.diameter() is INF or x.diameter() <= g.diameter())

    def retract(self, x: DiscPoint) -> DiscPoint:
        """pi_S(x) = H(x, rho*) at the largest additive radius where the
        root path of x meets the skeleton; fixes S pointwise."""
        best = self.root_radius_log
        for g in self.generators:
            best = max(best, join_radius_log(x, g))
        return homotopy(x, best)

    def as_dict(self) -> dict:
        def point_dict(p):
            d = {"type": p.type_tag, "center": str(p.center)}
            if p.type_tag == T2:
                d["radius_log"] = str(p.radius_log)
            elif p.type_tag == T4:
                d["limit_radius_log"] = str(p.limit_radius_log)
            return d

        return {
            "root_radius_log": str(self.root_radius_log),
            "generators": [point_dict(g) for g in self.generators],
            "vertices": [point_dict(v) for v in self.vertices],
            "edges": [{"parent": e.parent, "child": e.child,
                       "r_start": str(e.r_start),
                       "r_end": None if e.r_end is INF else str(e.r_end)}
                      for e in self.edges],
        }

    def __repr__(self):
        return (f"Skeleton({len(self.generators)} generators, "
                f"{len(self.vertices)} vertices)")


def _zero_center(mode: FieldMode):
    if mode.kind == "padic":
        return Fraction(0)
    return Scalar(mode, series={})


# -- controlling subdivisions -------------------------------------------------------


@dataclass(frozen=True)
class SubdivisionMarker:
    """One vertex forced by a kink: where it sits and the slopes meeting it."""

    vertex: DiscPoint
    generator_index: int
    radius_log: Fraction
    slopes: tuple


@dataclass
class Subdivision:
    skeleton: Skeleton
    markers: list
    flags: list


def controlling_subdivision(skel: Skeleton, functions) -> Subdivision:
    """Minimal refinement of the skeleton on which every supplied function
    is affine edge by edge.

    ``functions`` is a list of (generator_index, PAFunction) pairs, each
    function being defined on an additive-radius interval along that
    generator's root path.  Breakpoints become type-2 vertices; uncertified
    pieces are propagated as flags rather than silently accepted."""
    markers = []
    flags = []
    extra = []
    for idx, f in functions:
        if not 0 <= idx < len(skel.generators):
            raise ParameterError(f"no generator with index {idx}")
        g = skel.generators[idx]
        lo, hi = f.domain
        if lo < skel.root_radius_log or \
                (g.diameter() is not INF and hi > g.diameter()):
            raise IntervalError("function domain leaves the root path")
        for piece, ok in enumerate(f.certified):
            if not ok:
                flags.append((idx, (f.xs[piece], f.xs[piece + 1])))
        slopes = f.slopes()
        for i in range(1, len(slopes)):
            if slopes[i] == slopes[i - 1]:
                continue
            r = f.xs[i]
            vertex = homotopy(g, r)
            markers.append(SubdivisionMarker(
                vertex, idx, r, (slopes[i - 1], slopes[i])))
            extra.append(vertex)
    refined = Skeleton(skel.mode, skel.root_radius_log,
                       skel.generators + extra)
    return Subdivision(skeleton=refined, markers=markers, flags=flags)
