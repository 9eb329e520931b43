"""Scalars, Gauss valuations, Newton polygons and slope factorization."""

import math
import random
from fractions import Fraction as F

import pytest

from convlab import (
    INF,
    NEG_INF,
    FieldMode,
    IntervalError,
    LaurentPoly,
    LiftingError,
    NormalizationError,
    ParameterError,
    PrecisionError,
    SlopeCollisionError,
    approx_inverse,
    derive,
    gauss_val,
    interval_gauss_val,
    newton_polygon,
    split_by_slope,
)

P2 = FieldMode.padic(2)
P3 = FieldMode.padic(3)
E0 = FieldMode.eqchar0(8)


def C(mode, x):
    return LaurentPoly.constant(mode, x)


def tpow(mode, c, n):
    return LaurentPoly.monomial(mode, c, n)


# ---------------------------------------------------------------- field modes


def test_mode_constants():
    assert P2.omega_val == F(1, 1)
    assert P3.omega_val == F(1, 2)
    assert FieldMode.padic(7).omega_val == F(1, 6)
    assert E0.omega_val == 0


def test_mode_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        FieldMode.padic(6)
    with pytest.raises(ParameterError):
        FieldMode.padic(1)
    with pytest.raises(ParameterError):
        FieldMode.eqchar0(0)


def test_padic_scalar_valuations():
    assert P2.scalar(2).val() == 1
    assert P2.scalar(F(1, 4)).val() == -2
    assert P2.scalar(12).val() == 2
    assert P3.scalar(F(9, 5)).val() == 2
    assert P2.scalar(0).val() == INF
    assert P2.scalar(3).val() == 0


def test_eqchar0_scalar_arithmetic():
    a = E0.series_scalar({0: 1, 1: 1})       # 1 + u
    inv = a.inverse()
    # alternating geometric series, certified to the mode precision
    assert inv.series[0] == 1 and inv.series[1] == -1 and inv.series[7] == -1
    assert inv.known_to == 8
    prod = a * inv - E0.one()
    assert prod.is_truncated_zero()
    mono = E0.series_scalar({-2: F(3, 4)})
    assert mono.inverse().series == {2: F(4, 3)}
    assert mono.inverse().known_to == INF
    assert (a * a).val() == 0
    assert E0.series_scalar({3: 5}).val() == 3


def test_truncated_zero_valuation_is_an_error():
    a = E0.series_scalar({0: 1, 1: 1})
    z = a * a.inverse() - E0.one()
    assert z.is_truncated_zero()
    with pytest.raises(PrecisionError):
        z.val()


def test_scalar_residue():
    assert P2.scalar(F(5, 3)).residue() == F(5, 3)
    s = E0.series_scalar({0: F(2, 7), 1: 4})
    assert s.residue() == F(2, 7)


# ------------------------------------------------------------ laurent algebra


def test_poly_ring_ops():
    t = LaurentPoly.variable(P2)
    f = (t + C(P2, 1)) * (t - C(P2, 1))
    assert f == t * t - C(P2, 1)
    g = tpow(P2, F(1, 2), -3)
    assert (g * g).coeffs[-6].frac == F(1, 4)
    assert (t ** 5).coeffs == {5: P2.scalar(1)}
    assert ((t + C(P2, 1)) ** 2) == t * t + t.scalar_mul(2) + C(P2, 1)
    assert (tpow(P2, 2, 1) ** -2) == tpow(P2, F(1, 4), -2)
    assert f.monomial_div(1, -1) == f.shift(1)


def test_derivations():
    f = LaurentPoly(P3, {-2: 5, 0: 7, 3: F(1, 3)})
    df = derive(f, "ddt")
    assert df == LaurentPoly(P3, {-3: -10, 2: 1})
    tf = derive(f, "t_ddt")
    assert tf == LaurentPoly(P3, {-2: -10, 3: 1})
    t = LaurentPoly.variable(P3)
    assert tf == t * df
    with pytest.raises(ParameterError):
        derive(f, "dds")


def test_residue_class_regrouping():
    f = LaurentPoly(P2, {-1: 3, 0: 5, 1: 7, 2: 11, 3: 13})
    even = f.residue_class(0, 2)
    odd = f.residue_class(1, 2)
    assert even == LaurentPoly(P2, {0: 5, 1: 11})
    assert odd == LaurentPoly(P2, {-1: 3, 0: 7, 1: 13})


# ------------------------------------------------------------ gauss valuation


def test_gauss_val_frozen():
    f = LaurentPoly(P2, {0: F(1, 4), 2: 3})
    assert gauss_val(f, 0) == -2
    assert gauss_val(f, 1) == -2
    assert gauss_val(f, -1) == -2
    assert gauss_val(f, F(-3, 2)) == -3
    assert gauss_val(LaurentPoly.zero(P2), 5) == INF
    g = LaurentPoly(P3, {-1: 1, 1: 9})
    assert gauss_val(g, F(1, 2)) == F(-1, 2)
    assert gauss_val(g, 2) == -2          # t^{-1} term wins far out
    assert gauss_val(g, -3) == -1         # val(9) + 1*(-3)


def test_gauss_val_at_infinite_radii():
    f = LaurentPoly(P2, {0: F(1, 4), 2: 3})
    assert gauss_val(f, INF) == -2        # constant term survives
    assert gauss_val(f, NEG_INF) == NEG_INF
    g = LaurentPoly(P2, {1: 1})
    assert gauss_val(g, INF) == INF
    assert gauss_val(g, NEG_INF) == NEG_INF
    h = LaurentPoly(P2, {-2: 1, 0: 8})
    assert gauss_val(h, INF) == NEG_INF
    assert gauss_val(h, NEG_INF) == 3     # constant term survives
    assert gauss_val(LaurentPoly(P2, {-2: 1}), NEG_INF) == INF


def test_gauss_val_is_a_valuation():
    rng = random.Random(20101)
    for _ in range(150):
        mode = rng.choice([P2, P3])
        r = F(rng.randrange(-8, 9), rng.randrange(1, 5))

        def rand_poly():
            return LaurentPoly(mode, {
                rng.randrange(-4, 5): F(rng.randrange(-30, 31), rng.randrange(1, 9))
                for _ in range(rng.randrange(1, 5))})

        f, g = rand_poly(), rand_poly()
        wf, wg = gauss_val(f, r), gauss_val(g, r)
        assert gauss_val(f * g, r) == wf + wg
        assert gauss_val(f + g, r) >= min(wf, wg)


def test_interval_gauss_val():
    f = LaurentPoly(P2, {-1: 1, 1: F(1, 2)})
    # w_r = min(-r, r - 1): concave, peak at r = 1/2
    assert interval_gauss_val(f, 0, 1) == -1
    assert interval_gauss_val(f, F(1, 4), F(1, 2)) == F(-3, 4)
    assert interval_gauss_val(f, F(1, 2), F(1, 2)) == F(-1, 2)
    assert interval_gauss_val(f, 0, INF) == NEG_INF
    with pytest.raises(IntervalError):
        interval_gauss_val(f, 1, 0)


def test_interval_min_is_attained_at_endpoints():
    rng = random.Random(7401)
    for _ in range(80):
        f = LaurentPoly(P2, {
            rng.randrange(-3, 4): F(rng.randrange(-20, 21), rng.randrange(1, 7))
            for _ in range(rng.randrange(1, 5))})
        if f.is_zero():
            continue
        r1 = F(rng.randrange(-6, 7), 3)
        r2 = r1 + F(rng.randrange(0, 9), 3)
        lo = interval_gauss_val(f, r1, r2)
        for k in range(5):
            rmid = r1 + (r2 - r1) * F(k, 4)
            assert gauss_val(f, rmid) >= lo


def test_mode_filter_decay():
    # support in h + mZ, nonnegative exponents: shrinking the outer radius by
    # delta improves the valuation by at least h'*delta, h' the smallest
    # nonnegative representative of h mod m
    rng = random.Random(3313)
    for _ in range(60):
        m = rng.randrange(2, 5)
        h = rng.randrange(0, m)
        f = LaurentPoly(P2, {
            h + m * rng.randrange(0, 4): F(rng.randrange(-9, 10), rng.randrange(1, 5))
            for _ in range(rng.randrange(1, 4))})
        if f.is_zero():
            continue
        r = F(rng.randrange(0, 12), 4)
        delta = F(rng.randrange(0, 8), 4)
        assert gauss_val(f, r + delta) >= gauss_val(f, r) + h * delta


# ------------------------------------------------------------- newton polygon


def test_newton_polygon_frozen():
    coeffs = [C(P2, 2), C(P2, -3), C(P2, 1)]
    np_ = newton_polygon(coeffs, 0)
    assert np_.entries == ((F(0), 1), (F(1), 1))
    assert np_.degree == 2
    assert np_.multiset() == [0, 1]
    assert np_.count_above(F(1, 2)) == 1

    # T^2 - (t^-1 + 3t) T + 3 at r = 1/2: roots t^-1 and 3t
    c1 = LaurentPoly(P3, {-1: -1, 1: -3})
    np2 = newton_polygon([C(P3, 3), c1, C(P3, 1)], F(1, 2))
    assert np2.entries == ((F(-1, 2), 1), (F(3, 2), 1))


def test_newton_polygon_infinite_entries():
    z = LaurentPoly.zero(P2)
    t = LaurentPoly.variable(P2)
    np_ = newton_polygon([z, z, t, C(P2, 1)], F(1, 4))
    assert np_.entries == ((F(1, 4), 1), (INF, 2))
    assert np_.degree == 3
    assert np_.count_above(100) == 2


def test_newton_polygon_merges_equal_slopes():
    # (T - 2)(T - 2/3) has both roots of valuation 1 over Q_2
    coeffs = [C(P2, F(4, 3)), C(P2, F(-8, 3)), C(P2, 1)]
    np_ = newton_polygon(coeffs, 0)
    assert np_.entries == ((F(1), 2),)


def test_newton_polygon_rejects_degenerate_input():
    from convlab import DegenerateInputError
    with pytest.raises(DegenerateInputError):
        newton_polygon([], 0)
    with pytest.raises(DegenerateInputError):
        newton_polygon([C(P2, 1), LaurentPoly.zero(P2)], 0)
    with pytest.raises(IntervalError):
        newton_polygon([C(P2, 1), C(P2, 1)], INF)


def test_newton_polygon_multiplicative():
    rng = random.Random(5150)
    for _ in range(40):
        mode = rng.choice([P2, P3])
        r = F(rng.randrange(-4, 5), 2)

        def monic(deg):
            cs = [LaurentPoly(mode, {rng.randrange(-2, 3):
                                     F(rng.randrange(-12, 13), rng.randrange(1, 5))})
                  for _ in range(deg)]
            return cs + [LaurentPoly.one(mode)]

        f, g = monic(rng.randrange(1, 4)), monic(rng.randrange(1, 4))
        prod = [LaurentPoly.zero(mode) for _ in range(len(f) + len(g) - 1)]
        for i, a in enumerate(f):
            for j, b in enumerate(g):
                prod[i + j] = prod[i + j] + a * b
        merged = sorted(newton_polygon(f, r).multiset()
                        + newton_polygon(g, r).multiset())
        assert sorted(newton_polygon(prod, r).multiset()) == merged
        assert sum(m for _, m in newton_polygon(prod, r).entries) \
            == len(prod) - 1


# ---------------------------------------------------------- slope splitting


def expand(factors):
    out = factors[0]
    for f in factors[1:]:
        prod = [LaurentPoly.zero(out[0].mode) for _ in range(len(out) + len(f) - 1)]
        for i, a in enumerate(out):
            for j, b in enumerate(f):
                prod[i + j] = prod[i + j] + a * b
        out = prod
    return out


def test_split_separates_integer_slopes():
    coeffs = [C(P2, 2), C(P2, -3), C(P2, 1)]     # (T-1)(T-2)
    res = split_by_slope(coeffs, 0, F(1, 2), t_prec=8)
    assert newton_polygon(res.low, 0).entries == ((F(0), 1),)
    assert newton_polygon(res.high, 0).entries == ((F(1), 1),)
    assert res.bound >= 8
    # lifted roots are 2-adically close to the true ones
    low_root = -res.low[0].coeffs[0].frac
    high_root = -res.high[0].coeffs[0].frac
    assert P2.scalar(low_root - 1).val() >= 8
    assert P2.scalar(high_root - 2).val() >= 8
    # recombination error really is certified
    err = expand([res.low, res.high])
    diff = [a - b for a, b in zip(coeffs, err)]
    assert min(gauss_val(c, 0) for c in diff) >= res.bound


def test_split_exact_laurent_factors():
    # (T - t^-1)(T - 3t) over Q_3 splits exactly at r = 1/2, cut = 0
    c1 = LaurentPoly(P3, {-1: -1, 1: -3})
    coeffs = [C(P3, 3), c1, C(P3, 1)]
    res = split_by_slope(coeffs, F(1, 2), 0, t_prec=10)
    assert res.bound == INF
    assert res.low == [tpow(P3, -1, -1), C(P3, 1)]
    assert res.high == [tpow(P3, -3, 1), C(P3, 1)]


def test_split_trivial_sides():
    coeffs = [C(P2, 2), C(P2, -3), C(P2, 1)]
    res = split_by_slope(coeffs, 0, -5, t_prec=4)
    assert res.high == coeffs and res.low == [C(P2, 1)]
    res = split_by_slope(coeffs, 0, 5, t_prec=4)
    assert res.low == coeffs and res.high == [C(P2, 1)]


def test_split_cut_on_slope_is_an_error():
    coeffs = [C(P2, 2), C(P2, -3), C(P2, 1)]
    with pytest.raises(SlopeCollisionError):
        split_by_slope(coeffs, 0, 1, t_prec=4)
    c1 = LaurentPoly(P3, {-1: -1, 1: -3})
    with pytest.raises(SlopeCollisionError):
        split_by_slope([C(P3, 3), c1, C(P3, 1)], F(1, 2), F(3, 2), t_prec=4)


def test_split_normalization():
    # leading coefficient 4t^2: an invertible monomial, normalized away
    lead = tpow(P2, 4, 2)
    coeffs = [lead * C(P2, 2), lead * C(P2, -3), lead]
    res = split_by_slope(coeffs, 0, F(1, 2), t_prec=6)
    assert newton_polygon(res.high, 0).entries == ((F(1), 1),)
    bad = [C(P2, 2), C(P2, -3), LaurentPoly(P2, {0: 1, 1: 1})]
    with pytest.raises(NormalizationError):
        split_by_slope(bad, 0, F(1, 2), t_prec=6)


def test_split_handles_vanishing_low_coefficients():
    # T^3 + tT^2 = T^2 (T + t): infinite-valuation block splits off
    z = LaurentPoly.zero(P2)
    t = LaurentPoly.variable(P2)
    coeffs = [z, z, t, C(P2, 1)]
    res = split_by_slope(coeffs, F(1, 4), 1, t_prec=6)
    assert res.low == [t, C(P2, 1)]
    assert res.high == [z, z, C(P2, 1)]
    assert res.bound == INF


def test_split_random_products():
    rng = random.Random(90125)
    for _ in range(25):
        mode = rng.choice([P2, P3])
        p = mode.p
        vals = rng.sample(range(-3, 4), 2)
        # roots are p^v times a unit, so the valuations are exactly the v's
        factors = []
        for v in vals:
            num = rng.randrange(1, 30)
            while num % p == 0:
                num = rng.randrange(1, 30)
            factors.append([C(mode, -F(num) * F(p) ** v), C(mode, 1)])
        coeffs = expand(factors)
        cut = F(sum(vals), 2)
        if cut in newton_polygon(coeffs, 0):
            continue
        res = split_by_slope(coeffs, 0, cut, t_prec=6)
        assert sum(m for _, m in newton_polygon(res.high, 0).entries
                   ) == sum(1 for v in vals if v > cut)
        base = min(gauss_val(c, 0) for c in coeffs)
        assert res.bound >= base + 6


def test_approx_inverse_certificate():
    f = LaurentPoly(P3, {-1: 1, 1: 3})
    g = approx_inverse(f, F(1, 2), 12)
    resid = LaurentPoly.one(P3) - f * g
    assert gauss_val(resid, F(1, 2)) >= 12


def test_approx_inverse_needs_dominant_monomial():
    f = LaurentPoly(P2, {0: 1, 1: 1})  # both terms have w_0 = 0
    with pytest.raises(LiftingError):
        approx_inverse(f, 0, 6)
