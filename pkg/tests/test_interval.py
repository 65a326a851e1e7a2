import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certibif.errors import DomainError
from certibif.interval import (IMatrix, Interval, IVector, float_matmat,
                               float_matvec, norm_inf, product_norm, up_dot,
                               up_sum)

ULP = 2.0 ** -52


def test_add_exact_endpoints():
    r = Interval(1, 2) + Interval(3, 4)
    assert (r.lo, r.hi) == (4.0, 6.0)


def test_sub_contains_and_tight():
    r = Interval(1, 2) - Interval(3, 4)
    assert (r.lo, r.hi) == (-3.0, -1.0)


def test_mul_symmetric_unit():
    r = Interval(-1, 1) * Interval(-1, 1)
    assert r.lo <= -1.0 <= r.hi and r.hi >= 1.0
    assert abs(r.lo + 1.0) <= 4 * ULP and abs(r.hi - 1.0) <= 4 * ULP


def test_div_by_zero_interval_raises():
    with pytest.raises(DomainError):
        Interval(1, 1) / Interval(0, 1)


def test_div_contains():
    r = Interval(1, 2) / Interval(2, 4)
    assert r.lo <= 0.25 and r.hi >= 1.0


def test_exp_at_zero_is_exact():
    r = Interval(0.0).exp()
    assert 1.0 in r and r.width == 0.0


def test_exp_at_one_contains_e():
    assert math.e in Interval(1.0).exp()


def test_exp_monotone_guard():
    r = Interval(-0.5, 1.25).exp()
    assert math.exp(-0.5) in r and math.exp(1.25) in r


def test_exp_overflow_saturates():
    r = Interval(0.0, 1e4).exp()
    assert r.hi == math.inf and r.lo >= 0.0


def test_pow_contains_high_precision_value():
    # mpmath oracle: mp.power(2, mp.mpf(2.324)) at 40 digits
    oracle = 5.007185834615976961131869402330871643495
    r = Interval(2.0).pow(2.324)
    assert r.lo <= oracle <= r.hi
    assert r.width <= 8 * ULP * oracle


def test_pow_negative_base_fractional_raises():
    with pytest.raises(DomainError):
        Interval(-1.0, 1.0).pow(2.324)


def test_pow_zero_exponent():
    assert Interval(2.0, 3.0).pow(0).lo == 1.0


def test_sqrt_and_sqr():
    r = Interval(2.0).sqrt()
    assert r.lo <= math.sqrt(2) <= r.hi
    s = Interval(-2.0, 3.0).sqr()
    assert s.lo == 0.0 and s.hi >= 9.0


def test_norm_inf_vector_point():
    v = IVector.point([1.0, -2.0])
    n = norm_inf(v)
    assert n.lo == 2.0 == n.hi


def test_norm_inf_matrix_rowsum():
    m = IMatrix.point(np.ones((2, 2)))
    n = norm_inf(m)
    assert n.lo <= 2.0 <= n.hi and n.hi <= 2.0 * (1 + 1e-14)


def test_norm_inf_symmetric_interval():
    v = IVector(np.array([-1.0]), np.array([1.0]))
    n = norm_inf(v)
    assert n.hi >= 1.0 and n.lo <= 1.0


def test_product_norm_examples():
    assert product_norm(Interval(0.5), IVector.point([1.0, -2.0])).hi == 2.0
    assert product_norm(Interval(3.0), IVector.point([0.0, 0.0])).hi == 3.0
    assert product_norm(Interval(0.0), IVector.point([0.0])).hi == 0.0


def test_overflow_saturation_mul():
    big = Interval(0.0, 1.7e308)
    r = big * Interval(0.0, 1e10)
    assert r.hi == math.inf and 0.0 in r


# ---------------------------------------------------------------------------
# containment properties
# ---------------------------------------------------------------------------

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


def _mk(lo, w):
    return Interval(lo, lo + abs(w))


@given(finite, st.floats(0, 10), finite, st.floats(0, 10),
       st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=300, deadline=None)
def test_containment_arith(a, wa, b, wb, sa, sb):
    ia, ib = _mk(a, wa), _mk(b, wb)
    x = ia.lo + sa * (ia.hi - ia.lo)
    y = ib.lo + sb * (ib.hi - ib.lo)
    assert x + y in ia + ib
    assert x - y in ia - ib
    assert x * y in ia * ib
    if not ib.contains_zero():
        assert x / y in ia / ib


@given(finite, st.floats(0, 10), finite, st.floats(0, 10),
       st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_inclusion_monotonicity(a, wa, b, wb, shrink_a, shrink_b):
    A2 = _mk(a, wa)
    B2 = _mk(b, wb)
    A1 = Interval(A2.lo + shrink_a * 0.4 * A2.width,
                  A2.hi - shrink_a * 0.4 * A2.width)
    B1 = Interval(B2.lo + shrink_b * 0.4 * B2.width,
                  B2.hi - shrink_b * 0.4 * B2.width)
    assert (A2 + B2).contains_interval(A1 + B1)
    assert (A2 - B2).contains_interval(A1 - B1)
    assert (A2 * B2).contains_interval(A1 * B1)


@given(st.floats(-700, 700), st.floats(0, 5), st.floats(0, 1))
@settings(max_examples=200, deadline=None)
def test_containment_exp(a, w, s):
    ia = _mk(a, w)
    x = ia.lo + s * (ia.hi - ia.lo)
    assert math.exp(x) in ia.exp()


def test_twosum_keeps_representable_sums_exact():
    r = Interval(0.25, 0.5) + Interval(0.125, 0.125)
    assert (r.lo, r.hi) == (0.375, 0.625)


def test_add_outward_when_inexact():
    r = Interval(0.1) + Interval(0.2)
    exact = Fraction(0.1) + Fraction(0.2)
    assert Fraction(r.lo) <= exact <= Fraction(r.hi)


# ---------------------------------------------------------------------------
# vector / matrix kernels
# ---------------------------------------------------------------------------


def test_matvec_contains_float_product():
    rng = np.random.default_rng(7)
    A = rng.normal(size=(8, 8))
    x = rng.normal(size=8)
    Ai = IMatrix(A - 1e-12, A + 1e-12)
    xi = IVector.around(x, 1e-12)
    out = Ai.matvec(xi)
    assert out.contains_point(A @ x)


def test_matmat_contains_float_product():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(6, 6))
    B = rng.normal(size=(6, 6))
    C = IMatrix.point(A).matmat(IMatrix.point(B))
    exact = A @ B
    assert np.all(C.lo <= exact + 1e-12) and np.all(C.hi >= exact - 1e-12)
    # rigorous containment of the exact real product via Fractions on a few entries
    for i in (0, 3):
        for j in (1, 5):
            s = sum(Fraction(A[i, k]) * Fraction(B[k, j]) for k in range(6))
            assert Fraction(C.lo[i, j]) <= s <= Fraction(C.hi[i, j])


def test_float_matvec_and_matmat_contain_exact():
    rng = np.random.default_rng(9)
    B = rng.normal(size=(5, 5))
    A = rng.normal(size=(5, 5))
    x = rng.normal(size=5)
    out_v = float_matvec(B, IVector.point(x))
    out_m = float_matmat(B, IMatrix.point(A))
    for i in range(5):
        sv = sum(Fraction(B[i, k]) * Fraction(x[k]) for k in range(5))
        assert Fraction(out_v.lo[i]) <= sv <= Fraction(out_v.hi[i])
        sm = sum(Fraction(B[i, k]) * Fraction(A[k, 2]) for k in range(5))
        assert Fraction(out_m.lo[i, 2]) <= sm <= Fraction(out_m.hi[i, 2])


def test_up_helpers_dominate():
    rng = np.random.default_rng(10)
    a = np.abs(rng.normal(size=300))
    assert up_sum(a) >= float(sum(Fraction(v) for v in a))
    M = np.abs(rng.normal(size=(20, 30)))
    T = np.abs(rng.normal(size=(30, 4)))
    got = up_dot(M, T)
    i, j = 7, 2
    exact = sum(Fraction(M[i, k]) * Fraction(T[k, j]) for k in range(30))
    assert Fraction(got[i, j]) >= exact


def test_scale_and_widened():
    v = IVector.point([1.0, -1.0]).scale(Interval(2.0, 3.0))
    assert v.contains_point(np.array([2.5, -2.5]))
    w = IVector.point([0.0]).widened(0.5)
    assert w.lo[0] <= -0.5 and w.hi[0] >= 0.5


def test_containment_under_concurrent_use():
    """The rounding mechanism is nextafter-based and stateless, so parallel
    threads must never observe a containment violation."""
    import concurrent.futures
    import threading

    failures = []

    def worker(seed):
        rng = np.random.default_rng(seed)
        for _ in range(4000):
            a, b = rng.uniform(-50, 50, 2)
            wa, wb = rng.uniform(0, 5, 2)
            ia, ib = Interval(a, a + wa), Interval(b, b + wb)
            x = a + rng.uniform(0, 1) * wa
            y = b + rng.uniform(0, 1) * wb
            if x + y not in ia + ib or x * y not in ia * ib:
                failures.append((a, b))
            if math.exp(min(x, 200.0)) not in Interval(min(x, 200.0)).exp():
                failures.append(("exp", x))

    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(worker, range(8)))
    assert not failures
