"""Special-function conformance against independent oracles.

K is checked against adaptive quadrature of its defining integral, sn
against a truncated theta-function series, and Lambert W against its
defining residual and scipy's implementation.
"""

import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import lambertw as scipy_lambertw

from tunneltraj.errors import ConditioningWarning, DomainError, PoleProximity, RangeWarning
from tunneltraj.specfun import (EllipticContext, elliptic_K, jacobi_sn, lambert_w,
                                reciprocal_sn_series, small_m_expansions,
                                sn_with_derivative)


# --- oracles ------------------------------------------------------------------

def K_quadrature(m: complex) -> complex:
    """Defining integral int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt by quadrature."""
    import warnings as _w
    from scipy.integrate import IntegrationWarning

    def integrand(t, part):
        val = 1.0 / np.sqrt(1.0 - m * np.sin(t) ** 2 + 0j)
        return val.real if part == 0 else val.imag
    with _w.catch_warnings():
        _w.simplefilter("ignore", IntegrationWarning)
        re, _ = quad(integrand, 0.0, math.pi / 2, args=(0,), epsabs=1e-14, epsrel=1e-14)
        im, _ = quad(integrand, 0.0, math.pi / 2, args=(1,), epsabs=1e-14, epsrel=1e-14)
    return complex(re, im)


def sn_theta_series(u: complex, m: complex, terms: int = 40) -> complex:
    """sn via theta functions: sn = (th3/th2) th1(v)/th4(v), v = pi u/(2K)."""
    ctx = EllipticContext.from_parameter(m)
    q = ctx.q
    v = math.pi * u / (2.0 * ctx.K)
    th1 = sum(2.0 * (-1) ** n * q ** ((n + 0.5) ** 2) * cmath.sin((2 * n + 1) * v)
              for n in range(terms))
    th4 = 1.0 + sum(2.0 * (-1) ** n * q ** (n * n) * cmath.cos(2 * n * v)
                    for n in range(1, terms))
    th2_0 = sum(2.0 * q ** ((n + 0.5) ** 2) for n in range(terms))
    th3_0 = 1.0 + sum(2.0 * q ** (n * n) for n in range(1, terms))
    return (th3_0 / th2_0) * th1 / th4


# --- elliptic K ---------------------------------------------------------------

def test_K_at_zero():
    assert elliptic_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)


def test_K_half_vs_quadrature():
    oracle = K_quadrature(0.5)
    assert oracle == pytest.approx(1.8540746773013719, abs=1e-12)
    assert abs(elliptic_K(0.5) - oracle) <= 1e-12


def test_K_complex_vs_quadrature():
    m = 0.1 + 0.05j
    assert abs(elliptic_K(m) - K_quadrature(m)) <= 1e-11


@pytest.mark.parametrize("bad", [1.0, 1.5, 20.0])
def test_K_branch_cut_rejected(bad):
    with pytest.raises(DomainError):
        elliptic_K(bad)


def test_K_nonfinite_rejected():
    with pytest.raises(DomainError):
        elliptic_K(complex("nan"))
    with pytest.raises(DomainError):
        elliptic_K(complex("inf"))


def test_context_real_m():
    ctx = EllipticContext.from_parameter(0.3)
    assert ctx.K.imag == pytest.approx(0.0, abs=1e-15)
    assert ctx.Kprime.imag == pytest.approx(0.0, abs=1e-15)
    assert ctx.K.real > 0 and ctx.Kprime.real > 0
    assert abs(ctx.q - cmath.exp(-math.pi * ctx.Kprime / ctx.K)) <= 1e-13 * abs(ctx.q)


def test_context_nome_inside_disk():
    rng = np.random.default_rng(3)
    for _ in range(30):
        m = complex(rng.uniform(-0.8, 0.9), rng.uniform(-0.8, 0.8))
        if abs(m.imag) < 1e-3 and m.real >= 1.0:
            continue
        assert abs(EllipticContext.from_parameter(m).q) < 1.0


# --- small-m expansions -------------------------------------------------------

def test_small_m_q_limit():
    approx = small_m_expansions(1e-12)
    assert abs(approx.q) < 1e-12


def test_small_m_vs_full_nome():
    m = 0.01
    approx = small_m_expansions(m)
    full = EllipticContext.from_parameter(m)
    assert abs(approx.q - full.q) / abs(full.q) < 0.02


def test_small_m_K_form():
    approx = small_m_expansions(0.1)
    assert approx.K == pytest.approx((math.pi / 2) * 1.025, abs=1e-15)


def test_small_m_range_warning():
    with pytest.warns(RangeWarning):
        out = small_m_expansions(0.3)
    assert not out.in_range


# --- jacobi sn ----------------------------------------------------------------

def test_sn_reduces_to_sine():
    assert jacobi_sn(0.3, 0.0) == pytest.approx(math.sin(0.3), abs=1e-14)


def test_sn_quarter_period_identity():
    m = 0.3
    K = elliptic_K(m)
    assert jacobi_sn(K, m) == pytest.approx(1.0, abs=1e-12)


def test_sn_complex_vs_theta_oracle():
    u, m = 0.5 + 0.2j, 0.1 + 0.05j
    assert abs(jacobi_sn(u, m) - sn_theta_series(u, m)) <= 1e-10


def test_sn_random_vs_theta_oracle():
    rng = np.random.default_rng(11)
    for _ in range(25):
        m = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3))
        if abs(m) < 1e-3:
            continue
        u = complex(rng.uniform(-2.0, 2.0), rng.uniform(-0.7, 0.7))
        try:
            ours = jacobi_sn(u, m)
        except PoleProximity:
            continue
        assert abs(ours - sn_theta_series(u, m)) <= 1e-10


def test_sn_pole_signal():
    m = 0.2 + 0.1j
    ctx = EllipticContext.from_parameter(m)
    with pytest.raises(PoleProximity) as info:
        jacobi_sn(1j * ctx.Kprime + 1e-8, m)
    assert abs(info.value.pole - 1j * ctx.Kprime) < 1e-6
    assert info.value.laurent == pytest.approx(1.0 / cmath.sqrt(m), abs=1e-12)


def test_sn_differential_identity():
    # (d sn/du)^2 = (1 - sn^2)(1 - m sn^2), derivative by central differences;
    # the stencil's truncation error grows like (pole distance)^-4, so the
    # sample stays half a unit clear of poles where the oracle itself is valid
    rng = np.random.default_rng(12)
    h = 1e-5
    checked = 0
    while checked < 100:
        m = complex(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7))
        if abs(m) < 1e-3 or (abs(m.imag) < 0.05 and m.real > 0.9):
            continue
        ctx = EllipticContext.from_parameter(m)
        u = complex(rng.uniform(-2.5, 2.5), rng.uniform(-1.0, 1.0))
        from tunneltraj.specfun import nearest_sn_pole
        pole, _ = nearest_sn_pole(u, ctx)
        if abs(u - pole) < 0.5:
            continue
        try:
            s = jacobi_sn(u, m, ctx)
            ds = (jacobi_sn(u + h, m, ctx) - jacobi_sn(u - h, m, ctx)) / (2 * h)
        except PoleProximity:
            continue
        assert abs(ds * ds - (1 - s * s) * (1 - m * s * s)) <= 1e-8
        checked += 1


def test_sn_periodicity():
    rng = np.random.default_rng(13)
    checked = 0
    while checked < 40:
        m = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
        if abs(m) < 1e-3:
            continue
        ctx = EllipticContext.from_parameter(m)
        u = complex(rng.uniform(-2, 2), rng.uniform(-0.8, 0.8))
        try:
            a = jacobi_sn(u, m, ctx)
            b = jacobi_sn(u + 4 * ctx.K, m, ctx)
        except PoleProximity:
            continue
        assert abs(a - b) <= 1e-9
        checked += 1


def test_sn_derivative_is_analytic():
    u, m = 0.7 + 0.3j, 0.2 + 0.1j
    _, ds = sn_with_derivative(u, m)
    h = 1e-6
    fd = (jacobi_sn(u + h, m) - jacobi_sn(u - h, m)) / (2 * h)
    assert abs(ds - fd) <= 1e-9


# --- reciprocal series --------------------------------------------------------

def test_series_collapses_at_zero_nome():
    ctx = EllipticContext.from_parameter(0.0)
    out = reciprocal_sn_series(0.7, ctx, n_terms=4)
    assert out.value == pytest.approx(1.0 / math.sin(0.7), abs=1e-14)


def test_series_vs_direct_real_m():
    m = 0.05
    ctx = EllipticContext.from_parameter(m)
    u = 1.0
    U = math.pi * u / (2 * ctx.K)
    direct = 1.0 / jacobi_sn(u, m, ctx)
    out = reciprocal_sn_series(U, ctx, n_terms=8)
    assert abs(out.value - direct) <= 1e-10


def test_series_vs_direct_complex_m():
    m = 0.1j
    ctx = EllipticContext.from_parameter(m)
    U = 0.4 + 0.1j
    u = U * 2 * ctx.K / math.pi
    direct = 1.0 / jacobi_sn(u, m, ctx)
    out = reciprocal_sn_series(U, ctx, n_terms=12)
    assert abs(out.value - direct) <= 1e-9


def test_series_error_bound_is_honest():
    m = 0.08 + 0.03j
    ctx = EllipticContext.from_parameter(m)
    U = 0.9 + 0.2j
    u = U * 2 * ctx.K / math.pi
    direct = 1.0 / jacobi_sn(u, m, ctx)
    out = reciprocal_sn_series(U, ctx, n_terms=3)
    assert abs(out.value - direct) <= max(out.error_bound, 1e-12)


def test_series_pole_signal():
    ctx = EllipticContext.from_parameter(0.05)
    with pytest.raises(PoleProximity):
        reciprocal_sn_series(math.pi + 1e-9, ctx)


def test_series_oracle_equivalence_small_nome():
    # N = 12 matches the direct reciprocal to 1e-9 whenever |q| < 0.1
    rng = np.random.default_rng(14)
    checked = 0
    while checked < 30:
        m = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4))
        if abs(m) < 5e-3:
            continue
        ctx = EllipticContext.from_parameter(m)
        if abs(ctx.q) >= 0.1:
            continue
        U = complex(rng.uniform(0.3, 2.8), rng.uniform(-0.4, 0.4))
        if min(abs(U - k * math.pi) for k in (0, 1)) < 0.1:
            continue
        u = U * 2 * ctx.K / math.pi
        try:
            direct = 1.0 / jacobi_sn(u, m, ctx)
        except PoleProximity:
            continue
        out = reciprocal_sn_series(U, ctx, n_terms=12)
        assert abs(out.value - direct) <= 1e-9
        checked += 1


# --- Lambert W ----------------------------------------------------------------

def test_lambert_trivial_values():
    assert lambert_w(0, 0.0) == 0.0
    assert lambert_w(0, math.e) == pytest.approx(1.0, abs=1e-14)


def test_lambert_branch_point():
    with pytest.warns(ConditioningWarning):
        w = lambert_w(-1, -1.0 / math.e)
    assert w == pytest.approx(-1.0, abs=1e-12)


def test_lambert_zero_off_principal():
    with pytest.raises(DomainError):
        lambert_w(1, 0.0)


def test_lambert_residual_randoms():
    rng = np.random.default_rng(15)
    for _ in range(1000):
        n = int(rng.integers(-4, 5))
        z = complex(rng.uniform(-10, 10), rng.uniform(-10, 10))
        if abs(z) < 1e-6:
            continue
        w = lambert_w(n, z)
        assert abs(w * cmath.exp(w) - z) <= 1e-12 * abs(z)


def test_lambert_branch_ordering():
    z = 2.0 + 3.0j
    ws = [lambert_w(n, z) for n in range(-2, 3)]
    imags = [w.imag for w in ws]
    assert imags == sorted(imags)


def test_lambert_matches_scipy():
    rng = np.random.default_rng(16)
    for _ in range(100):
        n = int(rng.integers(-3, 4))
        z = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        if abs(z) < 1e-3 or abs(z + 1 / math.e) < 1e-2:
            continue
        ours = lambert_w(n, z)
        ref = complex(scipy_lambertw(z, k=n))
        assert abs(ours - ref) <= 1e-10 * max(1.0, abs(ref))
