import math

import mpmath as mp
import numpy as np
import pytest

from heisenkernel import DomainError, GroupSignature, RadialPoint, RegimeError, signature_preset, solve_geodesic
from heisenkernel.geometry import mu, mu_complement
from heisenkernel.phase import (H_reduced, Phi, abs_h1_sq_closed, amplitude, g_family, h1, phase_frame, phi,
                                phi_pp0, re_h2_closed, h2, s_reduced)

PI = math.pi
mp.mp.dps = 30


def point_at_eps(sig, eps, r):
    """Interior point whose critical angle is pi - eps."""
    th = PI - eps
    t = sum(a * mu(a * th) * x * x for a, x in zip(sig.a[:-1], r[:-1])) + mu_complement(eps) * r[-1] ** 2
    return RadialPoint(tuple(r), t)


# --- amplitude and phase -------------------------------------------------------

def test_amplitude_examples():
    h11 = signature_preset("h11")
    assert amplitude(h11, 0.0) == 1.0
    assert amplitude(h11, 1j).real == pytest.approx(1.0 / math.sin(1.0), rel=1e-14)
    assert amplitude(h11, 1j).real == pytest.approx(1.18839510, abs=1e-8)
    with pytest.raises(DomainError):
        amplitude(h11, 1.0 + 3.2j)


def test_h1_h2_closed_forms(rng):
    xi = rng.uniform(-5, 5, 200)
    eta = rng.uniform(-3.1, 3.1, 200)
    w = xi + 1j * eta
    np.testing.assert_allclose(np.abs(h1(w)) ** 2, abs_h1_sq_closed(xi, eta), rtol=1e-13)
    np.testing.assert_allclose(h2(w).real, re_h2_closed(xi, eta), rtol=1e-12, atol=1e-14)
    half = np.abs(eta) <= PI / 2
    assert np.all(re_h2_closed(xi[half], eta[half]) >= 0)


def test_re_h2_sign_change_beyond_half_strip():
    # on the imaginary axis Re h2(i eta) = eta cot eta < 0 for pi/2 < eta < pi
    assert re_h2_closed(0.0, 2.0) == pytest.approx(2.0 / math.tan(2.0), rel=1e-14)
    assert re_h2_closed(0.0, 2.0) < 0


def test_h1_against_mpmath():
    for w in (0.3 + 2.9j, 12.0 - 0.5j, 1e-6 + 1e-6j):
        ref = complex(mp.mpc(w) / mp.sinh(mp.mpc(w)))
        assert abs(h1(w) - ref) <= 1e-14 * abs(ref)


def test_phi_origin_vanishes(sig):
    p = RadialPoint((0.0,) * sig.l, 0.0)
    assert phi(sig, p, 0.7 + 0.3j) == 0


def test_phi_at_critical_height():
    sig = signature_preset("h11")
    p = RadialPoint((1.0,), mu(1.0))
    geo = solve_geodesic(sig, p)
    assert geo.theta == pytest.approx(1.0, abs=1e-14)
    assert phi(sig, p, 1j).real == pytest.approx(-geo.dsq / 4, rel=1e-13)
    assert abs(phi(sig, p, 1j).imag) < 1e-15


def phi_mp(sig, p, lam):
    acc = mp.mpc(0, 1) * lam * p.t / 4
    for rj, aj in zip(p.r, sig.a):
        w = aj * lam
        acc -= mp.mpf(rj) ** 2 / 4 * (w * mp.coth(w))
    return acc


@pytest.mark.parametrize("name", ["h11", "h5", "h7"])
def test_phi_stationary_at_critical_height(name, rng):
    sig = signature_preset(name)
    for _ in range(10):
        p = RadialPoint(tuple(rng.uniform(0.2, 2.0, sig.l)), float(rng.uniform(0.1, 8.0)))
        geo = solve_geodesic(sig, p)
        deriv = mp.diff(lambda x: phi_mp(sig, p, x + mp.mpc(0, geo.theta)), 0)
        assert abs(complex(deriv)) < 1e-9 * max(1.0, p.r_total_sq)
        assert complex(phi_mp(sig, p, mp.mpc(0, geo.theta))) == pytest.approx(phi(sig, p, 1j * geo.theta),
                                                                               rel=1e-13)


# --- shifted phase -------------------------------------------------------------

def test_shifted_phase_parity_and_sign(rng):
    sig = signature_preset("h5")
    p = RadialPoint((0.7, 1.1), 1.9)
    geo = solve_geodesic(sig, p)
    assert Phi(sig, p, geo, 0.0) == 0
    s = rng.uniform(0.01, 5.0, 50)
    plus, minus = Phi(sig, p, geo, s), Phi(sig, p, geo, -s)
    np.testing.assert_allclose(plus.real, minus.real, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(plus.imag, -minus.imag, rtol=1e-12, atol=1e-15)
    assert Phi(sig, p, geo, 0.5).real < Phi(sig, p, geo, 0.25).real < 0
    with pytest.raises(DomainError):
        Phi(sig, RadialPoint((1.0, 0.0), 100.0), solve_geodesic(sig, RadialPoint((1.0, 0.0), 100.0)), 0.1)


def test_quadratic_decay_constant_positive(rng):
    sig = signature_preset("h7")
    s = np.linspace(0.05, 3.0, 60)
    worst = math.inf
    for _ in range(100):
        r = rng.uniform(0.1, 3.0, 2)
        p = RadialPoint(tuple(r), float(rng.uniform(0.0, 30.0)))
        geo = solve_geodesic(sig, p)
        if not geo.interior:
            continue
        val = -Phi(sig, p, geo, s).real / (p.r_total_sq * s * s)
        worst = min(worst, float(val.min()))
    assert worst > 0


def test_phi_pp0_small_theta_limit():
    sig = signature_preset("h11")
    p = RadialPoint((1.0,), mu(1e-4))
    geo = solve_geodesic(sig, p)
    assert phi_pp0(sig, p, geo) == pytest.approx(-1.0 / 6.0, rel=1e-7)
    p5 = RadialPoint((1.0, 2.0), 0.0)
    assert phi_pp0(signature_preset("h5"), p5, solve_geodesic(signature_preset("h5"), p5)) == pytest.approx(
        -(0.25 * 1 + 4) / 6, rel=1e-14)


def test_phi_pp0_negative(sig, rng):
    for _ in range(20):
        p = RadialPoint(tuple(rng.uniform(0.1, 3, sig.l)), float(rng.uniform(0.01, 20)))
        geo = solve_geodesic(sig, p)
        if geo.interior:
            assert phi_pp0(sig, p, geo) < 0


def test_phi_pp0_against_complex_step():
    sig = signature_preset("h5")
    p = RadialPoint((0.8, 1.3), 2.5)
    geo = solve_geodesic(sig, p)
    f = lambda s: mp.mpc(phi(sig, p, complex(s) + 1j * geo.theta))
    fd = (f(1e-4) - 2 * f(0) + f(-1e-4)) / 1e-8
    assert phi_pp0(sig, p, geo) == pytest.approx(float(mp.re(fd)), rel=1e-6)


# --- G family --------------------------------------------------------------------

def G_mp(sig, r, x):
    x = mp.mpf(x)
    G1 = lambda y: y * mp.cot(y)
    G2 = lambda y: mp.pi * (mp.cot(y) - 1 / y)
    g3 = -sum(mp.mpf(rj) ** 2 / 4 * G1(aj * (mp.pi - x)) for aj, rj in zip(sig.a[:-1], r[:-1]))
    return g3 + mp.mpf(r[-1]) ** 2 / 4 * (G2(x) - G1(x))


def test_g_family_derivatives_against_mpmath():
    sig = GroupSignature((2, 1), (1.0 / 3.0, 1.0))
    r = (0.9, 1.7)
    p = RadialPoint(r, 3.0)
    xi = 0.05
    gf = g_family(sig, p, xi)
    for k, val in enumerate((gf.G, gf.dG, gf.d2G, gf.d3G)):
        ref = float(mp.diff(lambda x: G_mp(sig, r, x), xi, k))
        assert val.real == pytest.approx(ref, rel=1e-11)
        assert abs(val.imag) < 1e-13


def test_g_second_derivatives_at_zero():
    # with z_1 = 0 and r_l = 2, G = G2 - G1, so G'' (0) = G2''(0) - G1''(0) = 0 + 2/3
    sig = signature_preset("h5")
    gf = g_family(sig, RadialPoint((0.0, 2.0), 1.0), 0.0)
    assert gf.d2G.real == pytest.approx(2.0 / 3.0, rel=1e-14)


def test_g1_derivative_is_minus_mu(rng):
    # for z = (0, 2) the first derivative is G2' - G1' = pi(1/xi^2 - 1/sin^2 xi) + mu(xi)
    sig = signature_preset("h5")
    p = RadialPoint((0.0, 2.0), 1.0)
    for xi in rng.uniform(0.01, 0.3, 10):
        expect = PI * (1 / xi ** 2 - 1 / math.sin(xi) ** 2) + mu(xi)
        assert g_family(sig, p, xi).dG.real == pytest.approx(expect, rel=1e-12)


def test_v1p_identity():
    sig = GroupSignature((2, 1), (1.0 / 3.0, 1.0))
    p = RadialPoint((0.9, 1.7), 3.0)
    xi = 0.05
    lhs = phi(sig, p, 1j * (PI - xi))
    rhs = -p.t / 4 * (PI - xi) + g_family(sig, p, xi).G + PI / (4 * xi) * p.r[-1] ** 2
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_g_family_outside_disc():
    with pytest.raises(DomainError):
        g_family(signature_preset("h5"), RadialPoint((1.0, 1.0), 1.0), 1.1)


# --- frame -------------------------------------------------------------------------

def test_d1_example():
    sig = signature_preset("h5")
    p = point_at_eps(sig, 0.01, (1.0, 2.0))
    fr = phase_frame(sig, p, solve_geodesic(sig, p))
    assert fr.D1 == pytest.approx(100 * PI, rel=1e-9)


def test_d1_plus_d2_identity(rng):
    sig = signature_preset("h7")
    for eps in (1e-4, 1e-3, 1e-2, 0.03):
        for _ in range(3):
            p = point_at_eps(sig, eps, tuple(rng.uniform(0.2, 3.0, 2)))
            geo = solve_geodesic(sig, p)
            fr = phase_frame(sig, p, geo)
            assert fr.D1 + fr.D2 == pytest.approx(-0.5 * geo.epsilon ** 2 * fr.phi_pp0, rel=1e-9)
            assert fr.D2 > 0
            assert abs(fr.Jstar) <= 10 * p.r_total_sq * geo.epsilon ** 3


def test_frame_without_d_fields():
    sig = signature_preset("h11")
    p = RadialPoint((1.0,), 1.0)
    fr = phase_frame(sig, p, solve_geodesic(sig, p))
    assert not fr.has_d
    with pytest.raises(RegimeError):
        fr.require_d()


def test_g_family_real_on_real_axis(rng):
    sig = signature_preset("h7")
    p = RadialPoint((1.0, 0.5), 4.0)
    for xi in rng.uniform(0, sig.eps0, 20):
        gf = g_family(sig, p, xi)
        assert max(abs(v.imag) for v in (gf.G, gf.dG, gf.d2G, gf.d3G)) < 1e-13


# --- reduced amplitude -----------------------------------------------------------------

def test_s_at_zero():
    sig = GroupSignature((2, 1), (1.0 / 3.0, 1.0))
    a = PI / 3
    assert s_reduced(sig, 0.0).real == pytest.approx((a / math.sin(a)) ** 2, rel=1e-14)
    with pytest.raises(DomainError):
        s_reduced(signature_preset("h7"), 0.0)


def test_s_factorization():
    sig = signature_preset("h5")
    eps, lam = 0.05, 0.3
    lhs = amplitude(sig, lam + 1j * (PI - eps))
    rhs = PI / (eps + 1j * lam) * H_reduced(sig, eps, lam)
    assert abs(lhs - rhs) < 1e-11 * abs(lhs)


def test_s_real_and_at_least_half():
    for sig in (signature_preset("h5"), signature_preset("h11"), GroupSignature((2, 1), (1.0 / 3.0, 1.0))):
        v = s_reduced(sig, np.linspace(0, 1 / 16, 50))
        assert np.all(np.abs(v.imag) < 1e-14) and np.all(v.real >= 0.5)


def test_pole_structure_bounded():
    sig = signature_preset("h5")
    vals = [eps * abs(amplitude(sig, 1j * (PI - eps))) for eps in (1e-2, 1e-4, 1e-6)]
    assert max(vals) < 10 and min(vals) > 0.1
