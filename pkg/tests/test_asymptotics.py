import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from scipy.optimize import brentq

from heisenkernel import (DomainError, RadialPoint, RegimeError, RegimeTag, Thresholds, classify,
                          cutlocus_leading, kernel, leading, signature_preset, small_time, solve_geodesic,
                          thm1_leading, thm2_leading, thm3_leading, dilate)
from heisenkernel.asymptotics import RegimeGapWarning
from heisenkernel.geometry import mu, mu_complement
from heisenkernel.phase import amplitude, phase_frame
from heisenkernel.verification import point_on_ray, thm2_witness

PI = math.pi


def dev(sig, p, log_lead):
    return abs(math.expm1(kernel(sig, p, tol=1e-12).log_value - log_lead))


def point_eps_d(sig, eps, rl, d):
    """Point with critical angle pi - eps, last modulus rl and distance d."""
    th = PI - eps

    def make(r1):
        return RadialPoint((r1, rl), 0.5 * mu(0.5 * th) * r1 * r1 + mu_complement(eps) * rl * rl)

    r1 = brentq(lambda r1: solve_geodesic(sig, make(r1)).d - d, 1e-9, 500)
    return make(r1)


# --- classification ------------------------------------------------------------

def test_classify_examples():
    h11, h5 = signature_preset("h11"), signature_preset("h5")
    p = point_on_ray(h11, 0.5, 20.0)
    geo = solve_geodesic(h11, p)
    assert classify(geo, phase_frame(h11, p, geo)).tag is RegimeTag.BOUNDED_THETA

    eps = 1e-3
    p = RadialPoint((1.0, 10.0), 0.5 * mu(0.5 * (PI - eps)) + 100 * mu_complement(eps))
    geo = solve_geodesic(h5, p)
    fr = phase_frame(h5, p, geo)
    assert fr.D1 == pytest.approx(PI / 4 * 1e5, rel=1e-9)
    assert classify(geo, fr).tag is RegimeTag.SMALL_EPS_LARGE_D

    p = RadialPoint((1.0, 0.0), 100.0)
    geo = solve_geodesic(h5, p)
    fr = phase_frame(h5, p, geo)
    assert fr.D1 == 0.0
    assert classify(geo, fr).tag is RegimeTag.SMALL_EPS_BOUNDED_D


def test_gap_warning_and_flags():
    h5 = signature_preset("h5")
    p = thm2_witness(100.0)
    geo = solve_geodesic(h5, p)
    with pytest.warns(RegimeGapWarning):
        reg = classify(geo, phase_frame(h5, p, geo))
    assert reg.tag is RegimeTag.SMALL_EPS_LARGE_D and reg.gap and reg.flagged
    p = point_on_ray(signature_preset("h11"), 2.9, 10.0)
    geo = solve_geodesic(signature_preset("h11"), p)
    reg = classify(geo, phase_frame(signature_preset("h11"), p, geo))
    assert reg.tag is RegimeTag.BOUNDED_THETA and reg.theta_extended


def test_classify_needs_unit_distance():
    sig = signature_preset("h11")
    p = RadialPoint((0.5,), 0.0)
    geo = solve_geodesic(sig, p)
    with pytest.raises(DomainError):
        classify(geo, phase_frame(sig, p, geo))


def test_thresholds_validation():
    with pytest.raises(DomainError):
        Thresholds(theta0=1.0)
    with pytest.raises(DomainError):
        Thresholds(theta0=PI)
    with pytest.raises(DomainError):
        Thresholds(gamma0=0.5)


# --- first theorem ------------------------------------------------------------------

def test_thm1_decay_rate():
    sig = signature_preset("h11")
    devs = [dev(sig, point_on_ray(sig, 1.0, d), thm1_leading(sig, point_on_ray(sig, 1.0, d), log=True))
            for d in (10.0, 20.0, 40.0)]
    rates = [devs[i] / devs[i + 1] for i in range(2)]
    assert all(3.0 <= r <= 5.0 for r in rates)
    # empirical exponent within 30% of 2
    assert all(abs(math.log2(r) - 2) <= 0.6 for r in rates)


def test_thm1_small_theta_limit():
    sig = signature_preset("h11")
    R = 3.0
    p = RadialPoint((R,), 0.0)
    expect = math.exp(-R * R / 4) * (R * R / 12) ** -0.5 / (4 * (4 * PI) ** 1.5)
    assert thm1_leading(sig, p) == pytest.approx(expect, rel=1e-13)


def test_thm1_product_is_amplitude():
    from heisenkernel.asymptotics import _log_amp

    for name in ("h11", "h5", "h7"):
        sig = signature_preset(name)
        p = point_on_ray(sig, 1.7, 3.0)
        geo = solve_geodesic(sig, p)
        assert math.exp(_log_amp(sig, p, geo)) == pytest.approx(amplitude(sig, 1j * geo.theta).real, rel=1e-13)


def test_thm1_strict_regime():
    sig = signature_preset("h11")
    with pytest.raises(RegimeError):
        thm1_leading(sig, point_on_ray(sig, 3.0, 10.0))
    with pytest.raises(RegimeError):
        thm1_leading(signature_preset("h5"), RadialPoint((1.0, 0.0), 50.0))


# --- second theorem ----------------------------------------------------------------------

def test_thm2_forms_and_ratio():
    sig = signature_preset("h5")
    eps = 1e-3
    scaled = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeGapWarning)
        for D in (1e2, 1e3, 1e4):
            p = thm2_witness(D, eps)
            l1 = thm2_leading(sig, p, log=True)
            l2 = thm2_leading(sig, p, form="second", log=True)
            assert abs(math.expm1(l2 - l1)) <= 5 * eps
            scaled.append(dev(sig, p, l1) * D)
    # deviation ~ C / (D1 + D2): the product stays put
    assert max(scaled) / min(scaled) < 1.3
    assert max(scaled) < 5


def test_thm2_matches_thm1_on_overlap():
    for name in ("h5", "h7"):
        sig = signature_preset(name)
        p = point_on_ray(sig, PI - 0.06, 30.0, [0.7, 0.3])
        a = thm1_leading(sig, p, strict=False, log=True)
        b = thm2_leading(sig, p, strict=False, log=True)
        assert abs(math.expm1(a - b)) <= 0.1


def test_thm2_requires_d_fields():
    sig = signature_preset("h5")
    with pytest.raises(RegimeError):
        thm2_leading(sig, point_on_ray(sig, 1.0, 10.0))


# --- third theorem and the cut locus ----------------------------------------------------

def test_cutlocus_decay_h7():
    sig = signature_preset("h7")
    devs = {d: dev(sig, RadialPoint((1.0, 0.0), d * d / PI),
                   cutlocus_leading(sig, RadialPoint((1.0, 0.0), d * d / PI), log=True)) for d in (10.0, 20.0, 30.0, 40.0)}
    C = max(v * math.sqrt(d) for d, v in devs.items())
    assert C < 1.0
    # the observed exponent beats the d^{-1/2} bound
    assert math.log(devs[10.0] / devs[40.0]) / math.log(4.0) >= 0.5


def test_cutlocus_equals_thm3_eps0_path(rng):
    for name in ("h5", "h7"):
        sig = signature_preset(name)
        for _ in range(5):
            r1 = float(rng.uniform(0.2, 3.0))
            bound = 0.5 * mu(0.5 * PI) * r1 * r1
            p = RadialPoint((r1, 0.0), bound + float(rng.uniform(0.0, 60.0)))
            a = cutlocus_leading(sig, p, log=True)
            b = thm3_leading(sig, p, log=True)
            assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


def test_cutlocus_k1_gaussian_tail():
    sig = signature_preset("h5")
    r1 = 1.3
    T = 7.0
    p = RadialPoint((r1, 0.0), 0.5 * mu(0.5 * PI) * r1 * r1 + T)
    from heisenkernel.phase import g_family

    g = float(g_family(sig, p, 0.0).d2G.real)
    geo = solve_geodesic(sig, p)
    c = T / 4
    tail = math.sqrt(PI * g / 2) * math.erfc(-c / math.sqrt(2 * g))  # int_0^inf exp(-(rho-c)^2/(2g))
    prod = 0.5 * PI / math.sin(0.5 * PI)
    expect = (PI ** (1 - 2 - 0.5) / 2 ** 7 * (g / 2) ** -0.5 * math.exp(-geo.dsq / 4) * prod * tail)
    assert cutlocus_leading(sig, p) == pytest.approx(expect, rel=1e-10)


def test_cutlocus_domain():
    sig = signature_preset("h5")
    with pytest.raises(DomainError):
        cutlocus_leading(sig, RadialPoint((0.0, 0.0), 5.0))
    with pytest.raises(DomainError):
        cutlocus_leading(sig, RadialPoint((1.0, 0.5), 5.0))
    with pytest.raises(DomainError):
        cutlocus_leading(sig, RadialPoint((1.0, 0.0), 0.1))


def test_bessel_limit_of_thm3():
    for name in ("h5", "h7"):
        sig = signature_preset(name)
        a = thm3_leading(sig, RadialPoint((1.0, 0.0), 5.0), log=True)
        b = thm3_leading(sig, RadialPoint((1.0, 1e-6), 5.0), form="reparam", log=True)
        assert abs(math.expm1(a - b)) <= 1e-6


def test_bessel_factor_small_r_limit():
    # (4 rho / (pi r^2))^{(k-1)/2} I_{k-1}(sqrt(pi) r sqrt(rho)) -> rho^{k-1} / Gamma(k)
    from heisenkernel.bessel_core import bessel_kernel_log

    r = 1e-6
    x = PI * r * r / 4
    for k in (1, 2, 3):
        for rho in (0.3, 2.0, 9.0):
            v = math.exp(float(bessel_kernel_log(float(k), x, np.array([rho]))[0]))
            assert v == pytest.approx(rho ** (k - 1) / math.gamma(k), rel=1e-6)


def test_thm3_forms_agree():
    sig = signature_preset("h7")
    p = point_eps_d(sig, 0.05, 0.3, 20.0)
    a = thm3_leading(sig, p, form="bessel", log=True, strict=False)
    b = thm3_leading(sig, p, form="reparam", log=True, strict=False)
    assert a == pytest.approx(b, rel=1e-10)
    with pytest.raises(DomainError):
        thm3_leading(sig, RadialPoint((1.0, 0.0), 5.0), form="bessel")


def test_thm2_thm3_overlap():
    for name in ("h5", "h7"):
        sig = signature_preset(name)
        eps = 0.05
        rl = brentq(lambda rl: (lambda p: (lambda f: f.D1 + f.D2 - 4.0)(
            phase_frame(sig, p, solve_geodesic(sig, p))))(point_eps_d(sig, eps, rl, 40.0)), 1e-6, 0.6)
        p = point_eps_d(sig, eps, rl, 40.0)
        a = thm2_leading(sig, p, strict=False, log=True)
        b = thm3_leading(sig, p, strict=False, log=True)
        assert abs(math.expm1(a - b)) <= 0.15


def test_t_axis_leading_term():
    for name in ("h11", "h5"):
        sig = signature_preset(name)
        p = RadialPoint((0.0,) * sig.l, 400.0 / PI)
        lv, reg = leading(sig, p, log=True)
        assert reg.tag is RegimeTag.SMALL_EPS_BOUNDED_D
        assert abs(math.expm1(kernel(sig, p).log_value - lv)) < 1e-8


def test_leading_positive_and_tagged(sig, rng):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeGapWarning)
        for _ in range(10):
            p = point_on_ray(sig, float(rng.uniform(0, 3.1)), float(rng.uniform(1.5, 15)))
            v, reg = leading(sig, p)
            assert v > 0 and isinstance(reg.tag, RegimeTag)


# --- small time ---------------------------------------------------------------------------

def test_small_time_c2_converges():
    sig = signature_preset("h11")
    p = RadialPoint((1.0,), mu(1.0))
    errs = []
    for h in (0.1, 0.05, 0.025, 0.01):
        st = small_time(sig, p, h)
        assert st.caseTag == "c2" and st.powerOfH == 1.5
        scaled = math.exp(kernel(sig, p, h).log_value + st.powerOfH * math.log(h) + st.dsq / (4 * h))
        errs.append(abs(scaled / st.coefficient - 1))
    assert errs[-1] < 0.05
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_small_time_c2_is_rescaled_thm1():
    sig = signature_preset("h7")
    p = point_on_ray(sig, 1.2, 1.0)
    h = 0.05
    st = small_time(sig, p, h)
    q = dilate(p, 1 / math.sqrt(h))
    ref = thm1_leading(sig, q, log=True) - (sig.n + 1) * math.log(h)
    assert st.log_value == pytest.approx(ref, rel=1e-12)


def test_small_time_c3_c4_powers():
    sig = signature_preset("h5")
    c4 = small_time(sig, RadialPoint((1.0, 0.0), 5.0), 0.1)
    assert c4.caseTag == "c4" and c4.powerOfH == 3
    c3 = small_time(sig, RadialPoint((1.0, 0.0), PI / 4), 0.1)
    assert c3.caseTag == "c3" and c3.powerOfH == c4.powerOfH
    assert c3.coefficient != pytest.approx(c4.coefficient, rel=1e-3)
    h7 = signature_preset("h7")
    assert small_time(h7, RadialPoint((1.0, 0.0), PI / 4), 0.1).powerOfH - small_time(
        h7, RadialPoint((1.0, 0.0), 5.0), 0.1).powerOfH == pytest.approx(-0.5)


def test_small_time_domain():
    sig = signature_preset("h11")
    with pytest.raises(DomainError):
        small_time(sig, RadialPoint((0.0,), 0.0), 0.1)
    with pytest.raises(DomainError):
        small_time(sig, RadialPoint((1.0,), 0.0), 2.0)
