import math

import numpy as np
import pytest

from heisenkernel import (Comparator, DomainError, FullPoint, RadialPoint, dilate, kernel, log_comparator,
                          reduce_point, sandwich_sweep, signature_preset)
from heisenkernel.bounds import (GRAD_CONSTANT, grad_log, grad_log_check, lm4_bound_check, standard_grid,
                                 xy_mixed_fd, xy_mixed_quadrature)
from heisenkernel.verification import point_on_ray

PI = math.pi


def test_heb1_origin():
    s = signature_preset("h11")
    assert log_comparator("HEB1", s, RadialPoint((0.0,), 0.0)) == 0.0
    assert log_comparator("HEB1", s, RadialPoint((0.0,), 0.0), h=4.0) == pytest.approx(-2 * math.log(4.0))


def test_heb1_closed_form():
    s = signature_preset("h11")
    p = point_on_ray(s, 1.0, 3.0)
    z = p.r_total
    expect = -0.25 * 9.0 - 0.5 * math.log1p(3.0 * z)
    assert log_comparator("HEB1", s, p) == pytest.approx(expect, rel=1e-12)


def test_pehk_matches_heb1_up_to_constants():
    s = signature_preset("h11")
    lr = [log_comparator("PEHK", s, p) - log_comparator("HEB1", s, p)
          for p in (point_on_ray(s, th, d) for th in (0.1, 1.0, 2.0, 2.9, 3.1) for d in (0.5, 2.0, 10.0, 40.0))]
    assert max(lr) - min(lr) < math.log(2.0)


def test_pehk_excludes_cut_locus():
    s = signature_preset("h5")
    with pytest.raises(DomainError):
        log_comparator("PEHK", s, RadialPoint((0.0, 0.0), 3.0))


def test_comparator_domains():
    with pytest.raises(DomainError):
        log_comparator("HEB1", signature_preset("h21"), RadialPoint((1.0,), 0.0))
    with pytest.raises(DomainError):
        log_comparator("IHE", signature_preset("h5"), RadialPoint((1.0, 1.0), 0.0))
    with pytest.raises(DomainError):
        log_comparator("HL1", signature_preset("h5"), RadialPoint((1.0, 1.0), 0.0), varpi=4.0)
    with pytest.raises(DomainError):
        log_comparator("HU1", signature_preset("h5"), RadialPoint((1.0, 1.0), 0.0), h=0.0)
    with pytest.raises(ValueError):
        log_comparator("nope", signature_preset("h5"), RadialPoint((1.0, 1.0), 0.0))


def test_ihe_form():
    s = signature_preset("h21")
    p = point_on_ray(s, 1.3, 5.0)
    z, h = p.r_total, 2.0
    from heisenkernel import solve_geodesic

    d = solve_geodesic(s, p).d
    expect = -3 * math.log(h) - d * d / (4 * h) + 2 * math.log1p(d / math.sqrt(h)) - 1.5 * math.log1p(z * d / h)
    assert log_comparator("IHE", s, p, h) == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("kind", ["HEB1", "HU1", "HL1"])
def test_comparator_scaling(kind):
    # both the kernel and these comparators pick up delta^{-Q} under (delta g, delta^2 h)
    s = signature_preset("h11")
    p = point_on_ray(s, 1.1, 2.0)
    q = dilate(p, 2.0)
    assert log_comparator(kind, s, q, 4.0) - log_comparator(kind, s, p, 1.0) == pytest.approx(-s.Q * math.log(2.0))
    lk = kernel(s, q, 4.0).log_value - kernel(s, p, 1.0).log_value
    assert lk == pytest.approx(-s.Q * math.log(2.0), abs=1e-9)


def test_standard_grid_shape():
    s = signature_preset("h5")
    g = standard_grid(s)
    assert len(g) == 200
    assert sum(1 for p, _ in g if p.r_total == 0.0) == 8


def test_sandwich_heb1():
    rep = sandwich_sweep("HEB1", signature_preset("h11"))
    assert not rep.skipped and len(rep.grid) == 200
    assert rep.ratioMax == pytest.approx(1 / 16, rel=1e-9)  # attained at the origin limit
    assert rep.spread < 50
    summ = rep.summary()
    assert summ["comparator"] == "HEB1" and summ["n"] == 200


def test_sandwich_pehk_skips_cut_locus():
    rep = sandwich_sweep("PEHK", signature_preset("h5"))
    assert len(rep.skipped) == 8
    assert all(math.isfinite(r["log_ratio"]) for r in rep.grid)


def test_lm4_values():
    assert lm4_bound_check(2, [0.0]).ratioMin == pytest.approx(PI ** 2 / 2, rel=1e-12)
    assert lm4_bound_check(4, np.linspace(0, 10, 41)).spread < 20
    rep = lm4_bound_check(3, [-2.0, 2.0])
    assert rep.grid[0]["value"] == pytest.approx(rep.grid[1]["value"], rel=1e-14)
    with pytest.raises(DomainError):
        lm4_bound_check(1, [0.0])


def test_grad_vanishes_on_t_axis():
    for name in ("h11", "h5"):
        s = signature_preset(name)
        v = np.zeros(2 * s.n + 1)
        v[-1] = 3.0
        assert np.all(np.abs(grad_log(s, FullPoint.from_vector(s, v))) < 1e-6)


def test_grad_radial_oracle():
    # along t = 0 on H(1,1) the x-derivative of ln p equals d/dx of the radial profile
    s = signature_preset("h11")
    x, dl = 1.5, 1e-4
    lp = lambda u: kernel(s, RadialPoint((u,), 0.0), tol=1e-12).log_value
    fd = (lp(x + dl) - lp(x - dl)) / (2 * dl)
    g = grad_log(s, FullPoint.from_vector(s, np.array([x, 0.0, 0.0])))
    assert g[0] == pytest.approx(fd, rel=1e-6)
    assert abs(g[1]) < 1e-6


def test_grad_check_respects_constant():
    s = signature_preset("h11")
    out = grad_log_check(s, FullPoint.from_vector(s, np.array([0.7, -0.4, 1.2])))
    assert out["ok"] and out["bound"] == pytest.approx(GRAD_CONSTANT * out["d"])
    with pytest.raises(DomainError):
        grad_log(s, FullPoint.from_vector(s, np.zeros(3)))


def test_grad_scaling():
    s = signature_preset("h11")
    v = np.array([0.6, 0.9, -0.8])
    g1 = grad_log(s, FullPoint.from_vector(s, v), 1.0)
    w = v * np.array([2.0, 2.0, 4.0])
    g4 = grad_log(s, FullPoint.from_vector(s, w), 4.0)
    np.testing.assert_allclose(g4, g1 / 2.0, rtol=1e-6)


@pytest.mark.parametrize("name,vec", [("h11", [0.4, -0.9, 0.7]), ("h11", [1.2, 0.3, -1.5]),
                                      ("h5", [0.5, -0.2, 0.8, 0.3, -0.6])])
def test_xy_quadrature_vs_fd(name, vec):
    s = signature_preset(name)
    fp = FullPoint.from_vector(s, np.array(vec))
    pv = kernel(s, reduce_point(fp), tol=1e-12).value
    assert abs(xy_mixed_quadrature(s, fp) - xy_mixed_fd(s, fp)) / pv < 1e-5
