r"""Regime classification and leading terms of the large-distance and
small-time asymptotics of the heat kernel at time one.

All leading terms are computed in log form (``log_*`` helpers) because at
``d = 40`` the kernel is already ``~e^{-400}``; the public functions return
``exp`` of the log unless ``log=True``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from ._gk import gk_integrate
from .bessel_core import VParams, bessel_kernel_log, log_plancherel_rhs
from .errors import DomainError, RegimeError
from .geometry import GeodesicData, cut_bound, solve_geodesic
from .group_model import GroupSignature, RadialPoint
from .phase import ContourIntegrand, Height, PhaseFrame, g_family, phase_frame

__all__ = [
    "RegimeTag",
    "Regime",
    "Thresholds",
    "classify",
    "thm1_leading",
    "thm2_leading",
    "thm3_leading",
    "cutlocus_leading",
    "small_time",
    "leading",
    "RegimeGapWarning",
]

PI = math.pi
LOG_4PI = math.log(4.0 * PI)


class RegimeGapWarning(UserWarning):
    """Point lies where no theorem's hypothesis holds verbatim."""


class RegimeTag(str, enum.Enum):
    BOUNDED_THETA = "BoundedTheta"
    SMALL_EPS_LARGE_D = "SmallEpsLargeD"
    SMALL_EPS_BOUNDED_D = "SmallEpsBoundedD"


@dataclass(frozen=True)
class Thresholds:
    """``theta0`` in ``[pi/2, pi)`` and ``gamma0 >= 1``; ``eps0`` comes from the signature."""

    theta0: float = 0.75 * PI
    gamma0: float = 4.0

    def __post_init__(self):
        if not (0.5 * PI <= self.theta0 < PI):
            raise DomainError(f"theta0 must lie in [pi/2, pi), got {self.theta0}")
        if not self.gamma0 >= 1.0:
            raise DomainError(f"gamma0 must be >= 1, got {self.gamma0}")


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    theta0: float
    eps0: float
    gamma0: float
    gap: bool = False
    theta_extended: bool = False

    @property
    def flagged(self) -> bool:
        return self.gap or self.theta_extended


def _prep(sig, p, geo=None, frame=None):
    p.check(sig)
    if p.is_origin:
        raise DomainError("asymptotics are undefined at the origin")
    if geo is None:
        geo = solve_geodesic(sig, p)
    if frame is None:
        frame = phase_frame(sig, p, geo)
    return geo, frame


def classify(geo: GeodesicData, frame: PhaseFrame, thresholds: Optional[Thresholds] = None) -> Regime:
    """Regime of a point with ``d^2 >= 1``.

    Priority: SmallEpsBoundedD (``D1 + D2 <= gamma0``), then SmallEpsLargeD,
    then BoundedTheta.  Points with ``eps <= eps0`` and
    ``gamma0 < D1 + D2 < eps0^{-3}`` are SmallEpsLargeD with ``gap=True``;
    points with ``theta0 < |theta| < pi - eps0`` are BoundedTheta with
    ``theta_extended=True`` (the first theorem holds for any ``theta0 < pi``,
    with a constant depending on it).
    """
    th = thresholds or Thresholds()
    if not geo.dsq >= 1.0 - 1e-12:
        raise DomainError(f"classification needs d^2 >= 1, got {geo.dsq}")
    eps0 = frame.eps0
    if frame.has_d:
        S = frame.D1 + frame.D2
        if S <= th.gamma0:
            return Regime(RegimeTag.SMALL_EPS_BOUNDED_D, th.theta0, eps0, th.gamma0)
        gap = S < eps0 ** -3
        if gap:
            warnings.warn(f"D1 + D2 = {S:.4g} lies in the gap ({th.gamma0}, {eps0 ** -3:.4g})",
                          RegimeGapWarning, stacklevel=2)
        return Regime(RegimeTag.SMALL_EPS_LARGE_D, th.theta0, eps0, th.gamma0, gap=gap)
    ext = abs(geo.theta) > th.theta0
    return Regime(RegimeTag.BOUNDED_THETA, th.theta0, eps0, th.gamma0, theta_extended=ext)


def _log_amp(sig, p, geo):
    """``log prod_j (a_j theta / sin(a_j theta))^{k_j}``, eps-accurate near pi."""
    return math.log(ContourIntegrand(sig, p, Height.from_geodesic(geo)).amp0)


def _log_prod_below(sig):
    """``log prod_{j<l} (a_j pi / sin(a_j pi))^{k_j}``."""
    acc = 0.0
    for kj, aj in zip(sig.k[:-1], sig.a[:-1]):
        acc += kj * math.log(aj * PI / math.sin(aj * PI))
    return acc


def _out(logv, log):
    return logv if log else math.exp(logv)


def thm1_leading(sig: GroupSignature, p: RadialPoint, geo=None, frame=None,
                 thresholds: Optional[Thresholds] = None, strict: bool = True, log: bool = False):
    r"""Leading term for ``|theta| <= theta0``.

    .. math:: \frac{e^{-d^2/4}}{4(4\pi)^{n+1/2}}\Big(-\frac{\Phi''(0)}{2}\Big)^{-1/2}
              \prod_j \Big(\frac{a_j\theta}{\sin a_j\theta}\Big)^{k_j}
    """
    geo, frame = _prep(sig, p, geo, frame)
    th = thresholds or Thresholds()
    if not geo.interior:
        raise RegimeError("the first theorem needs an interior point")
    if strict and abs(geo.theta) > th.theta0:
        raise RegimeError(f"|theta| = {geo.theta:.4g} exceeds theta0 = {th.theta0:.4g}")
    logv = (-0.25 * geo.dsq - math.log(4.0) - (sig.n + 0.5) * LOG_4PI
            - 0.5 * math.log(-0.5 * frame.phi_pp0) + _log_amp(sig, p, geo))
    return _out(logv, log)


def thm2_leading(sig: GroupSignature, p: RadialPoint, geo=None, frame=None,
                 thresholds: Optional[Thresholds] = None, form: str = "first",
                 strict: bool = True, log: bool = False):
    r"""Leading term for small ``eps`` and large ``D1 + D2``.

    ``form="first"``: ``e^{-d^2/4}/(4(4pi)^{n+1/2}) (D1+D2)^{-1/2} eps prod_j (...)``;
    ``form="second"`` replaces the product by
    ``(pi/eps)^{k_l} prod_{j<l}(a_j pi/sin(a_j pi))^{k_j}`` (agrees to ``O(eps)``).
    """
    geo, frame = _prep(sig, p, geo, frame)
    if not geo.interior:
        raise RegimeError("the second theorem needs 0 < eps")
    frame.require_d()
    if strict:
        reg = classify(geo, frame, thresholds)
        if reg.tag is not RegimeTag.SMALL_EPS_LARGE_D:
            raise RegimeError(f"point is in regime {reg.tag.value}")
    eps = geo.epsilon
    base = (-0.25 * geo.dsq - math.log(4.0) - (sig.n + 0.5) * LOG_4PI
            - 0.5 * math.log(frame.D1 + frame.D2) + math.log(eps))
    if form == "first":
        logv = base + _log_amp(sig, p, geo)
    elif form == "second":
        logv = base + sig.k[-1] * math.log(PI / eps) + _log_prod_below(sig)
    else:
        raise DomainError(f"unknown form {form!r}")
    return _out(logv, log)


def _log_gauss_bessel(k, x, eps, c, g2):
    r"""``log int_0^inf e^{-eps rho} B(rho) exp(-(rho - c)^2/(2 g2)) d rho`` with
    ``B(rho) = (rho/x)^{(k-1)/2} I_{k-1}(2 sqrt(x rho))`` (``rho^{k-1}/Gamma(k)`` at ``x = 0``).
    """
    sd = math.sqrt(g2)
    # centre of the bulk: Gaussian centre shifted by the slow factors
    centre = max(c - eps * g2, 0.0)

    def logf(rho):
        return -eps * rho + bessel_kernel_log(float(k), x, rho) - (rho - c) ** 2 / (2.0 * g2)

    hi = centre + 40.0 * sd + (k + 2) * sd
    while float(logf(np.array([hi]))[0]) > float(logf(np.array([max(centre, 1e-300)]))[0]) - 80.0:
        hi *= 1.5
    grid = np.unique(np.concatenate([np.linspace(0.0, hi, 801)[1:], np.geomspace(1e-12, 1.0, 40) * hi]))
    lg = logf(grid)
    lmax = float(np.max(lg))
    pk = float(grid[int(np.argmax(lg))])
    bps = {0.0, hi}
    for j in range(-10, 11):
        v = pk + j * sd
        if 0.0 < v < hi:
            bps.add(v)
    for v in np.geomspace(1e-6, 1.0, 7) * hi:
        bps.add(float(v))
    bps = np.array(sorted(bps))
    res = gk_integrate(lambda r: np.exp(logf(r) - lmax), bps, rtol=1e-14)
    return lmax + math.log(res.value)


def thm3_leading(sig: GroupSignature, p: RadialPoint, geo=None, frame=None,
                 thresholds: Optional[Thresholds] = None, form: str = "auto",
                 strict: bool = True, log: bool = False):
    r"""Leading term for ``0 <= eps <= eps0`` and ``D1 + D2 <= gamma0``.

    .. math:: \frac{e^{-d^2/4}}{2(4\pi)^{n+1}} e^{-D_1+J_*} S_{k_l}\,
              \epsilon\Big(\frac{\pi}{\epsilon}\Big)^{k_l}
              \prod_{j<l}\Big(\frac{a_j\pi}{\sin a_j\pi}\Big)^{k_j}

    ``form="bessel"`` evaluates ``S_{k_l} = V(D1, D2; k_l)`` directly;
    ``form="reparam"`` uses the ``eps``-free integral in ``rho = s/eps``,
    which is the only one defined at ``eps = 0``.  ``auto`` picks
    ``bessel`` for ``eps > 0`` and ``reparam`` at ``eps = 0``.
    """
    geo, frame = _prep(sig, p, geo, frame)
    frame.require_d()
    if strict:
        reg = classify(geo, frame, thresholds)
        if reg.tag is not RegimeTag.SMALL_EPS_BOUNDED_D:
            raise RegimeError(f"point is in regime {reg.tag.value}")
    eps = geo.epsilon
    kl = sig.k[-1]
    if form == "auto":
        form = "bessel" if eps > 0 else "reparam"
    # log of eps^{1-k_l} S_{k_l}
    if form == "bessel":
        if eps == 0.0:
            raise DomainError("the Bessel form divides by eps; use form='reparam' at eps = 0")
        logS = log_plancherel_rhs(VParams(float(kl), frame.D1, frame.D2))[0] + (1 - kl) * math.log(eps)
    elif form == "reparam":
        g2 = float(frame.gfamily.d2G.real)
        if eps > 0:
            x = 0.25 * PI * p.r[-1] ** 2
            c = x / (eps * eps)
        else:
            x = 0.0
            c = 0.25 * (abs(p.t) - cut_bound(sig, p))
        if g2 > 0:
            logS = (0.5 * math.log(PI) - 0.5 * math.log(0.5 * g2)
                    + _log_gauss_bessel(kl, x, eps, c, g2))
        else:
            # z = 0: the Gaussian collapses to 2 pi delta(rho - c)
            logS = math.log(2.0 * PI) - eps * c + float(bessel_kernel_log(float(kl), x, c))
    else:
        raise DomainError(f"unknown form {form!r}")
    logv = (-0.25 * geo.dsq - math.log(2.0) - (sig.n + 1) * LOG_4PI - frame.D1 + frame.Jstar
            + logS + kl * math.log(PI) + _log_prod_below(sig))
    return _out(logv, log)


def _rho_moment(k, c, g2):
    r"""``int_0^inf rho^{k-1} exp(-(rho-c)^2/(2 g2)) d rho`` by the binomial
    expansion in ``rho = c + sqrt(2 g2) lam`` and incomplete gamma functions."""
    s = math.sqrt(2.0 * g2)
    L = -c / s
    total = 0.0
    for m in range(k):
        a = 0.5 * (m + 1)
        ga = math.exp(gammaln(a))
        # int_L^inf lam^m e^{-lam^2} d lam
        if L >= 0:
            J = 0.5 * ga * gammaincc(a, L * L)
        else:
            # full line minus the reflected tail below L
            J = 0.5 * ga * (1.0 + (-1) ** m * gammainc(a, L * L))
        total += math.comb(k - 1, m) * c ** (k - 1 - m) * s ** m * J
    return s * total


def cutlocus_leading(sig: GroupSignature, p: RadialPoint, log: bool = False):
    r"""Leading term on the cut locus (``z_l = 0``, ``|theta| = pi``, ``z != 0``).

    .. math:: \frac{\pi^{k_l-n-1/2}}{2^{2n+3}\Gamma(k_l)}\Big(\frac{G_3''(0)}{2}\Big)^{-1/2}
              e^{-d^2/4}\prod_{j<l}(\dots)\int_0^\infty \rho^{k_l-1}
              e^{-(\rho - T/4)^2/(2G_3''(0))}\,d\rho

    with ``T = |t| - sum_{j<l} a_j mu(a_j pi) r_j^2``.
    """
    p.check(sig)
    if p.r_total == 0.0:
        raise DomainError("the cut-locus formula needs z != 0")
    if p.r[-1] != 0.0:
        raise DomainError("the cut-locus formula needs z_l = 0")
    geo = solve_geodesic(sig, p)
    if geo.interior:
        raise DomainError("point is not on the cut locus (|t| below the bound)")
    n, kl = sig.n, sig.k[-1]
    g3pp = float(g_family(sig, p, 0.0).d2G.real)
    c = 0.25 * (abs(p.t) - cut_bound(sig, p))
    logv = ((kl - n - 0.5) * math.log(PI) - (2 * n + 3) * math.log(2.0) - gammaln(kl)
            - 0.5 * math.log(0.5 * g3pp) - 0.25 * geo.dsq + _log_prod_below(sig)
            + math.log(_rho_moment(kl, c, g3pp)))
    return _out(logv, log)


@dataclass
class SmallTimeResult:
    value: float
    log_value: float
    powerOfH: float
    coefficient: float
    caseTag: str
    dsq: float = 0.0
    extra: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        return {"value": self.value, "log_value": self.log_value, "powerOfH": self.powerOfH,
                "coefficient": self.coefficient, "caseTag": self.caseTag, "dsq": self.dsq}


def small_time(sig: GroupSignature, p: RadialPoint, h: float, boundary_rtol: float = 1e-12) -> SmallTimeResult:
    """Small-time leading term ``coefficient * h^{-power} * e^{-d^2/(4h)}``.

    Case ``c2``: a critical angle ``0 <= theta < pi`` exists.  Case ``c3``:
    ``z_l = 0`` and ``|t|`` equals the cut bound.  Case ``c4``: ``z_l = 0``
    and ``|t|`` beyond it.
    """
    p.check(sig)
    if p.is_origin:
        raise DomainError("small-time asymptotics are undefined at the origin")
    if not (0 < h <= 1):
        raise DomainError(f"h must lie in (0, 1], got {h}")
    n, kl = sig.n, sig.k[-1]
    geo = solve_geodesic(sig, p)
    bound = cut_bound(sig, p) if p.r[-1] == 0.0 else math.inf
    T = abs(p.t) - bound
    if p.r[-1] == 0.0 and abs(T) <= boundary_rtol * max(1.0, abs(p.t)) and p.r_total > 0:
        case = "c3"
        power = n + 0.5 * (kl + 1)
        g3pp = float(g_family(sig, p, 0.0).d2G.real)
        logc = (0.5 * (kl - 3) * math.log(2.0) + (kl + 0.5) * math.log(PI) - (n + 1) * LOG_4PI
                + gammaln(0.5 * kl) - gammaln(kl) + 0.5 * (kl - 1) * math.log(g3pp) + _log_prod_below(sig))
        dsq = PI * abs(p.t) + PI * sum(a * math.cos(a * PI) / math.sin(a * PI) * r * r
                                       for a, r in zip(sig.a[:-1], p.r[:-1]))
    elif geo.interior:
        case = "c2"
        power = n + 0.5
        frame = phase_frame(sig, p, geo)
        logc = (-math.log(4.0) - (n + 0.5) * LOG_4PI - 0.5 * math.log(-0.5 * frame.phi_pp0)
                + _log_amp(sig, p, geo))
        dsq = geo.dsq
    else:
        case = "c4"
        power = n + kl
        logc = ((1 - kl) * math.log(4.0) + (kl + 1) * math.log(PI) - (n + 1) * LOG_4PI - gammaln(kl)
                + (kl - 1) * math.log(T) + _log_prod_below(sig))
        dsq = geo.dsq
    logv = logc - power * math.log(h) - 0.25 * dsq / h
    return SmallTimeResult(math.exp(logv), logv, power, math.exp(logc), case, dsq)


def leading(sig: GroupSignature, p: RadialPoint, thresholds: Optional[Thresholds] = None, log: bool = False):
    """Leading term of the regime returned by :func:`classify`, plus the regime."""
    geo, frame = _prep(sig, p)
    if not geo.interior and p.r_total > 0:
        return _out(cutlocus_leading(sig, p, log=True), log), Regime(
            RegimeTag.SMALL_EPS_BOUNDED_D, (thresholds or Thresholds()).theta0, frame.eps0,
            (thresholds or Thresholds()).gamma0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeGapWarning)
        reg = classify(geo, frame, thresholds)
    if reg.tag is RegimeTag.BOUNDED_THETA:
        v = thm1_leading(sig, p, geo, frame, thresholds, strict=False, log=True)
    elif reg.tag is RegimeTag.SMALL_EPS_LARGE_D:
        v = thm2_leading(sig, p, geo, frame, thresholds, strict=False, log=True)
    else:
        v = thm3_leading(sig, p, geo, frame, thresholds, strict=False, log=True)
    return _out(v, log), reg
