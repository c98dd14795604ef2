r"""Phase, amplitude and the near-cut-locus decomposition.

The heat kernel at time 1 is

.. math:: p(z,t) = \frac{1}{2(4\pi)^{n+1}} \int_{\mathbb R} h(\lambda)
          e^{\varphi(\lambda)}\,d\lambda, \qquad
          \varphi(\lambda) = \tfrac14\Big(i\lambda t - \sum_j r_j^2 a_j\lambda
          \coth(a_j\lambda)\Big),

with amplitude ``h = prod_j h1(a_j lambda)^{k_j}``, ``h1(w) = w/sinh w``.
Both ``h`` and ``phi`` extend analytically to the strip ``|Im lambda| < pi``.

Evaluation on a horizontal line ``Im lambda = eta`` close to ``pi`` is done
in the variable ``xi = pi - eta + i s`` for the last block, which keeps the
pole factor ``(pi - xi)/sin xi`` accurate when ``pi - eta`` is tiny.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _elementary as el
from .errors import DomainError, RegimeError
from .geometry import GeodesicData, mu_prime_complement
from .group_model import GroupSignature, RadialPoint

__all__ = [
    "h1",
    "h2",
    "abs_h1_sq_closed",
    "re_h2_closed",
    "amplitude",
    "phi",
    "Phi",
    "phi_pp0",
    "Height",
    "ContourIntegrand",
    "GFamily",
    "g_family",
    "PhaseFrame",
    "phase_frame",
    "s_reduced",
    "H_reduced",
]

PI = math.pi


def _check_strip(w):
    if np.any(np.abs(np.imag(w)) >= PI):
        raise DomainError("argument must satisfy |Im| < pi (pole of 1/sinh)")


def h1(omega):
    """``omega / sinh(omega)``, entire apart from poles at ``i pi Z \\ {0}``."""
    w = np.asarray(omega, dtype=complex)
    out = el.h1(w)
    return complex(out[()]) if w.ndim == 0 else out


def h2(omega):
    """``omega coth(omega)``."""
    w = np.asarray(omega, dtype=complex)
    out = el.h2(w)
    return complex(out[()]) if w.ndim == 0 else out


def abs_h1_sq_closed(xi, eta):
    """``|h1(xi + i eta)|^2 = (xi^2 + eta^2) / (sinh^2 xi + sin^2 eta)``."""
    return (xi * xi + eta * eta) / (np.sinh(xi) ** 2 + np.sin(eta) ** 2)


def re_h2_closed(xi, eta):
    """``Re h2(xi + i eta)``.

    Non-negative for ``|eta| <= pi/2``; on ``xi = 0`` it equals ``eta cot eta``,
    which turns negative once ``|eta| > pi/2``.
    """
    num = xi * np.sinh(xi) * np.cosh(xi) + eta * np.sin(eta) * np.cos(eta)
    return num / (np.sinh(xi) ** 2 + np.sin(eta) ** 2)


def amplitude(sig: GroupSignature, omega):
    """``h(omega) = prod_j h1(a_j omega)^{k_j}`` on the strip ``|Im omega| < pi``."""
    w = np.asarray(omega, dtype=complex)
    _check_strip(w)
    out = np.ones_like(w)
    for kj, aj in zip(sig.k, sig.a):
        out = out * el.h1(aj * w) ** kj
    return complex(out[()]) if w.ndim == 0 else out


def phi(sig: GroupSignature, p: RadialPoint, lam):
    """The phase ``phi(lambda)`` for the point ``p`` (signed ``t``)."""
    p.check(sig)
    w = np.asarray(lam, dtype=complex)
    _check_strip(w)
    acc = 0.25j * w * p.t
    for rj, aj in zip(p.r, sig.a):
        if rj:
            acc = acc - 0.25 * rj * rj * el.h2(aj * w)
    return complex(acc[()]) if w.ndim == 0 else acc


@dataclass(frozen=True)
class Height:
    """Height ``eta`` of a horizontal contour, with ``eps = pi - eta`` kept exact.

    ``near_pi`` switches the last block to the ``xi = eps + i s`` form.
    """

    eta: float
    eps: float
    near_pi: bool

    @classmethod
    def from_eta(cls, eta):
        eta = float(eta)
        if not 0.0 <= eta < PI:
            raise DomainError("contour height must lie in [0, pi)")
        return cls(eta, PI - eta, False)

    @classmethod
    def from_eps(cls, eps):
        eps = float(eps)
        if not 0.0 < eps <= PI:
            raise DomainError("contour offset eps must lie in (0, pi]")
        return cls(PI - eps, eps, eps < 0.5 * PI)

    @classmethod
    def from_geodesic(cls, geo: GeodesicData):
        if not geo.interior:
            raise DomainError("the saddle contour needs an interior geodesic")
        if geo.near_pi:
            return cls(geo.theta, geo.epsilon, True)
        return cls.from_eta(geo.theta)


class ContourIntegrand:
    """``s -> h(s + i eta) exp(phi(s + i eta) - phi(i eta))`` for real ``s``.

    ``t`` is taken as ``|p.t|``; the kernel is even in ``t``.
    """

    def __init__(self, sig: GroupSignature, p: RadialPoint, height: Height):
        p.check(sig)
        self.sig = sig
        self.height = height
        self.t = abs(p.t)
        self.r2 = p.r_arr ** 2
        self.a = sig.a_arr
        self.k = sig.k
        eta = height.eta
        # h2 at the reference point i*eta is real: eta*a_j*cot(eta*a_j)
        ref = np.empty(sig.l)
        amp0 = np.empty(sig.l)
        for j, aj in enumerate(sig.a):
            if j == sig.l - 1 and height.near_pi:
                e = height.eps
                ref[j] = -(PI - e) * math.cos(e) / math.sin(e)
                amp0[j] = (PI - e) / math.sin(e)
            else:
                x = aj * eta
                ref[j] = float(el.xcotx(np.array([x]))[0])
                amp0[j] = float(el.x_over_sin(np.array([x]))[0])
        self._ref = ref
        self.amp0 = float(np.prod(amp0 ** np.asarray(self.k, float)))
        self.phi0 = -0.25 * (eta * self.t + float(np.sum(self.r2 * ref)))

    def _blocks(self, s):
        s = np.asarray(s, dtype=float)
        lam = s + 1j * self.height.eta
        amp = np.ones(s.shape, dtype=complex)
        dphi = 0.25j * s * self.t
        l = self.sig.l
        for j in range(l):
            aj, kj, rj2 = self.a[j], self.k[j], self.r2[j]
            if j == l - 1 and self.height.near_pi:
                xi = self.height.eps + 1j * s
                u = -s + 1j * self.height.eps
                one_minus = PI - xi
                a1 = one_minus * 1j * el.csch(u)
                b2 = -one_minus * 1j * el.coth(u)
            else:
                w = aj * lam
                a1 = el.h1(w)
                b2 = el.h2(w) if rj2 else None
            amp = amp * a1 ** kj
            if rj2:
                dphi = dphi - 0.25 * rj2 * (b2 - self._ref[j])
        return amp, dphi

    def __call__(self, s):
        amp, dphi = self._blocks(s)
        return amp * np.exp(dphi)

    def dphi(self, s):
        """``phi(s + i eta) - phi(i eta)``."""
        return self._blocks(s)[1]

    def amplitude(self, s):
        return self._blocks(s)[0]


def Phi(sig: GroupSignature, p: RadialPoint, geo: GeodesicData, s):
    """Shifted phase ``Phi(s) = phi(s + i theta) - phi(i theta)``.

    Raises
    ------
    DomainError
        If ``geo`` is on the cut locus.
    """
    if not geo.interior:
        raise DomainError("Phi is defined for interior points; use the eps-parametrised form")
    ci = ContourIntegrand(sig, p, Height.from_geodesic(geo))
    s_arr = np.asarray(s, dtype=float)
    out = ci.dphi(s_arr)
    out = np.where(s_arr == 0.0, 0.0, out)
    return complex(out[()]) if s_arr.ndim == 0 else out


def phi_pp0(sig: GroupSignature, p: RadialPoint, geo: GeodesicData) -> float:
    """``Phi''(0) = -(1/4) sum_j a_j^2 r_j^2 mu'(a_j theta)`` (negative)."""
    if not geo.interior:
        raise DomainError("Phi''(0) is defined for interior points")
    a, r2 = sig.a_arr, p.r_arr ** 2
    if geo.near_pi:
        ai = a[:-1]
        acc = float(np.sum(ai * ai * r2[:-1] * el.mu_prime(ai * geo.theta))) if ai.size else 0.0
        if r2[-1]:
            acc += r2[-1] * mu_prime_complement(geo.epsilon)
    else:
        acc = float(np.sum(a * a * r2 * el.mu_prime(a * geo.theta)))
    return -0.25 * acc


@dataclass(frozen=True)
class GFamily:
    """Values of G1, G2, G3, G and derivatives of G at one point ``xi``."""

    xi: complex
    G1: complex
    G2: complex
    G3: complex
    G: complex
    dG: complex
    d2G: complex
    d3G: complex


def _analytic_radius(sig: GroupSignature) -> float:
    if sig.l == 1:
        return 1.0
    al = sig.a[-2]
    return min(1.0, (1.0 - al) * PI / al)


def _g_parts(sig, r2, xi, deriv):
    """G3^(deriv)(xi) and (r_l^2/4)(G2 - G1)^(deriv)(xi) as arrays."""
    xi = np.asarray(xi, dtype=complex)
    g3 = np.zeros(xi.shape, dtype=complex)
    for aj, rj2 in zip(sig.a[:-1], r2[:-1]):
        if rj2:
            # d/dxi of G1(a(pi - xi)) brings (-a)^deriv
            g3 = g3 - 0.25 * rj2 * (-aj) ** deriv * el.xcotx(aj * (PI - xi), deriv)
    rl2 = r2[-1]
    g2 = PI * el.cotm(xi, deriv)
    g1 = el.xcotx(xi, deriv)
    return g3, 0.25 * rl2 * (g2 - g1), g1, g2


def g_family(sig: GroupSignature, p: RadialPoint, xi) -> GFamily:
    """The G-decomposition of the phase near ``theta = pi``.

    ``G1(x) = x cot x``, ``G2(x) = pi (cot x - 1/x)``,
    ``G3(x) = -sum_{j<l} (r_j^2/4) G1(a_j (pi - x))`` and
    ``G = G3 + (r_l^2/4)(G2 - G1)``, so that
    ``phi(i(pi - xi)) = -(t/4)(pi - xi) + G(xi) + pi r_l^2/(4 xi)``.
    """
    p.check(sig)
    xi_c = complex(xi)
    R = _analytic_radius(sig)
    if abs(xi_c) >= R:
        raise DomainError(f"|xi| = {abs(xi_c):.3g} outside the analyticity disc of radius {R:.3g}")
    r2 = p.r_arr ** 2
    vals = []
    for d in range(4):
        g3, gl, g1, g2 = _g_parts(sig, r2, xi_c, d)
        vals.append((complex(g3), complex(gl), complex(g1), complex(g2)))
    G = [v[0] + v[1] for v in vals]
    return GFamily(xi_c, vals[0][2], vals[0][3], vals[0][0], G[0], G[1], G[2], G[3])


@dataclass
class PhaseFrame:
    """Quantities consumed by the asymptotic formulas.

    ``D1``, ``D2``, ``Jstar`` and ``gfamily`` are ``None`` when
    ``eps > eps0``; :meth:`require_d` raises in that case.
    """

    phi_at_itheta: float
    phi_pp0: float
    eps: float
    eps0: float
    D1: Optional[float] = None
    D2: Optional[float] = None
    Jstar: Optional[float] = None
    gfamily: Optional[GFamily] = None
    _sig: Optional[GroupSignature] = field(default=None, repr=False)
    _p: Optional[RadialPoint] = field(default=None, repr=False)

    @property
    def has_d(self) -> bool:
        return self.D1 is not None

    def require_d(self):
        if not self.has_d:
            raise RegimeError(f"eps = {self.eps:.3g} exceeds eps0 = {self.eps0:.3g}; D1, D2, J* undefined")
        return self

    def K(self, xi):
        """Cubic remainder ``G(eps + i xi) - [second-order Taylor polynomial]``."""
        self.require_d()
        g = self.gfamily
        xi = np.asarray(xi, dtype=complex)
        r2 = self._p.r_arr ** 2
        g3, gl, _, _ = _g_parts(self._sig, r2, self.eps + 1j * xi, 0)
        return (g3 + gl) - g.G - g.dG * (1j * xi) - 0.5 * g.d2G * (1j * xi) ** 2


def phase_frame(sig: GroupSignature, p: RadialPoint, geo: GeodesicData) -> PhaseFrame:
    """Assemble :class:`PhaseFrame` for an interior or cut-locus point.

    On the cut locus ``eps = 0`` and ``D1 = D2 = J* = 0``; ``phi_pp0`` is then
    ``nan`` (the stationary point degenerates).
    """
    eps0 = sig.eps0
    if geo.interior:
        ppp = phi_pp0(sig, p, geo)
    else:
        ppp = float("nan")
    frame = PhaseFrame(-0.25 * geo.dsq, ppp, geo.epsilon, eps0, _sig=sig, _p=p)
    if geo.epsilon <= eps0:
        eps = geo.epsilon
        gf = g_family(sig, p, eps)
        g0 = g_family(sig, p, 0.0)
        rl2 = p.r[-1] ** 2
        if eps > 0:
            D1 = 0.25 * PI * rl2 / eps
        else:
            D1 = 0.0
        D2 = 0.5 * gf.d2G.real * eps * eps
        J = (g0.G - gf.G + gf.dG * eps - 0.5 * gf.d2G * eps * eps).real
        frame.D1, frame.D2, frame.Jstar, frame.gfamily = D1, D2, J, gf
    return frame


def s_reduced(sig: GroupSignature, xi):
    """Reduced amplitude for ``k_l = 1``.

    ``s(xi) = (xi/sin xi)(1 - xi/pi) prod_{j<l} [a_j(pi-xi)/sin(a_j(pi-xi))]^{k_j}``
    so that ``h(lambda + i theta) = pi/(eps + i lambda) s(eps + i lambda)``.
    """
    if sig.k[-1] != 1:
        raise DomainError("s_reduced is defined only when the last block has k_l = 1")
    x = np.asarray(xi, dtype=complex)
    R = _analytic_radius(sig)
    if np.any(np.abs(x) >= max(R, 1.0)):
        raise DomainError("xi outside the analyticity disc")
    out = el.x_over_sin(x) * (1.0 - x / PI)
    for kj, aj in zip(sig.k[:-1], sig.a[:-1]):
        out = out * el.x_over_sin(aj * (PI - x)) ** kj
    return complex(out[()]) if x.ndim == 0 else out


def H_reduced(sig: GroupSignature, eps: float, u):
    """``H(u) = s(eps + i u)``."""
    return s_reduced(sig, eps + 1j * np.asarray(u, dtype=float))
