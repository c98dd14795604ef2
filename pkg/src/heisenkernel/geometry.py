r"""Critical angle and Carnot-Caratheodory distance.

For a point with block moduli ``r_j`` and vertical coordinate ``t >= 0`` the
critical angle ``theta`` solves

.. math:: t = \sum_j a_j \mu(a_j\theta) r_j^2, \qquad
          \mu(\omega) = \frac{\omega}{\sin^2\omega} - \cot\omega,

and ``d^2 = \sum_j (a_j\theta/\sin a_j\theta)^2 r_j^2``.  When ``r_l = 0`` and
``t`` exceeds ``\sum_{j<l} a_j\mu(a_j\pi) r_j^2`` the point lies on the cut
locus and ``d^2 = \pi(t + \sum_{j<l} a_j\cot(a_j\pi) r_j^2)``.

Near ``theta = pi`` the angle is carried as ``epsilon = pi - theta``: a double
``theta`` cannot resolve ``epsilon ~ 1e-6`` to the accuracy the kernel needs
(one ulp of ``theta`` moves ``mu`` by ~1e-10 relative there).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _elementary as el
from .errors import DomainError
from .group_model import GroupSignature, RadialPoint

__all__ = [
    "Branch",
    "GeodesicData",
    "mu",
    "mu_prime",
    "mu_complement",
    "mu_prime_complement",
    "mu_inv",
    "mu_inv_complement",
    "solve_geodesic",
    "cc_distance",
    "dsq_forms",
    "cut_bound",
]

PI = math.pi
HALF_PI = 0.5 * math.pi
_EPS = np.finfo(float).eps


def _ret(x, scalar):
    return float(x[()]) if scalar else x


def mu(omega):
    """``mu(omega) = omega/sin^2(omega) - cot(omega)`` on ``(-pi, pi)``.

    Odd and strictly increasing; evaluated by series for ``|omega| <= 1``.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(~(np.abs(w) < PI)):
        raise DomainError("mu is defined only for |omega| < pi")
    return _ret(el.mu(w), w.ndim == 0)


def mu_prime(omega):
    """Derivative ``2 (sin w - w cos w) / sin^3 w``."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(np.abs(w) < PI)):
        raise DomainError("mu' is defined only for |omega| < pi")
    return _ret(el.mu_prime(w), w.ndim == 0)


def mu_complement(eps):
    """``mu(pi - eps)`` computed from ``eps`` without forming ``pi - eps``.

    Valid for ``0 < eps < 2 pi``; accurate to double precision for small
    ``eps`` where ``mu ~ pi/eps^2``.
    """
    e = np.asarray(eps, dtype=float)
    if np.any(~(e > 0)) or np.any(~(e < 2 * PI)):
        raise DomainError("mu_complement needs 0 < eps < 2 pi")
    out = np.empty_like(e)
    near = e <= HALF_PI
    en = e[near]
    s, c = np.sin(en), np.cos(en)
    out[near] = (PI - en) / (s * s) + c / s
    far = ~near
    if np.any(far):
        out[far] = el.mu(PI - e[far])
    return _ret(out, e.ndim == 0)


def mu_prime_complement(eps):
    """``mu'(pi - eps) = 2 (sin eps + (pi - eps) cos eps) / sin^3 eps``."""
    e = np.asarray(eps, dtype=float)
    if np.any(~(e > 0)) or np.any(~(e < 2 * PI)):
        raise DomainError("mu_prime_complement needs 0 < eps < 2 pi")
    out = np.empty_like(e)
    near = e <= HALF_PI
    en = e[near]
    s, c = np.sin(en), np.cos(en)
    out[near] = 2.0 * (s + (PI - en) * c) / s**3
    far = ~near
    if np.any(far):
        out[far] = el.mu_prime(PI - e[far])
    return _ret(out, e.ndim == 0)


def _safe_newton(F, dF, lo, hi, x0, increasing, maxit=100):
    """Vectorised Newton iteration safeguarded by a shrinking bracket.

    ``F`` is monotone on ``[lo, hi]`` with a root inside.  Steps leaving the
    bracket are replaced by bisection (geometric when ``lo > 0``).
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = np.clip(np.array(x0, dtype=float), lo, hi)
    active = np.ones(x.shape, dtype=bool)
    sgn = 1.0 if increasing else -1.0
    for _ in range(maxit):
        if not np.any(active):
            break
        xa = x[active]
        fx = F(xa, active)
        pos = sgn * fx > 0
        lo_a, hi_a = lo[active], hi[active]
        hi_a = np.where(pos, xa, hi_a)
        lo_a = np.where(pos, lo_a, xa)
        d = dF(xa, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - fx / d
        bad = ~np.isfinite(xn) | (xn <= lo_a) | (xn >= hi_a)
        bis = np.where(lo_a > 0, np.sqrt(lo_a * hi_a), 0.5 * (lo_a + hi_a))
        bis = np.where((lo_a > 0) & (hi_a / np.maximum(lo_a, 1e-300) < 4.0), 0.5 * (lo_a + hi_a), bis)
        xn = np.where(bad, bis, xn)
        step = np.abs(xn - xa)
        done = (step <= 2 * _EPS * np.abs(xa)) | (fx == 0) | (hi_a - lo_a <= 2 * _EPS * np.abs(hi_a))
        xn = np.where(fx == 0, xa, xn)
        idx = np.nonzero(active)[0]
        x[idx] = xn
        lo[idx] = lo_a
        hi[idx] = hi_a
        active[idx[done]] = False
    return x


def mu_inv_complement(x):
    """``eps = pi - mu^{-1}(x)`` for ``x >= pi/2``, computed in ``eps``.

    Values ``x < pi/2`` are accepted and routed through :func:`mu_inv`.
    """
    xv = np.asarray(x, dtype=float)
    if np.any(~(xv >= 0)) or np.any(~np.isfinite(xv)):
        raise DomainError("mu_inv_complement needs finite x >= 0")
    out = np.empty_like(xv)
    big = xv >= HALF_PI
    if np.any(big):
        xb = xv[big]
        seed = np.clip(np.sqrt(PI / xb), 1e-300, HALF_PI)
        # mu_complement is decreasing in eps; equality at eps=pi/2 only when x=pi/2
        out[big] = _safe_newton(
            lambda e, m: mu_complement(e) - xb[m],
            lambda e, m: -mu_prime_complement(e),
            np.full(xb.shape, 0.0), np.full(xb.shape, HALF_PI), seed, increasing=False)
        out[big & (xv == HALF_PI)] = HALF_PI
    if np.any(~big):
        out[~big] = PI - mu_inv(xv[~big])
    return _ret(out, xv.ndim == 0)


def mu_inv(x):
    """Inverse of :func:`mu` on ``[0, inf) -> [0, pi)``.

    For ``x >= pi/2`` the solve runs in ``eps = pi - theta``; the returned
    ``pi - eps`` is then correctly rounded but necessarily loses the low bits
    of ``eps`` (use :func:`mu_inv_complement` when they matter).
    """
    xv = np.asarray(x, dtype=float)
    if np.any(~(xv >= 0)) or np.any(~np.isfinite(xv)):
        raise DomainError("mu_inv needs finite x >= 0")
    out = np.zeros_like(xv)
    small = (xv < HALF_PI) & (xv > 0)
    if np.any(small):
        xs = xv[small]
        out[small] = _safe_newton(
            lambda th, m: el.mu(th) - xs[m],
            lambda th, m: el.mu_prime(th),
            np.zeros(xs.shape), np.full(xs.shape, HALF_PI), 1.5 * xs, increasing=True)
    big = xv >= HALF_PI
    if np.any(big):
        out[big] = PI - mu_inv_complement(xv[big])
    return _ret(out, xv.ndim == 0)


class Branch(str, enum.Enum):
    INTERIOR = "Interior"
    CUT_LOCUS = "CutLocus"


@dataclass(frozen=True)
class GeodesicData:
    """Solved critical angle and squared distance.

    ``theta`` refers to the symmetry-reduced point with ``t >= 0``.
    ``epsilon`` is stored independently of ``theta`` (not as ``pi - theta``)
    so that it keeps full relative precision near the cut locus.
    """

    theta: float
    epsilon: float
    dsq: float
    branch: Branch
    epsilon_star: float
    near_pi: bool = False

    @property
    def d(self) -> float:
        return math.sqrt(self.dsq)

    @property
    def interior(self) -> bool:
        return self.branch is Branch.INTERIOR

    def as_record(self) -> dict:
        return {
            "theta": self.theta,
            "eps": self.epsilon,
            "d": self.d,
            "dsq": self.dsq,
            "branch": self.branch.value,
            "eps_star": self.epsilon_star,
        }


def cut_bound(sig: GroupSignature, p: RadialPoint) -> float:
    """``sum_{j<l} a_j mu(a_j pi) r_j^2``, the smallest |t| on the cut locus."""
    a, r = sig.a_arr[:-1], p.r_arr[:-1]
    if a.size == 0:
        return 0.0
    return float(np.sum(a * el.mu(a * PI) * r * r))


def _cut_dsq(sig, p, t):
    a, r = sig.a_arr[:-1], p.r_arr[:-1]
    s = 0.0
    if a.size:
        s = float(np.sum(a * np.cos(a * PI) / np.sin(a * PI) * r * r))
    return PI * (t + s)


def solve_geodesic(sig: GroupSignature, p: RadialPoint) -> GeodesicData:
    """Solve for the critical angle and squared distance of ``p``.

    Raises
    ------
    DomainError
        At the origin.
    """
    p.check(sig)
    if p.is_origin:
        raise DomainError("solve_geodesic is undefined at the origin (d = 0)")
    t = abs(p.t)
    a = sig.a_arr
    r2 = p.r_arr ** 2
    if np.all(r2 == 0.0):
        return GeodesicData(PI, 0.0, PI * t, Branch.CUT_LOCUS, 0.0, True)
    rl2 = r2[-1]
    bound = cut_bound(sig, p)
    if rl2 == 0.0 and t >= bound:
        return GeodesicData(PI, 0.0, _cut_dsq(sig, p, t), Branch.CUT_LOCUS, 0.0, True)
    if t == 0.0:
        return GeodesicData(0.0, PI, float(np.sum(r2)), Branch.INTERIOR, 1.0, False)

    def F(th):
        return float(np.sum(a * el.mu(a * th) * r2)) - t

    if F(HALF_PI) >= 0.0:
        def Fv(th, m):
            return np.sum(a[:, None] * el.mu(np.outer(a, th)) * r2[:, None], axis=0) - t

        def dFv(th, m):
            return np.sum((a * a)[:, None] * el.mu_prime(np.outer(a, th)) * r2[:, None], axis=0)

        th0 = min(1.5 * t / max(float(np.sum(a * a * r2)), 1e-300), HALF_PI)
        theta = float(_safe_newton(Fv, dFv, np.zeros(1), np.full(1, HALF_PI), np.array([th0]), True)[0])
        dsq = float(np.sum(el.x_over_sin(a * theta) ** 2 * r2))
        eps_star = 1.0 / float(el.x_over_sin(np.array([theta]))[0])
        return GeodesicData(theta, PI - theta, dsq, Branch.INTERIOR, eps_star, False)

    ai, ri2 = a[:-1], r2[:-1]

    def Fc(e, m):
        e = np.atleast_1d(e)
        s = np.zeros_like(e)
        if ai.size:
            s = np.sum(ai[:, None] * el.mu(np.outer(ai, PI - e)) * ri2[:, None], axis=0)
        if rl2 > 0:
            s = s + rl2 * mu_complement(e)
        return s - t

    def dFc(e, m):
        e = np.atleast_1d(e)
        s = np.zeros_like(e)
        if ai.size:
            s = np.sum((ai * ai)[:, None] * el.mu_prime(np.outer(ai, PI - e)) * ri2[:, None], axis=0)
        if rl2 > 0:
            s = s + rl2 * mu_prime_complement(e)
        return -s

    if rl2 > 0 and t > bound:
        seed = math.sqrt(PI * rl2 / (t - bound))
    else:
        seed = 0.5
    seed = min(max(seed, 1e-300), HALF_PI)
    eps = float(_safe_newton(Fc, dFc, np.zeros(1), np.full(1, HALF_PI), np.array([seed]), False)[0])
    if not eps > 0.0:
        raise AssertionError("interior branch reached theta = pi with r_l > 0")
    theta = PI - eps
    xs = el.x_over_sin(ai * theta) if ai.size else np.zeros(0)
    dsq = float(np.sum(xs**2 * ri2)) + rl2 * ((PI - eps) / math.sin(eps)) ** 2
    return GeodesicData(theta, eps, dsq, Branch.INTERIOR, math.sin(eps) / theta, True)


def dsq_forms(sig: GroupSignature, p: RadialPoint, geo: GeodesicData):
    """Both interior expressions for ``d^2``.

    Returns ``(sum (a_j theta / sin a_j theta)^2 r_j^2,
    theta (t + sum a_j cot(a_j theta) r_j^2))``.
    """
    if not geo.interior:
        raise DomainError("dsq_forms applies to interior points")
    a, r2, t = sig.a_arr, p.r_arr ** 2, abs(p.t)
    th, eps = geo.theta, geo.epsilon
    if geo.near_pi:
        ai, ri2 = a[:-1], r2[:-1]
        f1 = float(np.sum(el.x_over_sin(ai * th) ** 2 * ri2)) + r2[-1] * ((PI - eps) / math.sin(eps)) ** 2
        f2 = th * t + float(np.sum(el.xcotx(ai * th) * ri2)) - r2[-1] * (PI - eps) * math.cos(eps) / math.sin(eps)
        return f1, f2
    f1 = float(np.sum(el.x_over_sin(a * th) ** 2 * r2))
    f2 = th * t + float(np.sum(el.xcotx(a * th) * r2))
    return f1, f2


def cc_distance(sig: GroupSignature, p: RadialPoint) -> float:
    """Carnot-Caratheodory distance from the origin (0 at the origin)."""
    p.check(sig)
    if p.is_origin:
        return 0.0
    return math.sqrt(solve_geodesic(sig, p).dsq)
