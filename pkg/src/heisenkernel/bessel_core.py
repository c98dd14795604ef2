r"""Modified Bessel functions and the Bessel-Gaussian integral identity.

The identity (valid for ``nu > 0``, ``r >= 0``, ``b > 0``)

.. math::
    \int_{\mathbb R} \frac{e^{-b\tau^2 + i r\tau + r/(1+i\tau)}}{(1+i\tau)^{\nu}}
    \,d\tau = \sqrt{\frac{\pi}{b}} \int_0^\infty e^{-s}
    \Big(\frac{s}{r}\Big)^{\frac{\nu-1}{2}} I_{\nu-1}(2\sqrt{rs})\,
    e^{-(s-r)^2/(4b)}\,ds =: V(r, b; \nu)

is checked by evaluating both sides independently.  ``V`` is two-sided
comparable to ``(r + sqrt(b))^{nu-1}`` on bounded boxes.

``I_nu`` is evaluated from the Poisson integral

.. math:: I_\nu(u) = \frac{(u/2)^\nu}{\sqrt\pi\,\Gamma(\nu+\frac12)}
          \int_{-1}^1 (1-h^2)^{\nu-\frac12} e^{-uh}\,dh
          \qquad (\nu > -\tfrac12)

with Gauss-Jacobi nodes, by its power series for ``u <= 10``, and by
generalised Gauss-Laguerre nodes on the ``e^{-u}``-scaled form for
``u > 30``.  Orders in ``(-1, -1/2]`` (needed for ``I_{nu-1}`` with
``nu <= 1/2``) use the series and the upward recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_genlaguerre, roots_jacobi

from ._gk import gk_integrate
from .errors import AccuracyError, DomainError

__all__ = [
    "VParams",
    "bessel_I",
    "bessel_I_scaled",
    "bessel_I_series",
    "bessel_I_integral",
    "bessel_kernel_log",
    "plancherel_lhs",
    "plancherel_rhs",
    "log_plancherel_rhs",
    "ke1_ratio",
    "lambda_split",
    "s_factor",
]

SERIES_MAX_U = 10.0
INTEGRAL_MAX_U = 30.0
_N_JACOBI = 96
_N_LAGUERRE = 80
_N_SERIES = 80


@dataclass(frozen=True)
class VParams:
    """Parameters ``(nu, r, b)`` of the Bessel-Gaussian identity."""

    nu: float
    r: float
    b: float

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise DomainError(f"nu must be positive, got {self.nu}")
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise DomainError(f"r must be >= 0, got {self.r}")
        if not (self.b > 0 and math.isfinite(self.b)):
            raise DomainError(f"b must be positive, got {self.b}")


def _series_log(nu, u):
    """log of sum_m (u/2)^{nu+2m} / (m! Gamma(nu+m+1)) for u > 0, nu > -1."""
    m = np.arange(_N_SERIES)[:, None]
    lu = np.log(0.5 * u)[None, :]
    terms = (nu + 2 * m) * lu - gammaln(m + 1.0) - gammaln(nu + m + 1.0)
    top = terms.max(axis=0)
    return top + np.log(np.exp(terms - top).sum(axis=0))


def bessel_I_series(nu, u):
    """Power series ``sum (u/2)^{nu+2m} / (m! Gamma(nu+m+1))`` (``nu > -1``)."""
    if not nu > -1:
        raise DomainError("series evaluation needs nu > -1")
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty_like(uu)
    zero = uu == 0
    out[zero] = 1.0 if nu == 0 else (0.0 if nu > 0 else np.inf)
    pos = ~zero
    out[pos] = np.exp(_series_log(nu, uu[pos]))
    return float(out[0]) if np.ndim(u) == 0 else out


def _orthonormal_sweep(n, alpha, x):
    """Orthonormal symmetric Jacobi polynomials at ``x``.

    Returns ``p_n``, ``p_n'`` and ``sum_{k<n} p_k^2``.
    """
    mu0 = math.exp((2.0 * alpha + 1.0) * math.log(2.0) + 2.0 * gammaln(alpha + 1.0)
                   - gammaln(2.0 * alpha + 2.0))
    k = np.arange(1, n + 1, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        beta = k * (k + 2.0 * alpha) / ((2.0 * k + 2.0 * alpha + 1.0) * (2.0 * k + 2.0 * alpha - 1.0))
    if alpha == -0.5:
        # Chebyshev limit of the 0/0 first coefficient
        beta[0] = 0.5
    sb = np.sqrt(beta)
    pm, p = np.zeros_like(x), np.full_like(x, 1.0 / math.sqrt(mu0))
    dpm, dp = np.zeros_like(x), np.zeros_like(x)
    acc = p * p
    for j in range(n):
        prev = sb[j - 1] if j > 0 else 0.0
        pn = (x * p - prev * pm) / sb[j]
        dpn = (p + x * dp - prev * dpm) / sb[j]
        pm, p, dpm, dp = p, pn, dp, dpn
        if j < n - 1:
            acc = acc + p * p
    return p, dp, acc


@lru_cache(maxsize=64)
def _jacobi(alpha):
    """Symmetric Gauss-Jacobi rule.

    scipy's nodes and weights are only good to ~1e-11 for general alpha, so
    the nodes are Newton-polished and the weights recomputed as Christoffel
    numbers ``1 / sum_k p_k(x_i)^2`` from the orthonormal recurrence.
    """
    n = _N_JACOBI
    x, _ = roots_jacobi(n, alpha, alpha)
    for _ in range(3):
        p, dp, _ = _orthonormal_sweep(n, alpha, x)
        x = x - p / dp
    _, _, acc = _orthonormal_sweep(n, alpha, x)
    return x, 1.0 / acc


@lru_cache(maxsize=64)
def _laguerre(alpha):
    x, w = roots_genlaguerre(_N_LAGUERRE, alpha)
    return x, w


def _integral_log(nu, u):
    """log I_nu(u) from the Poisson integral, Gauss-Jacobi (nu > -1/2)."""
    x, w = _jacobi(nu - 0.5)
    ex = -np.outer(u, x)
    top = ex.max(axis=1, keepdims=True)
    s = (w[None, :] * np.exp(ex - top)).sum(axis=1)
    pref = nu * np.log(0.5 * u) - 0.5 * math.log(math.pi) - gammaln(nu + 0.5)
    return pref + top[:, 0] + np.log(s)


def _laguerre_scaled_log(nu, u):
    """log(e^{-u} I_nu(u)) via x = 1 + h, y = u x and Gauss-Laguerre (nu > -1/2)."""
    alpha = nu - 0.5
    y, w = _laguerre(alpha)
    uu = u[:, None]
    inside = y[None, :] < 2.0 * uu
    f = np.where(inside, np.clip(2.0 - y[None, :] / uu, 1e-300, None) ** alpha, 0.0)
    s = (w[None, :] * f).sum(axis=1)
    pref = nu * np.log(0.5 * u) - 0.5 * math.log(math.pi) - gammaln(nu + 0.5)
    return pref - (alpha + 1.0) * np.log(u) + np.log(s)


def bessel_I_integral(nu, u):
    """``I_nu(u)`` from the Poisson integral representation only.

    Raises
    ------
    DomainError
        If ``nu <= -1/2`` (the representation diverges).
    """
    if not nu > -0.5:
        raise DomainError("the integral representation needs nu > -1/2")
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(uu < 0):
        raise DomainError("u must be >= 0")
    out = np.empty_like(uu)
    zero = uu == 0
    out[zero] = 1.0 if nu == 0 else 0.0
    pos = ~zero
    if np.any(pos):
        out[pos] = np.exp(_integral_log(nu, uu[pos]))
    return float(out[0]) if np.ndim(u) == 0 else out


def _log_scaled(nu, u):
    """log(e^{-u} I_nu(u)) for u > 0 and nu > -1, vectorised over u."""
    out = np.empty_like(u)
    s = u <= SERIES_MAX_U
    if np.any(s):
        out[s] = _series_log(nu, u[s]) - u[s]
    rest = ~s
    if not np.any(rest):
        return out
    ur = u[rest]
    # the Jacobi rule degenerates as nu - 1/2 -> -1, so orders near -1/2 go
    # through the recurrence as well
    if nu > -0.25:
        mid = ur <= INTEGRAL_MAX_U
        vals = np.empty_like(ur)
        if np.any(mid):
            vals[mid] = _integral_log(nu, ur[mid]) - ur[mid]
        if np.any(~mid):
            vals[~mid] = _laguerre_scaled_log(nu, ur[~mid])
    else:
        # I_nu = I_{nu+2} + (2(nu+1)/u) I_{nu+1}; both terms positive for nu > -1
        l2 = _log_scaled(nu + 2.0, ur)
        l1 = _log_scaled(nu + 1.0, ur)
        vals = l1 + np.log(np.exp(l2 - l1) + 2.0 * (nu + 1.0) / ur)
    out[rest] = vals
    return out


def bessel_I_scaled(nu, u):
    """``e^{-u} I_nu(u)`` for ``nu > -1``, ``u >= 0``."""
    if not nu > -1:
        raise DomainError("bessel_I_scaled needs nu > -1")
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(uu < 0):
        raise DomainError("u must be >= 0")
    out = np.empty_like(uu)
    zero = uu == 0
    out[zero] = 1.0 if nu == 0 else (0.0 if nu > 0 else np.inf)
    pos = ~zero
    if np.any(pos):
        out[pos] = np.exp(_log_scaled(nu, uu[pos]))
    return float(out[0]) if np.ndim(u) == 0 else out


def bessel_I(nu, u):
    """Modified Bessel function ``I_nu(u)``.

    Accepts ``nu > -1``; the Poisson integral itself is used for
    ``nu > -1/2`` and ``10 < u <= 30`` (see :func:`bessel_I_integral`).
    """
    if not nu > -1:
        raise DomainError("bessel_I needs nu > -1")
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(uu < 0):
        raise DomainError("u must be >= 0")
    out = np.empty_like(uu)
    zero = uu == 0
    out[zero] = 1.0 if nu == 0 else (0.0 if nu > 0 else np.inf)
    pos = ~zero
    if np.any(pos):
        with np.errstate(over="ignore"):
            out[pos] = np.exp(_log_scaled(nu, uu[pos]) + uu[pos])
    return float(out[0]) if np.ndim(u) == 0 else out


def bessel_kernel_log(nu, r, s, regular=False):
    """log of ``(s/r)^{(nu-1)/2} I_{nu-1}(2 sqrt(r s))`` for ``s > 0``.

    The power series ``sum_m s^{nu-1+m} r^m / (m! Gamma(nu+m))`` is used
    while ``2 sqrt(rs) <= 10``; it is regular at ``r = 0`` where the kernel
    becomes ``s^{nu-1}/Gamma(nu)``.  With ``regular=True`` the factor
    ``s^{nu-1}`` is removed.
    """
    s = np.asarray(s, dtype=float)
    x = 2.0 * np.sqrt(r * s)
    out = np.empty_like(s)
    small = x <= SERIES_MAX_U
    if np.any(small):
        ss = s[small]
        rs = r * ss
        m = np.arange(_N_SERIES)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            lrs = np.log(rs)[None, :]
        with np.errstate(invalid="ignore"):
            terms = np.where(m == 0, 0.0, m * lrs) - gammaln(m + 1.0) - gammaln(nu + m)
        top = terms.max(axis=0)
        out[small] = top + np.log(np.exp(terms - top).sum(axis=0))
        if not regular:
            out[small] += (nu - 1.0) * np.log(ss)
    big = ~small
    if np.any(big):
        sb, xb = s[big], x[big]
        val = 0.5 * (nu - 1.0) * np.log(sb / r) + _log_scaled(nu - 1.0, xb) + xb
        if regular:
            val = val - (nu - 1.0) * np.log(sb)
        out[big] = val
    return out


def _rhs_log_integrand(vp, s):
    nu, r, b = vp.nu, vp.r, vp.b
    return -s - (s - r) ** 2 / (4.0 * b) + bessel_kernel_log(nu, r, s)


def log_plancherel_rhs(vp: VParams, rtol=1e-13):
    """``log V(r, b; nu)`` and its relative error estimate.

    For ``nu < 1`` the substitution ``s = sigma^{1/nu}`` removes the
    ``s^{nu-1}`` endpoint singularity.
    """
    nu, r, b = vp.nu, vp.r, vp.b
    sb = math.sqrt(b)
    # locate the bulk: the Gaussian centre r, pulled towards 0 by e^{-s}
    grid = np.concatenate([np.geomspace(1e-12, 1.0, 60) * max(r + 10 * sb, 1.0),
                           r + sb * np.linspace(-12, 40, 400)])
    grid = np.unique(grid[grid > 0])
    lg = _rhs_log_integrand(vp, grid)
    lmax = float(np.max(lg))
    # upper truncation: integrand below e^{-60} of its maximum
    hi = max(r + 12 * sb, 1.0)
    while float(_rhs_log_integrand(vp, np.array([hi]))[0]) > lmax - 60.0 or hi < r:
        hi *= 1.5
    pk = float(grid[int(np.argmax(lg))])
    bps = {0.0, hi}
    for k in range(-8, 9):
        x = pk + k * sb
        if 0 < x < hi:
            bps.add(x)
    for x in np.geomspace(1e-8, 1.0, 9) * min(pk if pk > 0 else 1.0, hi):
        bps.add(float(x))
    bps = np.array(sorted(bps))

    if nu >= 1.0:
        def f(s):
            # Kronrod nodes are interior, so s > 0 here
            return np.exp(_rhs_log_integrand(vp, s) - lmax)
        res = gk_integrate(f, bps, rtol=rtol)
    else:
        def f(sig):
            s = np.maximum(sig, 1e-300) ** (1.0 / nu)
            lv = (-s - (s - r) ** 2 / (4.0 * b) + bessel_kernel_log(nu, r, s, regular=True)
                  - math.log(nu) - lmax)
            return np.exp(lv)
        res = gk_integrate(f, np.unique(bps ** nu), rtol=rtol)
    if not res.converged and res.error > 1e3 * rtol * abs(res.value):
        raise AccuracyError("Plancherel right side did not converge", res.value, res.error)
    logv = 0.5 * math.log(math.pi / b) + lmax + math.log(res.value)
    return logv, res.error / res.value


def plancherel_rhs(vp: VParams, rtol=1e-13) -> float:
    """Right side ``V(r, b; nu)`` of the Bessel-Gaussian identity."""
    return math.exp(log_plancherel_rhs(vp, rtol)[0])


def plancherel_lhs(vp: VParams, rtol=1e-13) -> complex:
    """Left side: the tau-integral with the principal branch of ``(1+i tau)^{-nu}``.

    The imaginary part of the exact value is zero; its computed size is a
    direct measure of the quadrature error.
    """
    nu, r, b = vp.nu, vp.r, vp.b
    T = math.sqrt((r + 60.0 + nu * 0.5 * math.log1p(1.0 / b)) / b)
    width = min(0.5, math.pi / (r + 1.0), 2.0 / math.sqrt(b) if b > 0 else 0.5)
    m = max(8, int(math.ceil(2 * T / width)))
    bps = np.linspace(-T, T, m + 1)

    def f(tau):
        w = 1.0 + 1j * tau
        return np.exp(-nu * np.log(w) - b * tau * tau + 1j * r * tau + r / w)

    res = gk_integrate(f, bps, rtol=rtol, atol=1e-300)
    if not res.converged and res.error > 1e3 * rtol * abs(res.value):
        raise AccuracyError("Plancherel left side did not converge", res.value, res.error)
    return complex(res.value)


def ke1_ratio(vp: VParams, gamma0: float) -> dict:
    """``V`` together with the comparison quantity ``(r + sqrt b)^{nu - 1}``.

    Raises
    ------
    DomainError
        Outside the box ``0 <= r <= gamma0``, ``0 < b <= gamma0``.
    """
    if not (0 <= vp.r <= gamma0 and 0 < vp.b <= gamma0):
        raise DomainError(f"(r, b) = ({vp.r}, {vp.b}) outside the box [0, {gamma0}] x (0, {gamma0}]")
    V = plancherel_rhs(vp)
    bound = (vp.r + math.sqrt(vp.b)) ** (vp.nu - 1.0)
    return {"V": V, "bound": bound, "ratio": V / bound}


def lambda_split(vp: VParams) -> dict:
    """Upper-bound decomposition of ``V`` through ``s^{nu-1}`` domination.

    Returns ``Lambda1``, ``Lambda2`` (the integral of
    ``b^{-1/2} s^{nu-1} e^{-(s-r)^2/(4b)}`` split at ``r + sqrt b``) and
    ``C`` = sup_s of ``e^{-s} (s/r)^{(nu-1)/2} I_{nu-1}(2 sqrt(rs)) / s^{nu-1}``
    sampled on a grid, so that ``V <= sqrt(pi) C (Lambda1 + Lambda2)``.
    """
    nu, r, b = vp.nu, vp.r, vp.b
    sb = math.sqrt(b)
    cut = r + sb
    hi = cut + 60.0 * sb

    def g(s):
        s = np.maximum(s, 1e-300)
        return s ** (nu - 1.0) * np.exp(-(s - r) ** 2 / (4.0 * b)) / sb

    if nu < 1:
        def gs(sig):
            s = np.maximum(sig, 1e-300) ** (1.0 / nu)
            return np.exp(-(s - r) ** 2 / (4.0 * b)) / (sb * nu)
        l1 = gk_integrate(gs, [0.0, cut ** nu], rtol=1e-12).value
    else:
        l1 = gk_integrate(g, [0.0, cut], rtol=1e-12).value
    l2 = gk_integrate(g, [cut, hi], rtol=1e-12).value
    s = np.geomspace(1e-8, 1e3, 4000)
    C = float(np.max(np.exp(-s + bessel_kernel_log(nu, r, s, regular=True))))
    return {"Lambda1": float(l1), "Lambda2": float(l2), "C": C}


def s_factor(kl: int, D1: float, D2: float) -> float:
    """``S_{k_l}(D1, D2) = V(D1, D2; k_l)``."""
    if int(kl) != kl or kl < 1:
        raise DomainError("k_l must be a positive integer")
    return plancherel_rhs(VParams(float(kl), float(D1), float(D2)))
