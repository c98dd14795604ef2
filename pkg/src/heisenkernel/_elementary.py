"""Cancellation-free elementary functions used by geometry and phase.

Everything here is built on the Laurent/Taylor expansion

    x cot x = sum_{k>=0} c_k x^{2k},   c_k = (-1)^k 4^k B_{2k} / (2k)!,

which converges for |x| < pi.  Inside |x| <= SERIES_RADIUS the truncated
series is accurate to double precision and avoids the severe cancellation of
the closed forms (e.g. x/sin^2 x - cot x near 0).  Outside it the closed forms
are well conditioned.  All functions accept real or complex arrays.
"""

import math
from fractions import Fraction

import numpy as np

SERIES_RADIUS = 1.0
_NTERMS = 22


def _bernoulli_numbers(m):
    # exact rationals; scipy's float version loses ~1e-12 at high order
    b = [Fraction(0)] * (m + 1)
    b[0] = Fraction(1)
    for j in range(1, m + 1):
        b[j] = -sum(math.comb(j + 1, i) * b[i] for i in range(j)) / (j + 1)
    return b


_B = _bernoulli_numbers(2 * _NTERMS)
# c_k for k = 0.._NTERMS
_C = np.array([float((-1) ** k * 4**k * _B[2 * k] / math.factorial(2 * k)) for k in range(_NTERMS + 1)])
_KS = np.arange(_NTERMS + 1, dtype=float)


def _poly(coef, powers, x):
    """Evaluate sum_k coef[k] x**powers[k] by Horner in x**2.

    ``powers`` must be of the form ``2k + p0``.
    """
    x2 = x * x
    acc = np.zeros_like(x2)
    for c in coef[::-1]:
        acc = acc * x2 + c
    p0 = int(powers[0])
    if p0 == 0:
        return acc
    if p0 > 0:
        return acc * x**p0
    return acc / x ** (-p0)


def _series(x, deriv, which):
    """Derivative ``deriv`` of x cot x (which='g1') or cot x - 1/x ('cotm')."""
    k = _KS[1:]
    c = _C[1:]
    if which == "g1":
        p = 2 * k
    else:
        p = 2 * k - 1
    coef = c.copy()
    for d in range(deriv):
        coef = coef * (p - d)
    powers = p - deriv
    keep = powers >= 0
    coef, powers = coef[keep], powers[keep]
    out = _poly(coef, powers, x)
    if which == "g1" and deriv == 0:
        out = out + 1.0
    return out


def _split(x):
    x = np.asarray(x)
    cplx = np.iscomplexobj(x)
    x = x.astype(complex if cplx else float)
    small = np.abs(x) <= SERIES_RADIUS
    return x, small


def _combine(x, small, series_fn, closed_fn):
    out = np.empty_like(x)
    if np.any(small):
        out[small] = series_fn(x[small])
    big = ~small
    if np.any(big):
        out[big] = closed_fn(x[big])
    return out


def xcotx(x, deriv=0):
    """``d^deriv/dx^deriv (x cot x)`` for deriv in 0..3."""
    x, small = _split(x)

    def closed(v):
        s, c = np.sin(v), np.cos(v)
        if deriv == 0:
            return v * c / s
        if deriv == 1:
            return -(v / s**2 - c / s)
        if deriv == 2:
            return -2.0 * (s - v * c) / s**3
        return -(2.0 * v * s**2 - 6.0 * c * (s - v * c)) / s**4

    return _combine(x, small, lambda v: _series(v, deriv, "g1"), closed)


def mu(x):
    """x/sin^2 x - cot x, equal to minus the derivative of x cot x."""
    return -xcotx(x, 1)


def mu_prime(x):
    return -xcotx(x, 2)


def mu_second(x):
    return -xcotx(x, 3)


def cotm(x, deriv=0):
    """``d^deriv/dx^deriv (cot x - 1/x)`` for deriv in 0..3."""
    x, small = _split(x)

    def closed(v):
        s, c = np.sin(v), np.cos(v)
        if deriv == 0:
            return c / s - 1.0 / v
        if deriv == 1:
            return -1.0 / s**2 + 1.0 / v**2
        if deriv == 2:
            return 2.0 * c / s**3 - 2.0 / v**3
        return -2.0 * (1.0 + 2.0 * c**2) / s**4 + 6.0 / v**4

    return _combine(x, small, lambda v: _series(v, deriv, "cotm"), closed)


def x_over_sin(x):
    """x / sin x with the removable singularity at 0 filled in."""
    x = np.asarray(x)
    x = x.astype(complex if np.iscomplexobj(x) else float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-8
    out[nz] = x[nz] / np.sin(x[nz])
    z = ~nz
    out[z] = 1.0 + x[z] ** 2 / 6.0
    return out


# --- hyperbolic helpers safe for large real parts ---------------------------

_BIG = 20.0


def _as_complex(w):
    return np.asarray(w, dtype=complex)


def h1(w):
    """w / sinh w."""
    w = _as_complex(w)
    out = np.empty_like(w)
    re = w.real
    big = np.abs(re) > _BIG
    tiny = (np.abs(w) < 1e-4) & ~big
    mid = ~big & ~tiny
    if np.any(big):
        v = w[big]
        sg = np.sign(v.real)
        e = np.exp(-sg * v)
        out[big] = 2.0 * sg * v * e / (1.0 - e * e)
    if np.any(tiny):
        v2 = w[tiny] ** 2
        out[tiny] = 1.0 - v2 / 6.0 + 7.0 * v2 * v2 / 360.0
    if np.any(mid):
        v = w[mid]
        out[mid] = v / np.sinh(v)
    return out


def h2(w):
    """w coth w."""
    w = _as_complex(w)
    out = np.empty_like(w)
    re = w.real
    big = np.abs(re) > _BIG
    tiny = (np.abs(w) < 1e-4) & ~big
    mid = ~big & ~tiny
    if np.any(big):
        v = w[big]
        sg = np.sign(v.real)
        e = np.exp(-2.0 * sg * v)
        out[big] = sg * v * (1.0 + e) / (1.0 - e)
    if np.any(tiny):
        v2 = w[tiny] ** 2
        out[tiny] = 1.0 + v2 / 3.0 - v2 * v2 / 45.0
    if np.any(mid):
        v = w[mid]
        out[mid] = v / np.tanh(v)
    return out


def csch(u):
    """1 / sinh u (u away from the poles)."""
    u = _as_complex(u)
    out = np.empty_like(u)
    big = np.abs(u.real) > _BIG
    if np.any(big):
        v = u[big]
        sg = np.sign(v.real)
        e = np.exp(-sg * v)
        out[big] = 2.0 * sg * e / (1.0 - e * e)
    if np.any(~big):
        out[~big] = 1.0 / np.sinh(u[~big])
    return out


def coth(u):
    """coth u (u away from the poles)."""
    u = _as_complex(u)
    out = np.empty_like(u)
    big = np.abs(u.real) > _BIG
    if np.any(big):
        v = u[big]
        sg = np.sign(v.real)
        e = np.exp(-2.0 * sg * v)
        out[big] = sg * (1.0 + e) / (1.0 - e)
    if np.any(~big):
        out[~big] = 1.0 / np.tanh(u[~big])
    return out
