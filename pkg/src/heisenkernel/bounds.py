"""Two-sided heat kernel estimates, measured empirically.

The estimates hold up to unspecified constants; a sweep over a grid reports
the observed range ``[ratioMin, ratioMax]`` of kernel/comparator together
with the points where the extremes occur.  Ratios are accumulated in log form
(kernels at the far end of a grid are below the double-precision range).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _elementary as el
from ._gk import gk_integrate
from .errors import AccuracyError, DomainError
from .geometry import mu, solve_geodesic
from .group_model import FullPoint, GroupSignature, RadialPoint, reduce_point
from .quadrature_kernel import gaveau_transform, kernel, kernel_direct, log_prefactor
from .phase import phi

__all__ = [
    "Comparator",
    "SandwichReport",
    "comparator_value",
    "log_comparator",
    "standard_grid",
    "sandwich_sweep",
    "grad_log",
    "grad_log_check",
    "GRAD_CONSTANT",
    "xy_mixed_fd",
    "xy_mixed_quadrature",
    "lm4_bound_check",
]

log = logging.getLogger(__name__)
PI = math.pi

# sup |grad ln p_1| / d on H(1,1); the ratio tends to 1 as d -> 0 along
# t = 0 and to 1/2 as d -> infinity.  Re-derived by ``GradientBoundCalibrator``.
GRAD_CONSTANT = 1.0


class Comparator(str, enum.Enum):
    IHE = "IHE"
    HEB1 = "HEB1"
    PEHK = "PEHK"
    HU1 = "HU1"
    HL1 = "HL1"
    LM4 = "Lm4"


def log_comparator(kind, sig: GroupSignature, p: RadialPoint, h: float = 1.0,
                   varpi: float = 2.0, geo=None) -> float:
    """log of the comparator expression of ``kind`` at ``(p, h)``."""
    kind = Comparator(kind)
    if not h > 0:
        raise DomainError("h must be positive")
    p.check(sig)
    n, Q = sig.n, sig.Q
    if p.is_origin:
        d, dsq, eps_star = 0.0, 0.0, 1.0
    else:
        geo = geo or solve_geodesic(sig, p)
        d, dsq, eps_star = geo.d, geo.dsq, geo.epsilon_star
    z = p.r_total
    gauss = -0.25 * dsq / h
    if kind in (Comparator.IHE, Comparator.HEB1):
        if not sig.isotropic:
            raise DomainError(f"{kind.value} is stated for isotropic groups")
        if kind is Comparator.HEB1 and n != 1:
            raise DomainError("HEB1 is stated for H(1,1)")
        return (-(n + 1) * math.log(h) + gauss + 2 * (n - 1) * math.log1p(d / math.sqrt(h))
                + (0.5 - n) * math.log1p(z * d / h))
    if kind is Comparator.PEHK:
        if not eps_star > 0:
            raise DomainError("PEHK needs eps_* = sin(theta)/theta > 0 (cut locus excluded)")
        zl2 = p.r[-1] ** 2
        sh = math.sqrt(h)
        first = -0.5 * math.log1p(z * z * eps_star ** 2 / h + zl2 / (h * eps_star))
        kl = sig.k[-1]
        second = 0.0
        if kl != 1:
            num = h + sh * z + zl2 / eps_star ** 2
            den = h + sh * z * eps_star + zl2 / eps_star
            second = (kl - 1) * math.log(num / den)
        return -(n + 1) * math.log(h) + first + second + gauss
    if kind is Comparator.HU1:
        return -0.5 * Q * math.log(h) + (Q - 1) * math.log1p(d / math.sqrt(h)) + gauss
    if kind is Comparator.HL1:
        if not 0 < varpi < 4:
            raise DomainError("varpi must lie in (0, 4)")
        return -0.5 * Q * math.log(h) - dsq / ((4.0 - varpi) * h)
    raise DomainError(f"unknown comparator {kind}")


def comparator_value(kind, sig, p, h=1.0, varpi=2.0) -> float:
    """Comparator expression, without the implicit constant."""
    return math.exp(log_comparator(kind, sig, p, h, varpi))


@dataclass
class SandwichReport:
    """Observed range of kernel / comparator over a grid."""

    comparator: Comparator
    grid: list
    log_ratio_min: float
    log_ratio_max: float
    argmin: dict
    argmax: dict
    skipped: list = field(default_factory=list)

    @property
    def ratioMin(self) -> float:
        return math.exp(self.log_ratio_min)

    @property
    def ratioMax(self) -> float:
        return math.exp(self.log_ratio_max)

    @property
    def spread(self) -> float:
        return math.exp(self.log_ratio_max - self.log_ratio_min)

    def summary(self) -> dict:
        return {"comparator": self.comparator.value, "n": len(self.grid), "ratioMin": self.ratioMin,
                "ratioMax": self.ratioMax, "spread": self.spread, "skipped": len(self.skipped)}


GRID_THETA = (0.0, 0.3, 1.0, 1.8, 2.5, 2.9, 3.05, 3.12)
GRID_D = (0.1, 0.5, 1.0, 2.0, 4.0, 7.0, 12.0, 20.0)
GRID_H = (0.25, 1.0, 4.0)
_SPLITS = (0.0, 0.3, 0.7, 1.0)


def _point_at(sig, theta, d, split):
    """Radial point with critical angle ``theta`` and distance ``d``.

    ``split`` is the share of ``|z|^2`` carried by the last block (ignored
    when ``l = 1``); remaining mass is spread evenly over the other blocks.
    """
    l = sig.l
    if l == 1:
        w = np.array([1.0])
    else:
        w = np.full(l, (1.0 - split) / (l - 1))
        w[-1] = split
    a = sig.a_arr
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(a * theta == 0, 1.0, (a * theta) / np.sin(a * theta))
    scale = d / math.sqrt(float(np.sum(w * amp ** 2)))
    r = np.sqrt(w) * scale
    t = float(np.sum(a * mu(a * theta) * r * r))
    return RadialPoint(tuple(float(v) for v in r), t)


def standard_grid(sig: GroupSignature, thetas=GRID_THETA, ds=GRID_D, hs=GRID_H):
    """The 200-point sweep grid: 8 angles x 8 distances x 3 times, plus 8
    points on the t-axis (``z = 0``, the cut locus) at ``h = 1``.

    Returns a list of ``(RadialPoint, h)`` in a fixed order.
    """
    pts = []
    idx = 0
    for h in hs:
        for th in thetas:
            for d in ds:
                pts.append((_point_at(sig, th, d, _SPLITS[idx % len(_SPLITS)]), h))
                idx += 1
    for d in ds:
        pts.append((RadialPoint((0.0,) * sig.l, d * d / PI), 1.0))
    return pts


def sandwich_sweep(kind, sig: GroupSignature, grid=None, varpi: float = 2.0,
                   tol: float = 1e-10) -> SandwichReport:
    """Kernel (by :func:`kernel_direct`, delegating when necessary) over comparator.

    Points where the comparator is undefined or the kernel fails are skipped
    and logged, and listed in ``report.skipped``.
    """
    kind = Comparator(kind)
    grid = standard_grid(sig) if grid is None else grid
    rows, skipped = [], []
    for i, (p, h) in enumerate(grid):
        try:
            lc = log_comparator(kind, sig, p, h, varpi)
            kv = kernel_direct(sig, p, h, tol)
        except (DomainError, AccuracyError) as exc:
            log.info("sweep %s: skipped point %d %s h=%g: %s", kind.value, i, p, h, exc)
            skipped.append({"index": i, "r": p.r, "t": p.t, "h": h, "reason": str(exc)})
            continue
        rows.append({"index": i, "r": p.r, "t": p.t, "h": h, "log_kernel": kv.log_value,
                     "log_comparator": lc, "log_ratio": kv.log_value - lc, "method": kv.method.value})
    if not rows:
        raise AccuracyError(f"no grid point could be evaluated for {kind.value}")
    lr = np.array([r["log_ratio"] for r in rows])
    imin, imax = int(np.argmin(lr)), int(np.argmax(lr))
    log.info("sweep %s: ratio range [%.4g, %.4g] (argmin %s, argmax %s)", kind.value,
             math.exp(lr[imin]), math.exp(lr[imax]), rows[imin], rows[imax])
    return SandwichReport(kind, rows, float(lr[imin]), float(lr[imax]), rows[imin], rows[imax], skipped)


# --------------------------------------------------------------------------
# derivatives along the left-invariant fields


def _field_vectors(sig: GroupSignature, fp: FullPoint):
    """Coordinate vectors of ``X_{i,j} = d/dx + 2 a_i y d/dt`` and
    ``Y_{i,j} = d/dy - 2 a_i x d/dt`` at ``fp``, in ``to_vector`` layout."""
    dim = 2 * sig.n + 1
    out = []
    pos = 0
    for ai, kj, xb, yb in zip(sig.a, sig.k, fp.x, fp.y):
        for j in range(kj):
            vx = np.zeros(dim)
            vx[pos + j] = 1.0
            vx[-1] = 2.0 * ai * yb[j]
            vy = np.zeros(dim)
            vy[pos + kj + j] = 1.0
            vy[-1] = -2.0 * ai * xb[j]
            out.append(vx)
            out.append(vy)
        pos += 2 * kj
    return out


def _log_kernel_full(sig, v, h, tol):
    fp = FullPoint.from_vector(sig, v)
    return kernel(sig, reduce_point(fp), h, tol).log_value


def grad_log(sig: GroupSignature, fp: FullPoint, h: float = 1.0, tol: float = 1e-12) -> np.ndarray:
    """Horizontal gradient of ``ln p_h`` by central differences along each field.

    Step ``1e-5 (1 + |coordinate|)`` scaled by ``sqrt(h)``, Richardson-extrapolated once.
    """
    fp.check(sig)
    v0 = fp.to_vector()
    if not np.any(v0):
        raise DomainError("the gradient check excludes the origin")
    scale = math.sqrt(h)
    comps = []
    for vec in _field_vectors(sig, fp):
        coord = float(np.max(np.abs(v0[vec != 0]))) if np.any(vec != 0) else 0.0
        delta = 1e-5 * (scale + coord)
        if delta < 1e3 * np.finfo(float).eps * (1.0 + coord):
            raise AccuracyError("finite-difference step underflows")

        def D(dl):
            fpl = _log_kernel_full(sig, v0 + dl * vec, h, tol)
            fmi = _log_kernel_full(sig, v0 - dl * vec, h, tol)
            return (fpl - fmi) / (2.0 * dl)

        comps.append((4.0 * D(0.5 * delta) - D(delta)) / 3.0)
    return np.array(comps)


def grad_log_check(sig: GroupSignature, fp: FullPoint, h: float = 1.0, C: Optional[float] = None) -> dict:
    """``|grad ln p_h|`` against ``C d(g) / h``."""
    C = GRAD_CONSTANT if C is None else C
    g = grad_log(sig, fp, h)
    norm = float(np.linalg.norm(g))
    d = solve_geodesic(sig, reduce_point(fp)).d
    bound = C * d / h
    return {"gradNorm": norm, "bound": bound, "ok": bool(norm <= bound), "d": d, "components": g.tolist()}


def xy_mixed_quadrature(sig: GroupSignature, fp: FullPoint, tol: float = 1e-12) -> float:
    r"""``X_{1,1} Y_{1,1} p`` at time one from the four-integral expansion

    .. math:: c\int h e^{\varphi}\Big[-\tfrac{i}{2} a\lambda + \tfrac14 xy (A^2 + a^2\lambda^2)
              + \tfrac{i}{4}(x^2 - y^2)\, a\lambda A\Big] d\lambda,
              \quad A = a\lambda\coth(a\lambda),

    where ``h1(a lam) sinh(a lam) = a lam`` and ``h1^2 cosh^2 = A^2`` etc.
    The integral runs over the real line.
    """
    fp.check(sig)
    p = reduce_point(fp)
    a = sig.a[0]
    x, y = float(fp.x[0][0]), float(fp.y[0][0])
    k = np.asarray(sig.k, dtype=float)
    av = sig.a_arr

    def f(lam):
        amp = np.prod(el.h1(np.outer(av, lam)) ** k[:, None], axis=0)
        e = np.exp(phi(sig, p, lam))
        al = a * lam
        A = el.h2(al)
        w = -0.5j * al + 0.25 * x * y * (A * A + al * al) + 0.25j * (x * x - y * y) * al * A
        return amp * e * w

    L = 60.0
    period = 8.0 * PI / max(abs(p.t), 1e-12)
    nint = int(min(20000, math.ceil(2 * L / min(1.0, 2.5 * period))))
    res = gk_integrate(f, np.linspace(-L, L, nint + 1), rtol=tol, atol=1e-300)
    return float(np.real(res.value)) * math.exp(log_prefactor(sig.n))


def xy_mixed_fd(sig: GroupSignature, fp: FullPoint, delta: float = 2e-3, tol: float = 1e-12) -> float:
    """``X_{1,1} Y_{1,1} p`` at time one by nested central differences.

    ``XY p = p_xy - 2a p_t - 2a x p_xt + 2a y p_yt - 4a^2 x y p_tt`` in the
    coordinates of the first block; each partial uses a Richardson pair.
    """
    fp.check(sig)
    v0 = fp.to_vector()
    a = sig.a[0]
    ix, iy, it = 0, sig.k[0], v0.size - 1
    x, y = v0[ix], v0[iy]

    def P(v):
        return math.exp(_log_kernel_full(sig, v, 1.0, tol))

    def partial2(i, j, dl):
        ei = np.zeros_like(v0)
        ej = np.zeros_like(v0)
        ei[i] = dl
        ej[j] = dl
        if i == j:
            return (P(v0 + ei) - 2 * P(v0) + P(v0 - ei)) / (dl * dl)
        return (P(v0 + ei + ej) - P(v0 + ei - ej) - P(v0 - ei + ej) + P(v0 - ei - ej)) / (4 * dl * dl)

    def partial1(i, dl):
        ei = np.zeros_like(v0)
        ei[i] = dl
        return (P(v0 + ei) - P(v0 - ei)) / (2 * dl)

    def rich(fn, *args):
        return (4.0 * fn(*args, 0.5 * delta) - fn(*args, delta)) / 3.0

    return (rich(partial2, ix, iy) - 2 * a * rich(partial1, it) - 2 * a * x * rich(partial2, ix, it)
            + 2 * a * y * rich(partial2, iy, it) - 4 * a * a * x * y * rich(partial2, it, it))


def lm4_bound_check(n: int, s_grid: Sequence[float]) -> SandwichReport:
    """Ratio of ``int (lam/sinh lam)^{n-1} e^{-i lam s} d lam`` to
    ``(1 + pi|s|)^{n-2} e^{-pi|s|}`` over ``s_grid``."""
    if int(n) != n or n < 2:
        raise DomainError("n must be an integer >= 2")
    s = np.asarray(s_grid, dtype=float)
    val = np.atleast_1d(gaveau_transform(n - 1, s))
    lc = (n - 2) * np.log1p(PI * np.abs(s)) - PI * np.abs(s)
    lr = np.log(val) - lc
    rows = [{"s": float(si), "value": float(vi), "log_ratio": float(li)} for si, vi, li in zip(s, val, lr)]
    imin, imax = int(np.argmin(lr)), int(np.argmax(lr))
    return SandwichReport(Comparator.LM4, rows, float(lr[imin]), float(lr[imax]),
                          rows[imin], rows[imax])
