r"""Heat kernel by quadrature: real line, shifted contour and convolution.

All routes reduce to time ``h = 1`` by the exact scaling
``p_h(z, t) = h^{-(n+1)} p(z/sqrt(h), t/h)`` and return values in log form,
since kernels far from the origin underflow double precision.

* :func:`kernel_direct` integrates ``h(lambda) e^{phi(lambda)}`` over the real
  line.  Its integrand is oscillatory with modulus up to ``e^{-|z|^2/4}``
  while the result is ``~e^{-d^2/4}``, so roughly ``(d^2 - |z|^2)/(4 ln 10)``
  decimal digits are lost to cancellation; the error estimate includes this
  floor.
* :func:`kernel_shifted` integrates along ``Im lambda = theta`` through the
  saddle point, where the integrand is non-oscillatory at leading order.
* :func:`kernel_convolution` uses the one-dimensional convolution identities
  for ``H(n,1)`` and ``H((1,1),(a_1,1))``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _elementary as el
from ._gk import gk_integrate
from .errors import AccuracyError, DomainError, RegimeError
from .geometry import GeodesicData, cut_bound, solve_geodesic
from .group_model import GroupSignature, RadialPoint
from .phase import ContourIntegrand, Height, phi_pp0

__all__ = [
    "Method",
    "KernelValue",
    "log_prefactor",
    "kernel",
    "kernel_direct",
    "kernel_shifted",
    "kernel_contour",
    "kernel_convolution",
    "gaveau_transform",
    "p11_profile",
    "DEFAULT_NODE_BUDGET",
    "SHIFT_EPS_GUARD",
]

PI = math.pi
_EPS = np.finfo(float).eps
DEFAULT_NODE_BUDGET = 2_000_000
SHIFT_EPS_GUARD = 1e-6


class Method(str, enum.Enum):
    DIRECT = "Direct"
    SHIFTED = "ShiftedContour"
    CONVOLUTION = "Convolution"
    ASYMPTOTIC = "Asymptotic"


@dataclass
class KernelValue:
    """A kernel value held as ``log_value`` with a relative error estimate."""

    log_value: float
    method: Method
    rel_err: float
    meta: Optional[GeodesicData] = None
    n_eval: int = 0
    details: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def err_estimate(self) -> float:
        return self.value * self.rel_err

    def as_record(self) -> dict:
        rec = {"value": self.value, "log_value": self.log_value, "method": self.method.value,
               "err": self.err_estimate, "rel_err": self.rel_err}
        if self.meta is not None:
            rec.update({"theta": self.meta.theta, "eps": self.meta.epsilon, "dsq": self.meta.dsq})
        return rec


def log_prefactor(n: int) -> float:
    """``log(1 / (2 (4 pi)^{n+1}))``."""
    return -math.log(2.0) - (n + 1) * math.log(4.0 * PI)


def _check_tol(tol):
    if not (1e-12 <= tol <= 1e-3):
        raise DomainError(f"tol must lie in [1e-12, 1e-3], got {tol}")


def _reduce(sig, p, h):
    p.check(sig)
    if not (h > 0 and math.isfinite(h)):
        raise DomainError(f"h must be positive, got {h}")
    if h == 1.0:
        return p, 0.0
    sh = math.sqrt(h)
    q = RadialPoint(tuple(v / sh for v in p.r), p.t / h)
    return q, -(sig.n + 1) * math.log(h)


# --------------------------------------------------------------------------
# line integrals at a fixed height


def _local_scales(ci: ContourIntegrand, height: Height):
    """Width of the central peak and local oscillation rate at ``s = 0``."""
    amp_scale = height.eps if height.near_pi else 1.0
    d = 1e-4 * min(1.0, amp_scale)
    dp = complex(ci.dphi(np.array([d]))[0])
    curv = -2.0 * dp.real / (d * d)
    width = 1.0 / math.sqrt(curv) if curv > 0 else 1.0
    omega = abs(dp.imag) / d
    return min(width, amp_scale, 1.0), omega


def _line_integral(sig, q, height, tol, node_budget, imag_check=False):
    """``M = int h(s + i eta) e^{phi(s+i eta) - phi(i eta)} ds`` and diagnostics.

    Returns a dict with ``M``, ``err``, ``absint``, ``phi0``, ``n_eval``,
    ``converged`` and optionally ``imag``.
    """
    ci = ContourIntegrand(sig, q, height)
    s0, omega = _local_scales(ci, height)
    # modulus scan on a geometric grid for the truncation point
    grid = np.geomspace(s0 / 16.0, max(200.0, 64.0 * s0), 400)
    mod = np.abs(ci(grid))
    peak = max(float(np.max(mod)), abs(ci.amp0))
    thr = 1e-3 * tol * peak * 1e-3
    above = np.nonzero(mod > thr)[0]
    L = float(grid[above[-1] + 1]) if above.size and above[-1] + 1 < grid.size else float(grid[-1])
    if above.size == 0:
        L = float(grid[0])
    L2 = min(2.0 * L, grid[-1])
    # breakpoints: geometric near the peak, uniform at the oscillation scale
    rate = max(omega, 0.25 * ci.t)
    w = L2 / 16.0
    if rate > 0:
        w = min(w, 2.5 * 2.0 * PI / rate)
    n_int = int(math.ceil(L2 / w))
    if 21 * n_int > node_budget:
        raise AccuracyError(
            f"{21 * n_int} initial nodes exceed the budget of {node_budget}", None, None)
    bps = set(np.linspace(0.0, L2, n_int + 1).tolist())
    k = s0 / 8.0
    while k < L2:
        bps.add(k)
        k *= 2.0
    bps = np.array(sorted(bps))

    def f(s):
        return ci(s).real

    res = gk_integrate(f, bps, rtol=0.05 * tol, atol=0.0,
                       max_intervals=max(node_budget // 21, len(bps) + 1))
    tail = float(mod[grid >= L2].max()) * L2 if np.any(grid >= L2) else 0.0
    out = {
        "M": 2.0 * float(res.value),
        "err": 2.0 * float(res.error) + 2.0 * tail,
        "absint": 2.0 * float(res.abs_integral),
        "phi0": ci.phi0,
        "n_eval": res.n_eval,
        "converged": res.converged,
        "L": L2,
    }
    if imag_check:
        full = gk_integrate(ci, np.concatenate([-bps[::-1], bps[1:]]), rtol=0.05 * tol,
                            max_intervals=max(node_budget // 21, 2 * len(bps)))
        out["imag"] = float(np.imag(full.value))
        out["M_full"] = float(np.real(full.value))
    return out


def _finish(sig, lab, method, logh, geo, tol, raise_on_fail):
    M, err = lab["M"], lab["err"]
    if not (M > 0):
        if raise_on_fail:
            raise AccuracyError("quadrature returned a non-positive kernel", M, err)
        return None
    rel = err / M
    logv = log_prefactor(sig.n) + lab["phi0"] + math.log(M) + logh
    kv = KernelValue(logv, method, rel, geo, lab["n_eval"],
                     {"M": M, "phi0": lab["phi0"], "L": lab["L"],
                      "loss": lab["absint"] / M})
    if "imag" in lab:
        kv.details["imag"] = lab["imag"]
    if (rel > tol) and raise_on_fail:
        raise AccuracyError(f"relative error estimate {rel:.3g} exceeds tol {tol:.3g}", kv.value, kv.err_estimate)
    return kv


def kernel_direct(sig: GroupSignature, p: RadialPoint, h: float = 1.0, tol: float = 1e-10,
                  delegate: bool = True, node_budget: int = DEFAULT_NODE_BUDGET,
                  imag_check: bool = False) -> KernelValue:
    """Heat kernel ``p_h`` by the real-line Fourier integral.

    Parameters
    ----------
    delegate : bool
        When the node budget is exceeded or the tolerance is unreachable
        (cancellation), hand over to the contour method instead of raising.

    Raises
    ------
    AccuracyError
        Only when ``delegate`` is false; carries the best value if any.
    """
    _check_tol(tol)
    q, logh = _reduce(sig, p, h)
    geo = None if q.is_origin else solve_geodesic(sig, q)
    try:
        lab = _line_integral(sig, q, Height.from_eta(0.0), tol, node_budget, imag_check)
        return _finish(sig, lab, Method.DIRECT, logh, geo, tol, True)
    except AccuracyError as exc:
        if not delegate:
            raise
        kv = kernel(sig, p, h, tol, method="auto")
        kv.details["delegated_from"] = Method.DIRECT.value
        kv.details["delegation_reason"] = str(exc)
        return kv


def kernel_contour(sig: GroupSignature, p: RadialPoint, height: Height, h: float = 1.0,
                   tol: float = 1e-10, node_budget: int = DEFAULT_NODE_BUDGET,
                   imag_check: bool = False, raise_on_fail: bool = True) -> KernelValue:
    """Kernel from the line ``Im lambda = eta`` for any ``0 <= eta < pi``."""
    _check_tol(tol)
    q, logh = _reduce(sig, p, h)
    geo = None if q.is_origin else solve_geodesic(sig, q)
    lab = _line_integral(sig, q, height, tol, node_budget, imag_check)
    return _finish(sig, lab, Method.SHIFTED, logh, geo, tol, raise_on_fail)


def kernel_shifted(sig: GroupSignature, p: RadialPoint, geo: Optional[GeodesicData] = None,
                   tol: float = 1e-10, h: float = 1.0, imag_check: bool = False) -> KernelValue:
    """Kernel from the contour through the saddle ``lambda = i theta``.

    ``geo`` refers to the time-one point ``p/sqrt(h)`` and is recomputed
    when omitted.

    Raises
    ------
    RegimeError
        On the cut locus or when ``eps < 1e-6``.
    """
    _check_tol(tol)
    q, logh = _reduce(sig, p, h)
    if q.is_origin:
        raise DomainError("the origin has no saddle contour; use kernel_direct")
    if geo is None or h != 1.0:
        geo = solve_geodesic(sig, q)
    if not geo.interior or geo.epsilon < SHIFT_EPS_GUARD:
        raise RegimeError(f"eps = {geo.epsilon:.3g} below the shift guard {SHIFT_EPS_GUARD}; "
                          "use kernel_direct or kernel(method='auto')")
    lab = _line_integral(sig, q, Height.from_geodesic(geo), tol, DEFAULT_NODE_BUDGET, imag_check)
    kv = _finish(sig, lab, Method.SHIFTED, logh, geo, tol, True)
    kv.details["phi_pp0"] = phi_pp0(sig, q, geo)
    return kv


def near_cut_height(sig: GroupSignature, q: RadialPoint, geo: GeodesicData) -> Height:
    """Contour height for points on or extremely close to the cut locus.

    ``eps_c`` is chosen so that ``phi(i eta) + d^2/4`` (the growth of the
    integrand above the final value) stays of order one.
    """
    excess = abs(q.t) - cut_bound(sig, q)
    eps_c = min(0.1, 1.0 / max(0.25 * excess, 1e-300))
    if geo.interior:
        eps_c = max(eps_c, geo.epsilon)
    return Height.from_eps(eps_c)


def kernel(sig: GroupSignature, p: RadialPoint, h: float = 1.0, tol: float = 1e-10,
           method: str = "auto") -> KernelValue:
    """Heat kernel by the requested method.

    ``auto`` uses the saddle contour for interior points and the near-cut
    contour of :func:`near_cut_height` on the cut locus (or when
    ``eps < 1e-6``); the real line is used at the origin and for ``t = 0``.
    """
    method = method.lower()
    if method == "direct":
        return kernel_direct(sig, p, h, tol, delegate=False)
    if method == "shifted":
        return kernel_shifted(sig, p, None, tol, h)
    if method in ("conv", "convolution"):
        return kernel_convolution(sig, p, tol, h)
    if method != "auto":
        raise DomainError(f"unknown method {method!r}")
    _check_tol(tol)
    q, logh = _reduce(sig, p, h)
    if q.is_origin:
        return kernel_direct(sig, p, h, tol, delegate=False)
    geo = solve_geodesic(sig, q)
    if geo.interior and geo.theta == 0.0:
        return kernel_direct(sig, p, h, tol, delegate=False)
    if geo.interior and geo.epsilon >= SHIFT_EPS_GUARD:
        return kernel_shifted(sig, p, geo if h == 1.0 else None, tol, h)
    return kernel_contour(sig, p, near_cut_height(sig, q, geo), h, tol)


# --------------------------------------------------------------------------
# Gaveau transform and convolution identities


def _gaveau_quad(m, s):
    """2 int_0^inf (lam/sinh lam)^m cos(lam s) d lam, vectorised over s."""
    lam_max = 60.0 / m + 8.0
    nint = int(math.ceil(lam_max * max(1.0, float(np.max(np.abs(s)))) / 1.5)) + 8
    res = gk_integrate(lambda x: (el.h1(x).real ** m)[None, :] * np.cos(np.outer(s, x)),
                       np.linspace(0.0, lam_max, nint + 1), rtol=1e-14, atol=1e-300)
    return 2.0 * res.value


def _gaveau_residues(m, s, n_pts=64, kmax=None):
    """Residue series in the lower half plane, for s > 0."""
    rho = min(0.5 * PI, 2.0 / float(np.min(s)))
    if kmax is None:
        kmax = int(math.ceil(40.0 / (PI * float(np.min(s))))) + 4
    phi = 2.0 * PI * (np.arange(n_pts) + 0.5) / n_pts
    circ = rho * np.exp(1j * phi)
    total = np.zeros(s.shape, dtype=complex)
    for k in range(1, kmax + 1):
        c = -1j * k * PI
        lam = c + circ
        f = (lam / np.sinh(lam)) ** m
        # e^{-i lam s} = e^{-k pi s} e^{-i rho e^{i phi} s}
        g = f[None, :] * np.exp(-1j * np.outer(s, circ)) * circ[None, :]
        total += np.exp(-k * PI * s) * g.mean(axis=1)
    return (-2j * PI * total).real


def gaveau_transform(power: int, s):
    """``int (lambda/sinh lambda)^power e^{-i lambda s} d lambda``.

    ``power = 1`` uses the closed form ``pi^2/(1 + cosh(pi s))``; higher
    powers use quadrature for ``|s| <= 2`` and the residue series at the
    poles ``-i k pi`` beyond.
    """
    if int(power) != power or power < 1:
        raise DomainError("power must be a positive integer")
    s_arr = np.abs(np.atleast_1d(np.asarray(s, dtype=float)))
    if power == 1:
        out = PI**2 / (1.0 + np.cosh(PI * s_arr))
    else:
        out = np.empty_like(s_arr)
        near = s_arr <= 2.0
        if np.any(near):
            out[near] = _gaveau_quad(power, s_arr[near])
        if np.any(~near):
            out[~near] = _gaveau_residues(power, s_arr[~near])
    return float(out[0]) if np.ndim(s) == 0 else out


def p11_profile(r: float, tau, tol=1e-13):
    """``p^{H(1,1)}(r, tau)`` on an array of ``tau`` by one vectorised quadrature."""
    tau = np.asarray(tau, dtype=float)
    r2 = r * r
    lam_max = 45.0 / (1.0 + r2 / 4.0) + 6.0
    tmax = float(np.max(np.abs(tau))) if tau.size else 0.0
    nint = int(math.ceil(lam_max / min(1.0, 2.5 * 8.0 * PI / max(tmax, 1e-12)))) + 4

    def f(x):
        env = (el.h1(x) * np.exp(-0.25 * r2 * (el.h2(x) - 1.0))).real
        return env[None, :] * np.cos(0.25 * np.outer(tau, x))

    res = gk_integrate(f, np.linspace(0.0, lam_max, nint + 1), rtol=tol, atol=1e-300)
    return 2.0 * res.value * math.exp(log_prefactor(1) - 0.25 * r2)


def _p_origin_line(m, u):
    """``p^{H(m,1)}(o, u)`` from the Gaveau transform."""
    return gaveau_transform(m, np.asarray(u) / 4.0) * math.exp(log_prefactor(m))


def kernel_convolution(sig: GroupSignature, p: RadialPoint, tol: float = 1e-10,
                       h: float = 1.0) -> KernelValue:
    """Kernel from a one-dimensional convolution of lower-dimensional kernels.

    ``H(n,1)``: ``p(z, .) = p^{H(1,1)}(|z|, .) * p^{H(n-1,1)}(o, .)``.
    ``H((1,1),(a,1))``: ``p(z, t) = (1/a) (p^{H(1,1)}(z_1, ./a) * p^{H(1,1)}(z_2, .))(t)``.
    """
    q, logh = _reduce(sig, p, h)
    t = q.t
    if sig.isotropic and sig.n >= 2:
        r = q.r[0]

        def f(u):
            return p11_profile(r, t - u) * _p_origin_line(sig.n - 1, u)
    elif sig.l == 2 and sig.k == (1, 1):
        a1 = sig.a[0]
        r1, r2 = q.r

        def f(u):
            return p11_profile(r1, u / a1) * p11_profile(r2, t - u) / a1
    else:
        raise DomainError(f"no convolution identity for {sig}")
    U = abs(t) + 60.0
    bps = np.unique(np.concatenate([np.linspace(-U, U, 25), [0.0, t]]))
    res = gk_integrate(f, bps, rtol=0.1 * tol, atol=1e-300)
    val = float(res.value)
    if not val > 0:
        raise AccuracyError("convolution returned a non-positive value", val, float(res.error))
    geo = None if q.is_origin else solve_geodesic(sig, q)
    return KernelValue(math.log(val) + logh, Method.CONVOLUTION, float(res.error) / val, geo, res.n_eval)
