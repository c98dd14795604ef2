"""scikit-learn style wrappers for the calibration tasks.

Only the pieces that genuinely have a fit step are wrapped: the empirical
constants of the two-sided estimates and of the gradient bound.  Kernel
evaluation itself has nothing to learn; :class:`HeatKernelDensity` exposes
it through ``score_samples`` so it can sit in a pipeline.

Rows of ``X``:

* radial layout ``(r_1, ..., r_l, t)`` for :class:`HeatKernelDensity` and
  :class:`SandwichCalibrator` (an extra last column ``h`` is accepted by the
  calibrator);
* full layout ``(x_1, y_1, ..., x_l, y_l, t)`` (see ``FullPoint.to_vector``)
  for :class:`GradientBoundCalibrator`.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .bounds import Comparator, grad_log, log_comparator
from .geometry import solve_geodesic
from .group_model import FullPoint, GroupSignature, RadialPoint, reduce_point, signature_preset
from .quadrature_kernel import kernel

__all__ = ["HeatKernelDensity", "SandwichCalibrator", "GradientBoundCalibrator"]


def _signature(sig):
    if isinstance(sig, GroupSignature):
        return sig
    if isinstance(sig, str):
        return signature_preset(sig)
    if isinstance(sig, dict):
        return GroupSignature.from_record(sig)
    raise ValueError(f"cannot interpret signature {sig!r}")


def _radial_rows(X, sig, allow_h=False):
    X = check_array(X, dtype=np.float64)
    width = sig.l + 1
    if X.shape[1] not in ((width, width + 1) if allow_h else (width,)):
        raise ValueError(f"expected {width} columns (r_1..r_l, t)"
                         + (" plus optional h" if allow_h else "") + f", got {X.shape[1]}")
    if np.any(X[:, :sig.l] < 0):
        raise ValueError("block moduli must be non-negative")
    return X


class HeatKernelDensity(BaseEstimator):
    """Heat kernel ``p_h`` as a (fixed) density on the group.

    Parameters
    ----------
    sig : str, dict or GroupSignature
    h : float
        Diffusion time.
    tol : float
        Relative tolerance of each kernel evaluation.
    """

    def __init__(self, sig="h11", h=1.0, tol=1e-10):
        self.sig = sig
        self.h = h
        self.tol = tol

    def fit(self, X=None, y=None):
        self.signature_ = _signature(self.sig)
        if not self.h > 0:
            raise ValueError("h must be positive")
        if X is not None:
            self.n_features_in_ = _radial_rows(X, self.signature_).shape[1]
        return self

    def score_samples(self, X):
        """log ``p_h`` for each row."""
        check_is_fitted(self, "signature_")
        sig = self.signature_
        X = _radial_rows(X, sig)
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            p = RadialPoint(tuple(row[:sig.l]), row[sig.l])
            out[i] = kernel(sig, p, self.h, self.tol).log_value
        return out

    def transform(self, X):
        return self.score_samples(X)[:, None]


class SandwichCalibrator(BaseEstimator):
    """Learns ``[ratioMin, ratioMax]`` of kernel/comparator on the training rows.

    ``predict`` returns the band ``comparator * [ratioMin, ratioMax]`` in log
    form (two columns); ``score`` is the fraction of rows whose kernel falls
    inside it.
    """

    def __init__(self, comparator="HEB1", sig="h11", varpi=2.0, tol=1e-10):
        self.comparator = comparator
        self.sig = sig
        self.varpi = varpi
        self.tol = tol

    def _rows(self, X):
        sig = self.signature_
        X = _radial_rows(X, sig, allow_h=True)
        hs = X[:, sig.l + 1] if X.shape[1] == sig.l + 2 else np.ones(X.shape[0])
        pts = [RadialPoint(tuple(r[:sig.l]), r[sig.l]) for r in X]
        return pts, hs

    def _log_pair(self, X):
        sig, kind = self.signature_, Comparator(self.comparator)
        pts, hs = self._rows(X)
        lk = np.array([kernel(sig, p, h, self.tol).log_value for p, h in zip(pts, hs)])
        lc = np.array([log_comparator(kind, sig, p, h, self.varpi) for p, h in zip(pts, hs)])
        return lk, lc

    def fit(self, X, y=None):
        self.signature_ = _signature(self.sig)
        lk, lc = self._log_pair(X)
        lr = lk - lc
        self.log_ratio_min_ = float(lr.min())
        self.log_ratio_max_ = float(lr.max())
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    @property
    def ratio_min_(self):
        return math.exp(self.log_ratio_min_)

    @property
    def ratio_max_(self):
        return math.exp(self.log_ratio_max_)

    def predict(self, X):
        check_is_fitted(self, "log_ratio_min_")
        sig, kind = self.signature_, Comparator(self.comparator)
        pts, hs = self._rows(X)
        lc = np.array([log_comparator(kind, sig, p, h, self.varpi) for p, h in zip(pts, hs)])
        return np.column_stack([lc + self.log_ratio_min_, lc + self.log_ratio_max_])

    def score(self, X, y=None):
        check_is_fitted(self, "log_ratio_min_")
        lk, lc = self._log_pair(X)
        lr = lk - lc
        slack = 1e-9
        inside = (lr >= self.log_ratio_min_ - slack) & (lr <= self.log_ratio_max_ + slack)
        return float(np.mean(inside))


class GradientBoundCalibrator(BaseEstimator):
    """Calibrates ``C`` in ``|grad ln p_h(g)| <= C d(g) / h``.

    ``fit`` takes the supremum over the training points; ``predict`` returns
    ``C d / h`` and ``score`` the fraction of rows satisfying the bound.
    """

    def __init__(self, sig="h11", h=1.0, margin=0.0):
        self.sig = sig
        self.h = h
        self.margin = margin

    def _ratios(self, X):
        sig = self.signature_
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2 * sig.n + 1:
            raise ValueError(f"expected {2 * sig.n + 1} columns in full layout, got {X.shape[1]}")
        norms, ds = [], []
        for row in X:
            fp = FullPoint.from_vector(sig, row)
            norms.append(float(np.linalg.norm(grad_log(sig, fp, self.h))))
            ds.append(solve_geodesic(sig, reduce_point(fp)).d)
        return np.array(norms), np.array(ds)

    def fit(self, X, y=None):
        self.signature_ = _signature(self.sig)
        norms, ds = self._ratios(X)
        self.constant_ = float(np.max(norms * self.h / ds)) * (1.0 + self.margin)
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "constant_")
        X = check_array(X, dtype=np.float64)
        ds = np.array([solve_geodesic(self.signature_, reduce_point(FullPoint.from_vector(self.signature_, r))).d
                       for r in X])
        return self.constant_ * ds / self.h

    def score(self, X, y=None):
        check_is_fitted(self, "constant_")
        norms, ds = self._ratios(X)
        return float(np.mean(norms <= self.constant_ * ds / self.h))
