import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from heisenkernel import kernel, log_comparator, signature_preset, RadialPoint
from heisenkernel.estimators import GradientBoundCalibrator, HeatKernelDensity, SandwichCalibrator
from heisenkernel.verification import gradient_grid, point_on_ray


def radial_rows(sig, pairs):
    return np.array([list(p.r) + [p.t] for p in (point_on_ray(sig, th, d) for th, d in pairs)])


def test_density_params_and_clone():
    est = HeatKernelDensity(sig="h5", h=2.0)
    assert est.get_params() == {"sig": "h5", "h": 2.0, "tol": 1e-10}
    c = clone(est).set_params(h=0.5)
    assert c.h == 0.5 and est.h == 2.0


def test_density_matches_kernel():
    s = signature_preset("h11")
    X = radial_rows(s, [(0.5, 1.0), (2.0, 3.0)])
    est = HeatKernelDensity().fit(X)
    out = est.score_samples(X)
    for row, v in zip(X, out):
        assert v == pytest.approx(kernel(s, RadialPoint((row[0],), row[1])).log_value, rel=1e-12)
    assert est.transform(X).shape == (2, 1)
    assert est.n_features_in_ == 2


def test_density_validation():
    est = HeatKernelDensity()
    with pytest.raises(NotFittedError):
        est.score_samples(np.zeros((1, 2)))
    est.fit()
    with pytest.raises(ValueError):
        est.score_samples(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        est.score_samples(np.array([[-1.0, 0.0]]))
    with pytest.raises(ValueError):
        HeatKernelDensity(h=0.0).fit()
    with pytest.raises(ValueError):
        HeatKernelDensity(sig=3).fit()


def test_signature_as_dict():
    est = HeatKernelDensity(sig={"l": 1, "k": [1], "a": [1.0]}).fit()
    assert est.signature_ == signature_preset("h11")


def test_sandwich_calibrator():
    s = signature_preset("h11")
    X = radial_rows(s, [(th, d) for th in (0.3, 1.5, 2.8) for d in (0.5, 2.0, 6.0)])
    est = SandwichCalibrator(comparator="HEB1").fit(X)
    assert 0 < est.ratio_min_ <= est.ratio_max_
    assert est.score(X) == 1.0
    band = est.predict(X)
    lc = log_comparator("HEB1", s, RadialPoint((X[0, 0],), X[0, 1]))
    assert band[0, 0] == pytest.approx(lc + est.log_ratio_min_)
    # an h column is accepted
    Xh = np.column_stack([X, np.full(len(X), 4.0)])
    assert est.predict(Xh).shape == (len(X), 2)


def test_gradient_calibrator():
    s = signature_preset("h11")
    train = np.array([fp.to_vector() for fp in gradient_grid(s, 8, seed=0)])
    est = GradientBoundCalibrator(margin=0.1).fit(train)
    assert math.isfinite(est.constant_) and est.constant_ > 0
    assert est.score(train) == 1.0
    assert np.all(est.predict(train) > 0)
    with pytest.raises(ValueError):
        est.predict(np.zeros((1, 5)))
