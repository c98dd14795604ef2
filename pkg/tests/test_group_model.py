import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heisenkernel import (DomainError, FullPoint, GroupSignature, RadialPoint, dilate, reduce_point, reflect_t,
                          signature_preset)
from heisenkernel.group_model import PRESETS


def test_derived_dimensions():
    sig = GroupSignature((1, 2), (0.5, 1.0))
    assert (sig.l, sig.n, sig.Q) == (2, 3, 8)
    assert not sig.isotropic
    assert signature_preset("h21").isotropic


@pytest.mark.parametrize("k,a", [
    ((1, 1), (1.0, 0.5)),        # descending
    ((1, 1), (0.5, 0.5)),        # not strict
    ((1,), (0.999999,)),         # a_l != 1, no tolerance
    ((0,), (1.0,)),              # empty block
    ((1, 1), (-0.5, 1.0)),
    ((), ()),
    ((1,), (1.0, 2.0)),
])
def test_signature_rejects_invalid(k, a):
    with pytest.raises(DomainError):
        GroupSignature(k, a)


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=4), st.integers(0, 3))
def test_signature_rejects_random_bad_ascent(vals, pos):
    # insert a repeated or out-of-order entry ahead of the final 1
    a = sorted(vals) + [1.0]
    i = pos % len(vals)
    a.insert(i + 1, a[i])
    with pytest.raises(DomainError):
        GroupSignature([1] * len(a), a)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4))
def test_q_is_2n_plus_2(ks):
    l = len(ks)
    a = [(j + 1) / l for j in range(l)]
    sig = GroupSignature(ks, a)
    assert sig.Q == 2 * sig.n + 2


def test_record_round_trip():
    for name in PRESETS:
        sig = signature_preset(name)
        rec = sig.to_record()
        assert rec["l"] == sig.l
        assert GroupSignature.from_record(rec) == sig


def test_unknown_preset():
    with pytest.raises(DomainError):
        signature_preset("h99")


def test_dilate_examples():
    assert dilate(RadialPoint((1.0, 0.0), 2.0), 1.0) == RadialPoint((1.0, 0.0), 2.0)
    assert dilate(RadialPoint((1.0,), 1.0), 2.0) == RadialPoint((2.0,), 4.0)
    for bad in (0.0, -1.0, math.nan):
        with pytest.raises(DomainError):
            dilate(RadialPoint((1.0,), 1.0), bad)


def test_reflect_examples():
    assert reflect_t(RadialPoint((1.0,), 0.0)) == RadialPoint((1.0,), 0.0)
    assert reflect_t(RadialPoint((1.0,), 3.0)) == RadialPoint((1.0,), -3.0)


def test_radial_point_validation():
    with pytest.raises(DomainError):
        RadialPoint((-1.0,), 0.0)
    with pytest.raises(DomainError):
        RadialPoint((1.0,), math.inf)
    p = RadialPoint((3.0, 4.0), 1.0)
    assert p.r_total_sq == 25.0 and p.r_total == 5.0
    with pytest.raises(DomainError):
        p.check(signature_preset("h11"))


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=7, max_size=7), st.floats(0.1, 10))
def test_reduce_commutes_with_dilate(v, rho):
    sig = signature_preset("h7")
    fp = FullPoint.from_vector(sig, v)
    a = reduce_point(dilate(fp, rho))
    b = dilate(reduce_point(fp), rho)
    np.testing.assert_allclose(a.r, b.r, rtol=1e-13, atol=1e-300)
    assert a.t == pytest.approx(b.t, rel=1e-13, abs=1e-300)


def test_full_point_vector_round_trip():
    sig = signature_preset("h7")
    v = np.arange(7, dtype=float)
    fp = FullPoint.from_vector(sig, v)
    fp.check(sig)
    np.testing.assert_array_equal(fp.to_vector(), v)
    # block 2 is (x=2,3; y=4,5)
    assert reduce_point(fp).r[1] == pytest.approx(math.sqrt(4 + 9 + 16 + 25))
