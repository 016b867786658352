import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riemann_mhd.errors import InputError, NoConvergence
from riemann_mhd.specfun import artanh_real, hyp2f1, hyp2f1_oracle

# 2F1 values frozen from mpmath at 30 digits
FROZEN = [
    ((0.25, 0.5, 1.25, -0.3), 0.97320808018660340645),
    ((0.75, 0.5, 1.75, -10.0), 0.51203732388613939766),
    ((-0.5, 1.5, 2.5, -49.0), 5.3545253712044996884),
    ((1.5, 0.5, 2.5, -0.49), 0.88247373331925693973),
    ((-0.5, -0.75, 0.25, -3.0), -3.0906129711953858821),
]


@pytest.mark.parametrize("args,value", FROZEN)
def test_hyp2f1_frozen_values(args, value):
    assert hyp2f1(*args) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("x", [0.25, 1.0, 4.0])
def test_arcsinh_identity(x):
    assert hyp2f1(0.5, 0.5, 1.5, -x) == pytest.approx(math.asinh(math.sqrt(x)) / math.sqrt(x), rel=1e-10)


def test_arctan_identity():
    # 2F1(1/2, 1; 3/2; -x^2) = arctan(x)/x
    x = np.array([0.1, 0.7, 3.0, 6.0])
    assert np.allclose(hyp2f1(0.5, 1.0, 1.5, -x ** 2), np.arctan(x) / x, rtol=1e-12)


def test_oracle_against_mpmath():
    mp = pytest.importorskip("mpmath")
    for (a, b, c, z), _ in FROZEN[:4]:
        assert hyp2f1_oracle(a, b, c, z) == pytest.approx(float(mp.hyp2f1(a, b, c, z)), rel=1e-11)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-2.0, 2.0), c_minus_b=st.floats(0.1, 3.0), z=st.floats(-50.0, 0.0))
def test_series_matches_euler_integral(a, c_minus_b, z):
    b, c = 0.5, 0.5 + c_minus_b
    assert hyp2f1(a, b, c, z) == pytest.approx(hyp2f1_oracle(a, b, c, z), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(-40.0, 0.4))
def test_array_and_scalar_agree(z):
    arr = hyp2f1(0.3, 0.5, 1.7, np.array([z, z]))
    assert arr.shape == (2,)
    assert arr[0] == hyp2f1(0.3, 0.5, 1.7, z)


def test_z_zero_is_one():
    assert hyp2f1(0.7, 0.5, 1.2, 0.0) == 1.0
    assert hyp2f1_oracle(0.7, 0.5, 1.2, 0.0) == 1.0


def test_errors():
    with pytest.raises(InputError):
        hyp2f1(0.5, 0.5, -2.0, -0.1)
    with pytest.raises(InputError):
        hyp2f1(0.5, 0.5, 1.5, 0.9)
    with pytest.raises(InputError):
        hyp2f1_oracle(0.5, 2.0, 1.5, -0.1)
    with pytest.raises(NoConvergence):
        hyp2f1(0.5, 0.5, 1.5, -40.0, max_terms=5)


def test_artanh_real():
    assert artanh_real(0.5) == pytest.approx(math.atanh(0.5))
    # real part continues past the pole as 0.5 log|(1+x)/(1-x)|
    assert artanh_real(3.0) == pytest.approx(0.5 * math.log(2.0))
    with pytest.raises(InputError):
        artanh_real(1.0)
