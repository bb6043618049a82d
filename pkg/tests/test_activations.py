import math

import numpy as np
import pytest

from plateaulab import ActivationError, activation_from_callable
from plateaulab._kernels import POLY_RADIUS, kernel_tanh


def test_tanh_origin_calibration(tanh_act):
    assert tanh_act.value(0.0) == 0.0
    assert tanh_act.d1(0.0) == 1.0
    assert tanh_act.d2(0.0) == 0.0
    assert tanh_act.d3(0.0) == pytest.approx(-2.0, abs=1e-14)


def test_tanh_third_derivative_bound(tanh_act):
    zs = np.linspace(-30, 30, 5001)
    assert np.max(np.abs(tanh_act.d3(zs))) <= 2.0 + 1e-12
    assert tanh_act.third_derivative_bound_holds(-30, 30)


def test_identity_is_degenerate_but_admissible(identity_act):
    zs = np.linspace(-5, 5, 11)
    assert np.allclose(identity_act.value(zs), zs)
    assert identity_act.lipschitz_third == 0.0
    assert identity_act.third_derivative_bound_holds(-10, 10)


def test_user_activation_sin():
    act = activation_from_callable(np.sin, name="sin")
    zs = np.linspace(-2, 2, 41)
    assert np.max(np.abs(act.d1(zs) - np.cos(zs))) < 1e-6
    assert np.max(np.abs(act.d2(zs) + np.sin(zs))) < 1e-4
    assert np.max(np.abs(act.d3(zs) + np.cos(zs))) < 1e-4
    # |sin'''| = |cos| <= 1; estimate carries a 5% pad
    assert 0.99 <= act.lipschitz_third <= 1.1


@pytest.mark.parametrize("fn", [np.cos, lambda z: 2.0 * np.asarray(z), np.square])
def test_invalid_user_activation_rejected(fn):
    with pytest.raises(ActivationError):
        activation_from_callable(fn, name="bad")


def test_kernel_tanh_matches_numpy():
    zs = np.linspace(-POLY_RADIUS, POLY_RADIUS, 20001)
    err = np.abs(np.array([kernel_tanh(z) for z in zs]) - np.tanh(zs))
    assert err.max() < 1e-16  # ~2 ulp agreement with libm on the poly range
    # outside the polynomial radius it is libm tanh
    for z in (0.2500001, -0.33, 1.7, -12.0):
        assert kernel_tanh(z) == math.tanh(z)
