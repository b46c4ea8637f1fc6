import math

import numpy as np
import pytest
from scipy import integrate

from dtfe.errors import DomainError
from dtfe.special import (EULER_GAMMA, TAIL_CONSTANT, exp_integral_E1,
                          exp_integral_E1_scaled, exp_integral_E2)


def e1_oracle(x):
    """Defining integral by adaptive quadrature."""
    return integrate.quad(lambda u: math.exp(-u) / u, x, math.inf, epsabs=0, epsrel=1e-13,
                          limit=500)[0]


@pytest.mark.parametrize("x", [1e-6, 1e-3, 0.1, 0.5, 0.999, 1.0, 1.001, 2.0, 7.5, 30.0, 80.0])
def test_e1_matches_quadrature_oracle(x):
    assert exp_integral_E1(x) == pytest.approx(e1_oracle(x), rel=1e-11)


def test_e1_at_one():
    # frozen after checking against the quadrature oracle
    assert exp_integral_E1(1.0) == pytest.approx(0.21938393439552, rel=1e-12)
    assert exp_integral_E1(1.0) == pytest.approx(e1_oracle(1.0), rel=1e-12)


def test_scalar_and_array_paths_agree():
    x = np.logspace(-6, 2, 300)
    arr = exp_integral_E1(x)
    scal = np.array([exp_integral_E1(float(v)) for v in x])
    np.testing.assert_allclose(arr, scal, rtol=1e-12)
    np.testing.assert_allclose(exp_integral_E1_scaled(x), np.exp(x) * arr, rtol=1e-12)


def test_e1_decreasing_to_zero():
    x = np.linspace(0.01, 60, 5000)
    v = exp_integral_E1(x)
    assert np.all(np.diff(v) < 0) and np.all(v > 0) and v[-1] < 1e-27


def test_domain_errors():
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            exp_integral_E1(bad)
    with pytest.raises(DomainError):
        exp_integral_E1(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        exp_integral_E2(-0.5)


def test_e2_identity_and_bounds():
    x = np.logspace(-6, math.log10(50), 400)
    e2 = exp_integral_E2(x)
    np.testing.assert_allclose(np.exp(-x) - x * exp_integral_E1(x), e2, rtol=1e-10)
    assert exp_integral_E2(0.0) == 1.0
    assert np.all(e2 <= np.exp(-x))


def test_e2_is_tail_integral_of_e1():
    tail = integrate.quad(exp_integral_E1, 0.5, math.inf, epsabs=0, epsrel=1e-12)[0]
    assert exp_integral_E2(0.5) == pytest.approx(tail, abs=1e-8)


def test_constants():
    assert EULER_GAMMA == pytest.approx(0.5772156649015329, rel=1e-15)
    assert TAIL_CONSTANT == pytest.approx(2 - math.pi ** 2 / 6)
