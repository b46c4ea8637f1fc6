import math

import numpy as np
import pytest
from scipy import stats

from dtfe import analytic
from dtfe.errors import DomainError, QuadratureFailure
from dtfe.estimators import KernelParams, dtfe_evaluate, dtfe_field
from dtfe.geometry import Window
from dtfe.montecarlo import summarize
from dtfe.pointprocess import (IntensityFunction, affine_intensity, constant_intensity,
                               sample_poisson)
from dtfe.special import TAIL_CONSTANT


def test_tail_constant_by_quadrature():
    assert analytic.tail_constant_quadrature() == pytest.approx(TAIL_CONSTANT, abs=1e-6)


@pytest.mark.parametrize("a,c", [(1.0, 1.0), (2.0, 0.5), (1.0, 10.0), (0.3, 4.0)])
def test_gamma_identity(a, c):
    lhs, rhs = analytic.e1_exponential_integral_identity(a, c)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_gamma_identity_scaling():
    _, r11 = analytic.e1_exponential_integral_identity(1.0, 1.0)
    _, r2 = analytic.e1_exponential_integral_identity(2.0, 0.5)
    assert r2 == pytest.approx(r11 / 2, rel=1e-14)
    with pytest.raises(DomainError):
        analytic.e1_exponential_integral_identity(0.0, 1.0)


# ---------------------------------------------------------------- mean


@pytest.mark.parametrize("rate,w", [(1.0, 5.0), (20.0, 5.0), (0.3, 1.0)])
def test_constant_rate_mean_is_unbiased(rate, w):
    lam = constant_intensity(rate)
    for x0 in np.linspace(-w, w, 11):
        terms = analytic.dtfe_mean_1d_terms(lam, w, x0)
        assert math.fsum(terms) == pytest.approx(rate, rel=1e-6)
        closed = analytic.dtfe_mean_1d_terms_constant(rate, w, x0)
        for got, want in zip(terms, closed):
            assert got == pytest.approx(want, rel=1e-8, abs=1e-300)


def test_interior_term_vanishes_at_the_ends():
    lam = constant_intensity(2.0)
    for x0 in (-3.0, 3.0):
        assert analytic.dtfe_mean_1d_terms(lam, 3.0, x0)[0] == 0.0


def test_mean_rejects_points_outside():
    with pytest.raises(DomainError):
        analytic.dtfe_mean_1d_poisson(constant_intensity(1.0), 1.0, 1.5)


def _mc_values(intensity, w, x0, R, seed):
    window = Window.interval(-w, w)
    out = np.empty(R)
    for r in range(R):
        est = dtfe_field(sample_poisson(window, intensity, seed, r), window)
        out[r] = dtfe_evaluate(est, x0)
    return out


def test_affine_mean_and_second_moment_against_monte_carlo():
    w = 1.0
    lam = affine_intensity(1.0, 0.5, Window.interval(-w, w))
    v = _mc_values(lam, w, 0.0, 40_000, seed=21)
    s = summarize(v)
    assert abs(s.mean - analytic.dtfe_mean_1d_poisson(lam, w, 0.0)) < 3 * s.se_mean
    sq = summarize(v * v)
    second = analytic.dtfe_second_moment_1d_poisson(lam, w, 0.0)
    assert abs(sq.mean - second) < 3 * sq.se_mean


# ---------------------------------------------------------------- second moment


def test_reduced_and_direct_second_moment_agree():
    lam = constant_intensity(1.3)
    for x0 in (0.0, -1.4):
        a = analytic.dtfe_second_moment_1d_terms(lam, 2.0, x0, reduced=True)
        b = analytic.dtfe_second_moment_1d_terms(lam, 2.0, x0, reduced=False)
        np.testing.assert_allclose(a, b, rtol=1e-7)


def test_first_cross_term_closed_form():
    for rate, w in ((1.0, 2.0), (0.5, 3.0)):
        terms = analytic.dtfe_second_moment_1d_terms(constant_intensity(rate), w, 0.0)
        assert terms[4] == pytest.approx(2 * math.exp(-2 * rate * w) * (rate * math.log(2)) ** 2)


def test_second_moment_at_the_boundary():
    terms = analytic.dtfe_second_moment_1d_terms(constant_intensity(1.0), 2.0, 2.0)
    assert terms[3] == math.inf and terms[4:] == (0.0, 0.0, 0.0, 0.0)


def test_variance_tends_to_the_asymptotic_value():
    lam = constant_intensity(1.0)
    v50 = analytic.dtfe_variance_1d_poisson(lam, 50.0, 0.0)
    v30 = analytic.dtfe_variance_1d_poisson(lam, 30.0, 0.0)
    target = analytic.dtfe_asymptotic_variance_1d(1.0)
    assert v50 == pytest.approx(target, rel=0.01)
    assert v30 == pytest.approx(target, rel=0.02)


def test_asymptotic_variance_values():
    assert analytic.dtfe_asymptotic_variance_1d(1.0) == pytest.approx(0.7101318, rel=1e-7)
    assert analytic.dtfe_asymptotic_variance_1d(10.0) == pytest.approx(71.01318, rel=1e-6)
    with pytest.raises(DomainError):
        analytic.dtfe_asymptotic_variance_1d(0.0)


def test_tail_h_decreases_to_zero():
    vals = [analytic.tail_h(1.0, w) for w in (5.0, 10.0, 20.0)]
    assert vals[0] > vals[1] > vals[2] > 0 and vals[2] < 1e-7
    # depends on lam * w only
    assert analytic.tail_h(2.0, 5.0) == pytest.approx(analytic.tail_h(1.0, 10.0))


def test_quadrature_budget_is_enforced():
    spec = analytic.QuadratureSpec(max_evaluations=50)
    with pytest.raises(QuadratureFailure):
        analytic.dtfe_mean_1d_poisson(affine_intensity(1.0, 0.5, Window.interval(-1, 1)),
                                      1.0, 0.0, spec)


def test_quadrature_failure_on_divergent_integral():
    rough = IntensityFunction(lambda x: 1.0 / np.abs(x - 0.3) ** 1.5, 1e300, domain=(-1, 1))
    rough_spec = analytic.QuadratureSpec(limit=5)
    with pytest.raises(QuadratureFailure):
        analytic._Integrator(rough_spec)(lambda x: rough.scalar(x), -1.0, 1.0)


# ---------------------------------------------------------------- neighbour laws


def test_neighbour_laws_normalisation():
    lam = affine_intensity(1.0, 0.5, Window.interval(-1, 1))
    law = analytic.phi_plus_minus_cdfs(lam, 1.0, 0.2)
    assert law.F_plus(1.0) == 1.0
    assert law.F_plus(1.0 - 1e-12) == pytest.approx(1 - law.atom_plus)
    assert law.F_minus(-1.0) == pytest.approx(law.atom_minus)
    assert law.F_minus(0.2) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        analytic.phi_plus_minus_cdfs(lam, 1.0, 1.0)


def test_right_neighbour_distribution_by_simulation():
    w, rate, R = 2.0, 1.0, 100_000
    window = Window.interval(-w, w)
    lam = constant_intensity(rate)
    law = analytic.phi_plus_minus_cdfs(lam, w, 0.0)
    phi = np.empty(R)
    for r in range(R):
        x = sample_poisson(window, lam, 5, r).points[:, 0]
        right = x[x > 0]
        phi[r] = right.min() if len(right) else w
    atom = np.mean(phi == w)
    assert abs(atom - law.atom_plus) < 3 * math.sqrt(law.atom_plus * (1 - law.atom_plus) / R)
    cont = phi[phi < w]
    # continuous part: truncated exponential, as the closed form says
    cdf = lambda s: law.F_plus(s) / (1 - law.atom_plus)
    assert stats.kstest(cont, cdf).pvalue > 0.01
    np.testing.assert_allclose(law.F_plus(np.array([0.5, 1.0])),
                               1 - np.exp(-rate * np.array([0.5, 1.0])))


# ---------------------------------------------------------------- kernel moments


def test_bd_moments():
    w = Window.interval(-5, 5)
    lam = constant_intensity(4.0)
    mean, var = analytic.bd_moments_poisson(lam, w, 0.0, KernelParams(0.5))
    assert mean == pytest.approx(4.0) and var == pytest.approx(4.0 / 1.0)
    mean, var = analytic.bd_moments_poisson(lam, w, 5.0, KernelParams(0.5))
    assert mean == pytest.approx(4.0) and var == pytest.approx(8.0)
    aff = affine_intensity(1.0, 0.1, w)
    mean, _ = analytic.bd_moments_poisson(aff, w, 1.0, 0.5)
    assert mean == pytest.approx(1.1)  # linear rate, symmetric ball
    w2 = Window.centered(2, 4)
    mean, var = analytic.bd_moments_poisson(constant_intensity(2.0, 2), w2, [2.0, 2.0], 0.5)
    assert mean == pytest.approx(2.0) and var == pytest.approx(2.0 / (math.pi * 0.25 / 4))


def test_bd_moments_general_rate_in_2d():
    w2 = Window.centered(2, 4)
    rate = IntensityFunction(lambda p: 1.0 + p[:, 0] ** 2, 5.0, dim=2)
    mean, _ = analytic.bd_moments_poisson(rate, w2, [0.0, 0.0], 1.0)
    # average of 1 + x^2 over the unit disk is 1 + 1/4
    assert mean == pytest.approx(1.25, rel=1e-8)


def test_kernel_k_interior_equals_bd():
    for dim in (1, 2):
        w = Window.centered(dim, 10)
        lam = constant_intensity(3.0, dim)
        h = 0.5
        x0 = [0.0] * dim
        var = analytic.kernelk_variance_poisson(lam, w, x0, h)
        assert var == pytest.approx(3.0 / (analytic.UNIT_BALL_VOLUME[dim] * h ** dim), rel=1e-8)
        assert analytic.kernelk_mean_poisson(lam, w, x0, h) == pytest.approx(3.0, rel=1e-8)


def test_kernel_k_zero_rate():
    w = Window.interval(0, 1)
    zero = IntensityFunction(lambda x: 0.0 * x, 0.0)
    assert analytic.kernelk_variance_poisson(zero, w, 0.5, 0.1) == 0.0


def test_kernel_k_boundary_variance_formula():
    # d = 1 at x0 = w: integral of lam / (w - x + h)^2 over (w - h, w)
    w, h, rate = 5.0, 0.5, 10.0
    exact = rate * (1 / h - 1 / (2 * h))
    var = analytic.kernelk_variance_poisson(constant_intensity(rate), Window.interval(-w, w),
                                            w, h)
    assert var == pytest.approx(exact, rel=1e-9)


def test_crossover_helper_constant():
    assert analytic.expected_points_per_ball(0.7, 1, 1.0) == pytest.approx(1.4)
