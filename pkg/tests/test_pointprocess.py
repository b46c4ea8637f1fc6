import math

import numpy as np
import pytest
from scipy import stats

from dtfe.errors import ConfigError, InvalidBound, InvalidRate
from dtfe.geometry import Window
from dtfe.pointprocess import (IntensityFunction, affine_intensity, constant_intensity,
                               intensity_from_config, replicate_rng,
                               sample_homogeneous_poisson, sample_inhomogeneous_poisson,
                               sample_poisson)


def test_replicate_streams_are_reproducible_and_distinct():
    a = replicate_rng(5, 3).random(4)
    np.testing.assert_array_equal(a, replicate_rng(5, 3).random(4))
    assert not np.array_equal(a, replicate_rng(5, 4).random(4))
    assert not np.array_equal(a, replicate_rng(6, 3).random(4))


def test_homogeneous_counts_are_poisson():
    w = Window.rectangle(0, 2, 0, 3)
    counts = [len(sample_homogeneous_poisson(w, 1.5, 1, r)) for r in range(3000)]
    mean = 1.5 * 6
    assert abs(np.mean(counts) - mean) < 4 * math.sqrt(mean / 3000)
    assert abs(np.var(counts, ddof=1) / mean - 1) < 0.1


def test_homogeneous_points_uniform_in_window():
    w = Window.interval(-5, 5)
    x = np.concatenate([sample_homogeneous_poisson(w, 4, 2, r).points[:, 0]
                        for r in range(200)])
    assert stats.kstest(x, stats.uniform(-5, 10).cdf).pvalue > 0.001


def test_invalid_rates():
    with pytest.raises(InvalidRate):
        constant_intensity(0.0)
    with pytest.raises(InvalidRate):
        sample_homogeneous_poisson(Window.interval(0, 1), -1.0, 0)
    with pytest.raises(InvalidRate):
        affine_intensity(1.0, 2.0, Window.interval(-1, 1))  # negative at -1


def test_thinning_matches_intensity():
    w = Window.interval(-1, 1)
    lam = affine_intensity(3.0, 1.5, w)
    pts = [sample_inhomogeneous_poisson(w, lam, 3, r).points[:, 0] for r in range(4000)]
    counts = np.array([len(p) for p in pts])
    assert abs(counts.mean() - 6.0) < 4 * math.sqrt(6.0 / 4000)
    x = np.concatenate(pts)
    # density (3 + 1.5 x)/6 on [-1, 1]
    cdf = lambda t: (3 * (t + 1) + 0.75 * (t * t - 1)) / 6
    assert stats.kstest(x, cdf).pvalue > 0.001


def test_bound_violation_is_detected():
    bad = IntensityFunction(lambda x: 5.0 + 0 * x, upper_bound=2.0)
    with pytest.raises(InvalidBound):
        sample_inhomogeneous_poisson(Window.interval(0, 10), bad, 0)


def test_sample_poisson_dispatch_is_deterministic():
    w = Window.interval(0, 3)
    a = sample_poisson(w, constant_intensity(2.0), 9, 1)
    b = sample_homogeneous_poisson(w, 2.0, 9, 1)
    np.testing.assert_array_equal(a.points, b.points)


def test_cumulative_closed_form_and_table_agree():
    w = Window.interval(-1, 1)
    closed = affine_intensity(1.0, 0.5, w)
    tabulated = IntensityFunction(lambda x: 1.0 + 0.5 * x, 1.5, domain=(-1, 1), panels=64)
    for a, b in [(-1, 1), (-0.3, 0.8), (0.2, 0.2001)]:
        assert math.isclose(tabulated.cumulative(a, b), closed.cumulative(a, b),
                            rel_tol=1e-12, abs_tol=1e-15)
    assert math.isclose(closed.cumulative(-1.0, 1.0), 2.0)
    assert math.isclose(tabulated.cumulative(-1.0, 1.0), 2.0)
    assert closed.scalar(0.5) == 1.25


def test_intensity_config_roundtrip():
    w = Window.interval(-1, 1)
    lam = intensity_from_config({"kind": "affine1d", "a": 1, "b": 0.5}, w)
    assert intensity_from_config(lam.to_dict(), w).evaluate(0.5) == 1.25
    c = intensity_from_config({"kind": "constant", "rate": 3}, w)
    assert c.is_constant and c.rate == 3.0
    with pytest.raises(ConfigError):
        intensity_from_config({"kind": "gaussian"}, w)
    with pytest.raises(ConfigError):
        intensity_from_config({"kind": "affine1d", "a": 1, "b": 0}, Window.centered(2, 1))
