"""Moments of the DTFE and of kernel estimators under Poisson sampling.

The 1D DTFE moments are sums of nested integrals over the left neighbour
``t`` of the cell containing ``x0`` and the right neighbour ``s``.  The
general path integrates them directly.  For a constant rate the inner
integrals of the cross term reduce to exponential integrals, which keeps
the w = 50 evaluation fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureFailure
from .estimators import ball_window_volume, _bandwidth
from .special import (EULER_GAMMA, TAIL_CONSTANT, UNIT_BALL_VOLUME,
                      exp_integral_E1, exp_integral_E1_scaled)


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the outermost integral; each nesting level is 10x tighter."""

    epsrel: float = 1e-9
    epsabs: float = 1e-300
    limit: int = 200
    max_evaluations: int = 10 ** 8

    def __post_init__(self):
        if not (self.epsrel > 0 and self.epsabs > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.limit < 1:
            raise ValueError("limit must be at least 1")


class _Integrator:
    """scipy QUADPACK wrapper with nesting-aware tolerances and a call budget."""

    def __init__(self, spec):
        self.spec = spec or QuadratureSpec()
        self.evaluations = 0

    def __call__(self, f, a, b, level=0, points=None):
        if not b > a:
            return 0.0
        spec = self.spec
        scale = 10.0 ** -level
        epsrel = max(spec.epsrel * scale, 1e-14)
        epsabs = spec.epsabs * scale

        def counted(x):
            self.evaluations += 1
            if self.evaluations > spec.max_evaluations:
                raise QuadratureFailure(
                    f"evaluation budget of {spec.max_evaluations} exceeded")
            return f(x)

        if points is not None:
            points = [p for p in points if a < p < b] or None
        out = integrate.quad(counted, a, b, epsabs=epsabs, epsrel=epsrel,
                             limit=spec.limit, points=points, full_output=1)
        value, err = out[0], out[1]
        if len(out) > 3:
            # QUADPACK flagged trouble; accept only if the error estimate is still usable
            tol = max(epsabs, epsrel * abs(value))
            if not (math.isfinite(value) and err <= 100.0 * tol):
                raise QuadratureFailure(
                    f"integral on [{a:g}, {b:g}] did not converge: {out[3].strip()} "
                    f"(estimate {value:g}, error {err:g})")
        return value


def _rate_fn(intensity):
    return intensity.scalar


def _cum_fn(intensity):
    return lambda a, b: float(intensity.cumulative(float(a), float(b)))


def _check_x0(w, x0):
    if not w > 0:
        raise DomainError(f"half-width must be positive, got {w}")
    if not -w <= x0 <= w:
        raise DomainError(f"x0 = {x0} lies outside [-{w}, {w}]")


# --------------------------------------------------------------------------
# Identities


def e1_exponential_integral_identity(a, c, quad=None):
    """Both sides of int_0^c e^{ax} E1(ax) dx = [gamma + log(ac) + e^{ac} E1(ac)] / a."""
    if not (a > 0 and c > 0):
        raise DomainError("a and c must be strictly positive")
    I = _Integrator(quad)
    lhs = I(lambda x: exp_integral_E1_scaled(a * x), 0.0, c)
    rhs = (EULER_GAMMA + math.log(a * c) + exp_integral_E1_scaled(a * c)) / a
    return lhs, rhs


def tail_constant_quadrature(quad=None):
    """int_0^inf u e^u E1(u)^2 du by quadrature (should equal 2 - pi^2/6)."""
    I = _Integrator(quad)

    def f(u):
        return u * exp_integral_E1_scaled(u) * exp_integral_E1(u)

    # split at 1 where the integrand is peaked; the tail decays like 1/u
    return I(f, 0.0, 1.0) + I(f, 1.0, 40.0) + I(f, 40.0, math.inf)


# --------------------------------------------------------------------------
# Neighbour laws


@dataclass(frozen=True)
class NeighbourLaws:
    """Laws of the nearest points left and right of ``x`` in (-w, w).

    The left neighbour (``-w`` if none) and the right neighbour (``w`` if
    none) are independent for fixed ``x``.
    """

    intensity: object
    w: float
    x: float

    def F_minus(self, t):
        t = np.clip(np.asarray(t, dtype=float), -self.w, self.x)
        out = np.exp(-np.asarray(self.intensity.cumulative(t, self.x)))
        return float(out) if out.ndim == 0 else out

    def F_plus(self, s):
        s = np.asarray(s, dtype=float)
        inner = np.clip(s, self.x, self.w)
        out = 1.0 - np.exp(-np.asarray(self.intensity.cumulative(self.x, inner)))
        out = np.where(s >= self.w, 1.0, out)
        return float(out) if out.ndim == 0 else out

    @property
    def atom_minus(self):
        return float(np.exp(-self.intensity.cumulative(-self.w, self.x)))

    @property
    def atom_plus(self):
        return float(np.exp(-self.intensity.cumulative(self.x, self.w)))


def phi_plus_minus_cdfs(intensity, w, x):
    if not -w < x < w:
        raise DomainError(f"x = {x} must lie in the open interval (-{w}, {w})")
    return NeighbourLaws(intensity, float(w), float(x))


# --------------------------------------------------------------------------
# DTFE mean, d = 1


def dtfe_mean_1d_terms(intensity, w, x0, quad=None):
    """(interior, both-ghost, right-border, left-border) terms of the mean."""
    _check_x0(w, x0)
    lam, L = _rate_fn(intensity), _cum_fn(intensity)
    I = _Integrator(quad)

    def inner(t):
        def f(s):
            m = L(t, s)
            return m * lam(s) * math.exp(-m) / (s - t)
        return lam(t) * I(f, x0, w, level=1)

    interior = I(inner, -w, x0)
    m = L(-w, w)
    atom = m * math.exp(-m) / (2 * w)

    def right(s):
        m = L(-w, s)
        return m * lam(s) * math.exp(-m) / (w + s)

    def left(t):
        m = L(t, w)
        return m * lam(t) * math.exp(-m) / (w - t)

    return interior, atom, I(right, x0, w), I(left, -w, x0)


def dtfe_mean_1d_terms_constant(rate, w, x0):
    """Closed forms of the four mean terms for a constant rate."""
    _check_x0(w, x0)
    lam = rate
    e = math.exp
    return (lam * (e(lam * x0) - e(-lam * w)) * (e(-lam * x0) - e(-lam * w)),
            lam * e(-2 * lam * w),
            lam * e(-lam * w) * (e(-lam * x0) - e(-lam * w)),
            lam * e(-lam * w) * (e(lam * x0) - e(-lam * w)))


def dtfe_mean_1d_poisson(intensity, w, x0, quad=None):
    """E[DTFE(x0)] for a Poisson process on [-w, w] with ghost endpoints."""
    return math.fsum(dtfe_mean_1d_terms(intensity, w, x0, quad))


# --------------------------------------------------------------------------
# DTFE second moment, d = 1


def _square_terms(intensity, w, x0, I):
    lam, L = _rate_fn(intensity), _cum_fn(intensity)

    def inner(t):
        def f(s):
            m = L(t, s)
            return m * lam(s) * math.exp(-m) / (s - t) ** 2
        return lam(t) * I(f, x0, w, level=1)

    interior = I(inner, -w, x0)
    m = L(-w, w)
    atom = m * math.exp(-m) / (4 * w * w)

    def right(s):
        m = L(-w, s)
        return m * lam(s) * math.exp(-m) / (w + s) ** 2

    def left(t):
        m = L(t, w)
        return m * lam(t) * math.exp(-m) / (w - t) ** 2

    return interior, atom, I(right, x0, w), I(left, -w, x0)


def _square_terms_constant(lam, w, x0):
    # closed forms of the squared-kernel terms for a constant rate
    a, b = x0 + w, w - x0
    E1 = exp_integral_E1

    def E2(x):
        return math.exp(-x) - x * E1(x)

    interior = lam * lam * (1 - E2(lam * a) - E2(lam * b) + E2(lam * (a + b)))
    atom = lam * math.exp(-2 * lam * w) / (2 * w)
    right = lam * lam * (E1(lam * a) - E1(2 * lam * w))
    left = lam * lam * (E1(lam * b) - E1(2 * lam * w))
    return interior, atom, right, left


def _cross_terms(intensity, w, x0, I):
    lam, L = _rate_fn(intensity), _cum_fn(intensity)

    def ratio_integral(lo, hi, pole, level):
        # int_lo^hi lam(u) / |pole - u| du
        return I(lambda u: lam(u) / abs(pole - u), lo, hi, level=level)

    A = ratio_integral(-w, x0, w, 0)
    B = ratio_integral(x0, w, -w, 0)
    g1 = 2 * math.exp(-L(-w, w)) * A * B

    def f2(s):
        return (lam(s) * math.exp(-L(-w, s)) * ratio_integral(-w, x0, s, 1)
                * ratio_integral(x0, s, -w, 1))

    def f3(t):
        return (lam(t) * math.exp(-L(t, w)) * ratio_integral(t, x0, w, 1)
                * ratio_integral(x0, w, t, 1))

    def f4_outer(t):
        def f4_inner(s):
            return (lam(s) * math.exp(-L(t, s)) * ratio_integral(t, x0, s, 2)
                    * ratio_integral(x0, s, t, 2))
        return lam(t) * I(f4_inner, x0, w, level=1)

    return g1, 2 * I(f2, x0, w), 2 * I(f3, -w, x0), 2 * I(f4_outer, -w, x0)


def _cross_terms_constant(lam, w, x0, I):
    a = x0 + w
    E1s = exp_integral_E1_scaled
    log = math.log
    g1 = 2 * math.exp(-2 * lam * w) * lam * lam * log(2 * w / (w - x0)) * log(2 * w / a)

    def f2(s):
        return math.exp(-lam * (w + s)) * log((s + w) / (s - x0)) * log((w + s) / a)

    def f3(t):
        return math.exp(-lam * (w - t)) * log((w - t) / (w - x0)) * log((w - t) / (x0 - t))

    def f4_outer(x):
        def f4_inner(y):
            u = lam * (y - x)
            e1u = exp_integral_E1(u)
            # e^{u} E1(u) pieces written with the scaled E1 to avoid overflow
            left = E1s(u) - E1s(lam * (y + w)) * math.exp(-lam * (x + w))
            right = e1u - exp_integral_E1(lam * (w - x))
            return left * right
        return I(f4_inner, x0, w, level=1)

    lam3 = 2 * lam ** 3
    return (g1, lam3 * I(f2, x0, w), lam3 * I(f3, -w, x0),
            2 * lam ** 4 * I(f4_outer, -w, x0))


def dtfe_second_moment_1d_terms(intensity, w, x0, quad=None, reduced=None):
    """Eight terms of E[DTFE(x0)^2]: four squared-kernel terms, then four cross terms.

    ``reduced`` selects the exponential-integral reduction; by default it is
    used whenever the rate is constant.  At ``x0 = +-w`` the second moment is
    infinite (a border term diverges logarithmically) and ``inf`` is returned
    in the affected term.
    """
    _check_x0(w, x0)
    if reduced is None:
        reduced = intensity.is_constant
    if reduced and not intensity.is_constant:
        raise ValueError("the reduced evaluation needs a constant rate")
    I = _Integrator(quad)
    if abs(x0) == w:
        # interior and one border integral have zero length; the other diverges
        m = float(intensity.cumulative(-w, w))
        atom = m * math.exp(-m) / (4 * w * w)
        right, left = (math.inf, 0.0) if x0 == -w else (0.0, math.inf)
        return (0.0, atom, right, left, 0.0, 0.0, 0.0, 0.0)
    if reduced:
        lam = intensity.rate
        return _square_terms_constant(lam, w, x0) + _cross_terms_constant(lam, w, x0, I)
    return _square_terms(intensity, w, x0, I) + _cross_terms(intensity, w, x0, I)


def dtfe_second_moment_1d_poisson(intensity, w, x0, quad=None, reduced=None):
    """E[DTFE(x0)^2] for a Poisson process on [-w, w] with ghost endpoints."""
    return math.fsum(dtfe_second_moment_1d_terms(intensity, w, x0, quad, reduced))


def dtfe_variance_1d_poisson(intensity, w, x0, quad=None, reduced=None):
    second = dtfe_second_moment_1d_poisson(intensity, w, x0, quad, reduced)
    if intensity.is_constant:
        mean = intensity.rate
    else:
        mean = dtfe_mean_1d_poisson(intensity, w, x0, quad)
    return second - mean * mean


def dtfe_asymptotic_variance_1d(rate):
    """Limit of Var(DTFE(0)) as w -> inf for a constant rate: 2 lam^2 (2 - pi^2/6)."""
    if not rate > 0:
        raise DomainError(f"rate must be positive, got {rate}")
    return 2.0 * rate * rate * TAIL_CONSTANT


def tail_h(rate, w):
    """Boundary remainder h(lam, w) of the asymptotic-variance argument; -> 0 as w -> inf."""
    x = rate * w
    e1, e2 = math.exp(-x), math.exp(-2 * x)
    return (e1 * EULER_GAMMA + (e1 + e2) * math.log(x) - e2 * math.log(2 * x)
            + exp_integral_E1(x) * (1 + e1) - exp_integral_E1(2 * x))


# --------------------------------------------------------------------------
# Kernel estimators


def _interval_clip(window, x0, h):
    lo, hi = window.bounds[0]
    return max(lo, x0 - h), min(hi, x0 + h)


def _integrate_over_ball(f, window, x0, h, I):
    """Integral of scalar f(point) over b(x0, h) ∩ A."""
    if window.dim == 1:
        a, b = _interval_clip(window, float(np.ravel(x0)[0]), h)
        lo, hi = window.bounds[0]
        return I(lambda x: f(np.array([x])), a, b, points=[lo + h, hi - h])
    cx, cy = map(float, x0)
    (x1, x2), (y1, y2) = window.bounds

    def inner(x):
        c = math.sqrt(max(h * h - (x - cx) ** 2, 0.0))
        lo, hi = max(y1, cy - c), min(y2, cy + c)
        return I(lambda y: f(np.array([x, y])), lo, hi, level=1)

    return I(inner, max(x1, cx - h), min(x2, cx + h))


def _point_rate(intensity, window):
    if window.dim == 1:
        return lambda p: float(intensity.evaluate(p[0]))
    return lambda p: float(intensity.evaluate(p))


def _check_in_window(window, x0):
    if not window.contains(np.asarray(x0, dtype=float).reshape(1, -1))[0]:
        raise DomainError(f"x0 = {x0} is outside the window")


def bd_moments_poisson(intensity, window, x0, params, quad=None):
    """Mean and variance of the Berman-Diggle estimator at ``x0``."""
    _check_in_window(window, x0)
    h = _bandwidth(params)
    vol = ball_window_volume(x0, h, window)
    if intensity.is_constant:
        mass = intensity.rate * vol
    elif window.dim == 1:
        a, b = _interval_clip(window, float(np.ravel(x0)[0]), h)
        mass = float(intensity.cumulative(a, b))
    else:
        mass = _integrate_over_ball(_point_rate(intensity, window), window, x0, h,
                                    _Integrator(quad))
    return mass / vol, mass / (vol * vol)


def _kernelk_moment(intensity, window, x0, params, power, quad):
    _check_in_window(window, x0)
    h = _bandwidth(params)
    rate = _point_rate(intensity, window)

    def f(p):
        q = p if window.dim == 2 else p[0]
        return rate(p) / ball_window_volume(q, h, window) ** power

    return _integrate_over_ball(f, window, x0, h, _Integrator(quad))


def kernelk_mean_poisson(intensity, window, x0, params, quad=None):
    """int_{b(x0,h) ∩ A} lam(x) / |b(x,h) ∩ A| dx."""
    return _kernelk_moment(intensity, window, x0, params, 1, quad)


def kernelk_variance_poisson(intensity, window, x0, params, quad=None):
    """int_{b(x0,h) ∩ A} lam(x) / |b(x,h) ∩ A|^2 dx."""
    return _kernelk_moment(intensity, window, x0, params, 2, quad)


def expected_points_per_ball(rate, dim, h):
    return rate * UNIT_BALL_VOLUME[dim] * h ** dim
