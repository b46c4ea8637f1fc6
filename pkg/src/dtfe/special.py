"""Exponential integrals E1 and E2, vectorised over numpy arrays.

Power series below x = 1, Lentz continued fraction above.  Both branches
are accurate to a few ulp, well inside the 1e-12 relative target.
"""

import math

import numpy as np

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243
TAIL_CONSTANT = 2.0 - math.pi ** 2 / 6.0
UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi}

_TINY = 1e-300
_SERIES_TERMS = 40
_CF_MAX_ITER = 2000


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _series(n, x):
    # E_n(x) for 0 < x <= 1 (n = 1 or 2)
    if n == 1:
        ans = -np.log(x) - EULER_GAMMA
    else:
        ans = np.full_like(x, 1.0 / (n - 1))
    fact = np.ones_like(x)
    for i in range(1, _SERIES_TERMS + 1):
        fact = fact * (-x / i)
        if i != n - 1:
            term = -fact / (i - n + 1)
        else:
            psi = -EULER_GAMMA + sum(1.0 / k for k in range(1, n))
            term = fact * (-np.log(x) + psi)
        ans = ans + term
    return ans


def _scaled_cf(n, x):
    # e^x E_n(x) for x > 1
    b = x + n
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, _CF_MAX_ITER):
        an = -i * (n - 1 + i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    return h


def _expint_scalar(n, x, scaled):
    # pure-Python twin of the array path; nested quadrature calls this heavily
    if x <= 1.0:
        if n == 1:
            ans = -math.log(x) - EULER_GAMMA
        else:
            ans = 1.0 / (n - 1)
        fact = 1.0
        for i in range(1, _SERIES_TERMS + 1):
            fact *= -x / i
            if i != n - 1:
                ans -= fact / (i - n + 1)
            else:
                psi = -EULER_GAMMA + sum(1.0 / k for k in range(1, n))
                ans += fact * (-math.log(x) + psi)
        return ans * math.exp(x) if scaled else ans
    b = x + n
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -i * (n - 1 + i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h if scaled else h * math.exp(-x)


def _expint(n, x, scaled):
    if isinstance(x, (float, int)):
        return _expint_scalar(n, float(x), scaled)
    x, scalar = _as_array(x)
    out = np.empty_like(x)
    small = x <= 1.0
    if np.any(small):
        v = _series(n, x[small])
        out[small] = v * np.exp(x[small]) if scaled else v
    big = ~small
    if np.any(big):
        v = _scaled_cf(n, x[big])
        out[big] = v if scaled else v * np.exp(-x[big])
    return float(out) if scalar else out


def exp_integral_E1(x):
    """E1(x) = integral from x to infinity of exp(-u)/u, for x > 0."""
    if isinstance(x, (float, int)):
        if not x > 0:
            raise DomainError("E1 is defined for x > 0 only (E1(0) is infinite)")
        return _expint_scalar(1, float(x), False)
    arr, _ = _as_array(x)
    if np.any(~(arr > 0)):
        raise DomainError("E1 is defined for x > 0 only (E1(0) is infinite)")
    return _expint(1, x, scaled=False)


def exp_integral_E1_scaled(x):
    """exp(x) * E1(x), finite for large x where E1 underflows."""
    if isinstance(x, (float, int)):
        if not x > 0:
            raise DomainError("E1 is defined for x > 0 only")
        return _expint_scalar(1, float(x), True)
    arr, _ = _as_array(x)
    if np.any(~(arr > 0)):
        raise DomainError("E1 is defined for x > 0 only")
    return _expint(1, x, scaled=True)


def exp_integral_E2(x):
    """E2(x) = integral from x to infinity of E1, with E2(0) = 1."""
    arr, scalar = _as_array(x)
    if np.any(~(arr >= 0)):
        raise DomainError("E2 is defined for x >= 0 only")
    out = np.ones_like(arr)
    pos = arr > 0
    if np.any(pos):
        out[pos] = _expint(2, arr[pos], scaled=False)
    return float(out) if scalar else out
