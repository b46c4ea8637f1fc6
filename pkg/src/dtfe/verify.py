"""Named numerical checks behind the ``verify`` command and the acceptance tests.

Each suite returns a list of :class:`CheckResult`.  Defaults are the
acceptance-run sizes; smaller replicate counts can be passed for quick runs.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import analytic
from .estimators import (KernelParams, berman_diggle, dtfe_field, kernel_K, total_mass)
from .geometry import PointPattern, Window, build_delaunay
from .montecarlo import ExperimentSpec, palm_statistics, run_experiment
from .oracles import brute_force_delaunay, empty_circumball_violations, sort_and_pair
from .pointprocess import (affine_intensity, constant_intensity, replicate_rng,
                           sample_homogeneous_poisson)
from .special import TAIL_CONSTANT, exp_integral_E1, exp_integral_E2


@dataclass(frozen=True)
class CheckResult:
    name: str
    target: float
    estimate: float
    tolerance: float
    se: Optional[float]
    passed: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        se = "" if self.se is None else f" se={self.se:.3g}"
        return (f"{status} {self.name}: estimate={self.estimate:.10g} "
                f"target={self.target:.10g} tol={self.tolerance:.3g}{se}")


def _within_se(name, target, estimate, se, k=3.0, detail=""):
    tol = k * se
    return CheckResult(name, target, estimate, tol, se, abs(estimate - target) <= tol, detail)


def _within_rel(name, target, estimate, rel, se=None, detail=""):
    tol = rel * abs(target)
    return CheckResult(name, target, estimate, tol, se, abs(estimate - target) <= tol, detail)


# --------------------------------------------------------------------------


def check_mass(patterns=1000, seed=1):
    """Integral of the DTFE field equals the point count."""
    out = []
    for dim, window, rate in ((1, Window.interval(-5, 5), 3.0),
                              (2, Window.centered(2, 10), 0.5)):
        worst = 0.0
        for r in range(patterns):
            pat = sample_homogeneous_poisson(window, rate, seed, r)
            est = dtfe_field(pat, window)
            n = pat.n_real
            err = abs(total_mass(est) - n) / max(n, 1)
            worst = max(worst, err)
        out.append(CheckResult(f"mass d={dim} (lambda|A|={rate * window.volume:g}, "
                               f"{patterns} patterns)", 0.0, worst, 1e-9, None, worst < 1e-9))
    return out


def check_unbiased1d(replicates=100_000, seed=2):
    window = Window.interval(-5, 5)
    spec = ExperimentSpec(window, constant_intensity(20.0), [0.0, 4.5, 5.0], replicates, seed)
    rep = run_experiment(spec)
    return [_within_se(f"DTFE mean at x0={x[0]:g} (lambda=20, w=5, R={replicates})",
                       20.0, s.mean, s.se_mean)
            for x, s in zip(spec.x0, rep.points)]


def check_variance1d(replicates=100_000, seed=3, w=50.0):
    target = analytic.dtfe_asymptotic_variance_1d(1.0)
    spec = ExperimentSpec(Window.interval(-w, w), constant_intensity(1.0), [0.0],
                          replicates, seed)
    s = run_experiment(spec).points[0]
    quad = analytic.dtfe_variance_1d_poisson(constant_intensity(1.0), w, 0.0)
    return [
        _within_rel(f"DTFE variance at 0, Monte Carlo (w={w:g}, R={replicates})",
                    target, s.variance, 0.05, s.se_variance,
                    "variance SE is indicative only: the fourth moment is infinite"),
        _within_rel(f"DTFE variance at 0, quadrature (w={w:g})", target, quad, 0.01),
    ]


def check_mean1d(replicates=100_000, seed=4):
    window = Window.interval(-1, 1)
    lam = affine_intensity(1.0, 0.5, window)
    x0s = [-1.0, -0.5, 0.0, 0.5, 1.0]
    rep = run_experiment(ExperimentSpec(window, lam, x0s, replicates, seed))
    out = []
    for x0, s in zip(x0s, rep.points):
        q = analytic.dtfe_mean_1d_poisson(lam, 1.0, x0)
        out.append(_within_se(f"mean 1+x/2 at x0={x0:g}: quadrature vs Monte Carlo",
                              q, s.mean, s.se_mean))
    const_worst, term_worst = 0.0, 0.0
    for rate, w in ((1.0, 5.0), (20.0, 5.0), (0.5, 2.0)):
        lam_c = constant_intensity(rate)
        for x0 in np.linspace(-w, w, 9):
            terms = analytic.dtfe_mean_1d_terms(lam_c, w, x0)
            const_worst = max(const_worst, abs(math.fsum(terms) - rate) / rate)
            closed = analytic.dtfe_mean_1d_terms_constant(rate, w, x0)
            for a, b in zip(terms, closed):
                term_worst = max(term_worst, abs(a - b) / max(abs(b), 1e-300)
                                 if b != 0 else abs(a))
    out.append(CheckResult("constant-rate quadrature mean equals the rate", 0.0,
                           const_worst, 1e-6, None, const_worst <= 1e-6))
    out.append(CheckResult("constant-rate mean terms equal their closed forms", 0.0,
                           term_worst, 1e-8, None, term_worst <= 1e-8))
    return out


def check_constants2d(replicates=10_000, seed=5, side=40.0):
    rep = palm_statistics(2, replicates, side, seed)
    C, seC = rep.C
    Cp, seCp = rep.Cprime
    cd, secd = rep.cd
    gap = cd - (C + Cp - 1.0)
    joint = math.sqrt(seC ** 2 + seCp ** 2 + secd ** 2)
    note = f"guard violations: {rep.guard_violations}"
    return [
        _within_rel(f"C(1,2) (window {side:g}x{side:g}, R={replicates})", 0.8, C, 0.10, seC, note),
        _within_rel(f"C'(1,2) (window {side:g}x{side:g}, R={replicates})", 0.6, Cp, 0.10, seCp, note),
        _within_se("c_2 - (C + C' - 1) on shared samples", 0.0, gap, joint),
    ]


def check_kernels(replicates=100_000, seed=6):
    out = []
    worst = 0.0
    for dim, window, rate, h in ((1, Window.interval(-5, 5), 10.0, 0.5),
                                 (2, Window.centered(2, 10), 2.0, 1.0)):
        params = KernelParams(h)
        rng = replicate_rng(seed, 10 ** 9)
        lo, hi = window.bounds[:, 0] + 2 * h, window.bounds[:, 1] - 2 * h
        q = lo + (hi - lo) * rng.random((200, dim))
        q = q[window.boundary_distance(q) > 2 * h]
        for r in range(50):
            pat = sample_homogeneous_poisson(window, rate, seed, r)
            a = berman_diggle(pat, window, q, params)
            b = kernel_K(pat, window, q, params)
            worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1.0))))
    out.append(CheckResult("BD equals kernel_K deeper than 2h", 0.0, worst, 1e-12, None,
                           worst <= 1e-12))

    window = Window.interval(-5, 5)
    lam, h = 10.0, 0.5
    spec = ExperimentSpec(window, constant_intensity(lam), [0.0], replicates, seed,
                          estimator="bd", bandwidth=h)
    s = run_experiment(spec).points[0]
    out.append(_within_se(f"BD variance at interior point (lambda={lam:g}, h={h:g}, "
                          f"R={replicates})", lam / (2 * h), s.variance, s.se_variance))

    spec = ExperimentSpec(window, constant_intensity(lam), [5.0], replicates, seed + 1,
                          estimator="kernelK", bandwidth=h)
    s = run_experiment(spec).points[0]
    target = analytic.kernelk_variance_poisson(constant_intensity(lam), window, 5.0, h)
    out.append(_within_se(f"kernel_K variance at the boundary (lambda={lam:g}, h={h:g}, "
                          f"R={replicates})", target, s.variance, s.se_variance))
    return out


def check_specialfn():
    x = np.logspace(-6, math.log10(50.0), 400)
    e2 = exp_integral_E2(x)
    ident = float(np.max(np.abs(np.exp(-x) - x * exp_integral_E1(x) - e2) / e2))
    out = [CheckResult("E2(x) = exp(-x) - x E1(x) on [1e-6, 50]", 0.0, ident, 1e-10, None,
                       ident < 1e-10)]
    tail = analytic.tail_constant_quadrature()
    out.append(CheckResult("int_0^inf u e^u E1(u)^2 du = 2 - pi^2/6", TAIL_CONSTANT, tail,
                           1e-6, None, abs(tail - TAIL_CONSTANT) <= 1e-6))
    for a, c in ((1.0, 1.0), (2.0, 0.5), (1.0, 10.0)):
        lhs, rhs = analytic.e1_exponential_integral_identity(a, c)
        out.append(_within_rel(f"int_0^c e^(ax) E1(ax) dx identity, a={a:g}, c={c:g}",
                               rhs, lhs, 1e-8))
    return out


def check_geometry(n1d=1000, n2d=200, seed=8):
    out = []
    mism = 0
    for r in range(n1d):
        rng = replicate_rng(seed, r)
        x = rng.uniform(-1, 1, rng.integers(2, 60))
        tess = build_delaunay(PointPattern(x))
        if sorted(map(tuple, np.sort(tess.cells, axis=1).tolist())) != sort_and_pair(x):
            mism += 1
    out.append(CheckResult(f"1D tessellation equals sort-and-pair ({n1d} patterns)",
                           0.0, float(mism), 0.0, None, mism == 0))
    mism = 0
    violations = 0
    for r in range(n2d):
        rng = replicate_rng(seed + 1, r)
        pts = rng.uniform(-1, 1, (int(rng.integers(3, 9)), 2))
        tess = build_delaunay(PointPattern(pts))
        got = sorted(tuple(sorted(c)) for c in tess.cells.tolist())
        if got != brute_force_delaunay(pts):
            mism += 1
        violations += len(empty_circumball_violations(tess))
    out.append(CheckResult(f"2D tessellation equals empty-circumdisk enumeration "
                           f"({n2d} patterns of <= 8 points)", 0.0, float(mism), 0.0, None,
                           mism == 0))
    for r in range(20):
        pat = sample_homogeneous_poisson(Window.centered(2, 10), 2.0, seed + 2, r)
        tess = build_delaunay(pat.with_points(Window.centered(2, 10).vertices()))
        violations += len(empty_circumball_violations(tess))
    out.append(CheckResult("empty circumball on every constructed tessellation", 0.0,
                           float(violations), 0.0, None, violations == 0))
    return out


SUITES = {
    "mass": check_mass,
    "unbiased1d": check_unbiased1d,
    "variance1d": check_variance1d,
    "mean1d": check_mean1d,
    "constants2d": check_constants2d,
    "kernels": check_kernels,
    "specialfn": check_specialfn,
    "geometry": check_geometry,
}

# acceptance criterion number -> suite
CRITERIA = {1: "mass", 2: "unbiased1d", 3: "variance1d", 4: "mean1d",
            5: "constants2d", 6: "kernels", 7: "specialfn", 8: "geometry"}


def run_suite(name, **kwargs):
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](**kwargs)
