"""Intensity estimators: DTFE, Berman-Diggle and the mass-preserving kernel.

The DTFE assigns ``(d+1)/|W(x)|`` to every observed point ``x`` and the
vertex average to every Delaunay cell.  Ghost points (window corners or
interval endpoints) take part in the tessellation and in the contiguous
volumes ``|W(x)|`` but never contribute a term of their own, so the
integral of the field is exactly the number of observed points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import (PointPattern, Tessellation, Window, build_delaunay,
                       in_open_cell, locate_cells)

GHOST_BOUNDARY = "ghost"
NO_CORRECTION = "none"
CORRECTIONS = (GHOST_BOUNDARY, NO_CORRECTION)


@dataclass(frozen=True)
class KernelParams:
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")


def _bandwidth(params):
    return params.bandwidth if isinstance(params, KernelParams) else KernelParams(float(params)).bandwidth


@dataclass(frozen=True, eq=False)
class IntensityEstimate:
    """Cell-wise constant DTFE field.

    When fewer than d+1 observed points fall in the window, ``tess`` is
    ``None`` and the field is the constant ``n / |A|`` on the window.
    """

    window: Window
    n_real: int
    correction: str
    tess: Optional[Tessellation] = None
    cell_value: Optional[np.ndarray] = None
    constant: Optional[float] = None

    @property
    def dim(self):
        return self.window.dim

    @property
    def real_mask(self):
        return ~self.tess.base.ghost

    @property
    def point_value(self):
        """(d+1)/|W(x)| at each tessellation vertex (0 for ghosts)."""
        W = self.tess.contiguous_volume
        return np.where(self.real_mask, (self.dim + 1) / W, 0.0)

    def evaluate(self, x0):
        return dtfe_evaluate(self, x0)

    def metadata(self):
        return {
            "estimator": "dtfe",
            "correction": self.correction,
            "edge_correction_points": ("window vertices" if self.correction == GHOST_BOUNDARY
                                       else "none"),
            "n_real": self.n_real,
            "fallback_constant": self.constant,
        }


def dtfe_field(pattern, window=None, correction=GHOST_BOUNDARY, jitter_seed=0):
    window = window if window is not None else pattern.window
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}, got {correction!r}")
    pts = pattern.points
    d = pattern.dim
    keep = np.ones(len(pts), dtype=bool) if window is None else pattern.ghost | window.contains(pts)
    base = PointPattern(pts[keep], pattern.ghost[keep])
    n = base.n_real
    if n < d + 1:
        if window is None:
            raise ValueError("a window is needed when fewer than d+1 points are observed")
        return IntensityEstimate(window, n, correction, constant=n / window.volume)

    if correction == GHOST_BOUNDARY:
        if window is None:
            raise ValueError("ghost-boundary correction needs a window")
        corners = window.vertices()
        existing = {tuple(p) for p in base.points.tolist()}
        corners = [c for c in corners.tolist() if tuple(c) not in existing]
        if corners:
            base = base.with_points(corners, ghost=True)

    tess = build_delaunay(base, jitter_seed=jitter_seed)
    inv = np.where(base.ghost, 0.0, 1.0 / tess.contiguous_volume)
    values = inv[tess.cells].sum(axis=1)
    values.setflags(write=False)
    if window is None:
        window = Window(np.column_stack([pts.min(axis=0), pts.max(axis=0)]))
    return IntensityEstimate(window, n, correction, tess, values)


def dtfe_evaluate(est, x0):
    """Field value at ``x0``; zero outside the convex hull of the tessellation."""
    q = np.asarray(x0, dtype=float)
    single = q.ndim == 0 or (est.dim == 2 and q.ndim == 1)
    q = q.reshape(-1, est.dim)
    if est.tess is None:
        out = np.where(est.window.contains(q), est.constant, 0.0)
    else:
        cid = locate_cells(est.tess, q)
        out = np.where(cid >= 0, est.cell_value[np.maximum(cid, 0)], 0.0)
    return float(out[0]) if single else out


def adaptive_kernel_g(est, x0, i):
    """Contribution of observed point ``i`` to the field at ``x0``.

    ``i`` indexes the tessellation vertices, which start with the observed
    pattern's points in their original order.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if est.tess is None:
        return 1.0 / est.window.volume if est.window.contains(x0)[0] else 0.0
    tess = est.tess
    if tess.base.ghost[i]:
        raise ValueError(f"point {i} is a ghost point")
    W = tess.contiguous_volume[i]
    if np.array_equal(tess.coords[i], x0):
        return (est.dim + 1) / W
    for cid in tess.incidence[i]:
        if in_open_cell(tess, cid, x0):
            return 1.0 / W
    return 0.0


def total_mass(est):
    """Integral of the field over the window (exact for a cell-wise constant field)."""
    if est.tess is None:
        return est.constant * est.window.volume
    return math.fsum(est.tess.cell_volume * est.cell_value)


def field_rows(est):
    """``(cell_id, value, volume)`` rows for export."""
    if est.tess is None:
        return [(0, est.constant, est.window.volume)]
    return [(i, float(v), float(w))
            for i, (v, w) in enumerate(zip(est.cell_value, est.tess.cell_volume))]


# --------------------------------------------------------------------------
# Kernel estimators


def _antider_semicircle(x, r):
    x = min(max(x, -r), r)
    return 0.5 * (x * math.sqrt(max(r * r - x * x, 0.0)) + r * r * math.asin(x / r))


def _disk_rect_area(cx, cy, r, x1, x2, y1, y2):
    """Area of the open disk b((cx, cy), r) intersected with [x1,x2]x[y1,y2]."""
    X1, X2, Y1, Y2 = x1 - cx, x2 - cx, y1 - cy, y2 - cy
    if X1 <= -r and X2 >= r and Y1 <= -r and Y2 >= r:
        return math.pi * r * r
    lo, hi = max(X1, -r), min(X2, r)
    if lo >= hi or Y1 >= r or Y2 <= -r:
        return 0.0
    cuts = {lo, hi}
    for Y in (Y1, Y2):
        if abs(Y) < r:
            c = math.sqrt(r * r - Y * Y)
            cuts.update(t for t in (-c, c) if lo < t < hi)
    cuts = sorted(cuts)
    area = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = 0.5 * (a + b)
        s = math.sqrt(r * r - m * m)
        top_is_arc = Y2 >= s
        bottom_is_arc = Y1 <= -s
        if (Y2 if not top_is_arc else s) <= (Y1 if not bottom_is_arc else -s):
            continue
        arc = _antider_semicircle(b, r) - _antider_semicircle(a, r)
        top = arc if top_is_arc else Y2 * (b - a)
        bottom = -arc if bottom_is_arc else Y1 * (b - a)
        area += top - bottom
    return area


def ball_window_volume(x, h, window):
    """|b(x, h) ∩ A| for one point or an array of points."""
    q = np.asarray(x, dtype=float)
    single = q.ndim == 0 or (window.dim == 2 and q.ndim == 1)
    q = q.reshape(-1, window.dim)
    if window.dim == 1:
        a, b = window.bounds[0]
        out = np.clip(np.minimum(q[:, 0] + h, b) - np.maximum(q[:, 0] - h, a), 0.0, None)
    else:
        (x1, x2), (y1, y2) = window.bounds
        out = np.full(len(q), math.pi * h * h)
        edge = window.boundary_distance(q) < h
        for k in np.flatnonzero(edge):
            out[k] = _disk_rect_area(q[k, 0], q[k, 1], h, x1, x2, y1, y2)
    return float(out[0]) if single else out


def _observed(pattern, window):
    pts = pattern.real_points
    return pts[window.contains(pts)]


def _within(data, q, h, weights=None, chunk=1 << 22):
    """Sum of weights (default 1) of data points strictly within h of each query."""
    out = np.empty(len(q))
    step = max(1, chunk // max(len(data), 1))
    for s in range(0, len(q), step):
        d2 = ((q[s:s + step, None, :] - data[None, :, :]) ** 2).sum(axis=2)
        hit = d2 < h * h
        out[s:s + step] = hit.sum(axis=1) if weights is None else hit @ weights
    return out


def berman_diggle(pattern, window, x0, params):
    """n(Phi ∩ b(x0,h) ∩ A) / |b(x0,h) ∩ A|."""
    h = _bandwidth(params)
    q = np.asarray(x0, dtype=float)
    single = q.ndim == 0 or (window.dim == 2 and q.ndim == 1)
    q = q.reshape(-1, window.dim)
    data = _observed(pattern, window)
    counts = _within(data, q, h) if len(data) else np.zeros(len(q))
    out = counts / ball_window_volume(q, h, window)
    return float(out[0]) if single else out


def kernel_K(pattern, window, x0, params):
    """Sum over observed x with |x - x0| < h of 1 / |b(x,h) ∩ A|."""
    h = _bandwidth(params)
    q = np.asarray(x0, dtype=float)
    single = q.ndim == 0 or (window.dim == 2 and q.ndim == 1)
    q = q.reshape(-1, window.dim)
    data = _observed(pattern, window)
    if len(data) == 0:
        out = np.zeros(len(q))
    else:
        w = 1.0 / ball_window_volume(data, h, window)
        out = _within(data, q, h, w)
    return float(out[0]) if single else out
