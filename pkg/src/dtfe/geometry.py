"""Point patterns, observation windows and Delaunay tessellations in d = 1, 2.

The planar triangulation is an incremental Bowyer-Watson construction in
which the bounding super-triangle is replaced by a single vertex at
infinity: every convex-hull edge carries a "ghost" triangle whose
circumcircle is the open outer half-plane of the edge.  Nothing has to be
removed at the end and the hull comes out exactly convex, which a finite
super-triangle does not guarantee.  All sign decisions go through the
adaptive predicates in :mod:`dtfe.predicates`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DegenerateInput, TooFewPoints
from fractions import Fraction

from .predicates import incircle, orient2d, orient2d_exact

GHOST = -1


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Window:
    """Axis-aligned observation region: ``bounds[k] = (lo_k, hi_k)``."""

    bounds: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        if b.shape[0] not in (1, 2):
            raise ValueError("only d = 1 and d = 2 windows are supported")
        if not np.all(np.isfinite(b)) or np.any(b[:, 1] <= b[:, 0]):
            raise ValueError(f"window must have positive volume, got {b.tolist()}")
        object.__setattr__(self, "bounds", _frozen(b))

    @classmethod
    def interval(cls, a, b):
        return cls([[a, b]])

    @classmethod
    def rectangle(cls, x0, x1, y0, y1):
        return cls([[x0, x1], [y0, y1]])

    @classmethod
    def centered(cls, dim, side):
        """Cube ``[-side/2, side/2]^dim``."""
        h = side / 2.0
        return cls([[-h, h]] * dim)

    @property
    def dim(self):
        return self.bounds.shape[0]

    @property
    def volume(self):
        return float(np.prod(self.bounds[:, 1] - self.bounds[:, 0]))

    @property
    def diameter(self):
        return float(np.hypot.reduce(self.bounds[:, 1] - self.bounds[:, 0]))

    def vertices(self):
        """Interval endpoints (d=1) or rectangle corners (d=2)."""
        return np.array(list(itertools.product(*self.bounds)), dtype=float)

    def contains(self, x, closed=True):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if closed:
            return np.all((x >= lo) & (x <= hi), axis=1)
        return np.all((x > lo) & (x < hi), axis=1)

    def boundary_distance(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, self.dim)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        return np.min(np.minimum(x - lo, hi - x), axis=1)

    def to_dict(self):
        return {"dim": self.dim, "bounds": self.bounds.tolist()}


@dataclass(frozen=True)
class PointPattern:
    """Finite point set with per-point ghost flags.

    ``points`` has shape ``(n, dim)``.  Ghost points take part in the
    tessellation but are not realisations of the process.
    """

    points: np.ndarray
    ghost: Optional[np.ndarray] = None
    window: Optional[Window] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] not in (1, 2):
            raise ValueError(f"points must have shape (n, 1) or (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        ghost = (np.zeros(len(pts), dtype=bool) if self.ghost is None
                 else np.asarray(self.ghost, dtype=bool).reshape(-1))
        if ghost.shape != (len(pts),):
            raise ValueError("ghost flags must match the number of points")
        if self.window is not None:
            if self.window.dim != pts.shape[1]:
                raise ValueError("window and points differ in dimension")
            if not np.all(self.window.contains(pts)):
                raise ValueError("every point must lie in the closed window")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "ghost", _frozen(ghost))

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return len(self.points)

    @property
    def n_real(self):
        return int(np.count_nonzero(~self.ghost))

    @property
    def real_points(self):
        return self.points[~self.ghost]

    def with_points(self, extra, ghost=True):
        """Return a new pattern with ``extra`` appended (as ghosts by default)."""
        extra = np.asarray(extra, dtype=float).reshape(-1, self.dim)
        flags = np.full(len(extra), bool(ghost))
        return PointPattern(np.vstack([self.points, extra]),
                            np.concatenate([self.ghost, flags]), self.window)


# --------------------------------------------------------------------------
# General position


@dataclass(frozen=True)
class Violation:
    kind: str  # "coincident", "collinear" or "cocircular"
    indices: tuple


def validate_general_position(pattern, tol=1e-12):
    """List every degenerate subset of ``pattern``.

    Tolerances are relative to the pattern diameter.  The search is
    exhaustive (O(n^4) in the plane) and meant for user-supplied inputs,
    not for simulated patterns, which are in general position a.s.
    """
    pts = pattern.points
    n, d = pts.shape
    if n < d + 1:
        raise TooFewPoints(f"need at least {d + 1} points, got {n}")
    span = np.ptp(pts, axis=0)
    scale = float(np.hypot.reduce(span)) or 1.0
    out = []
    for i, j in itertools.combinations(range(n), 2):
        if np.linalg.norm(pts[i] - pts[j]) <= tol * scale:
            out.append(Violation("coincident", (i, j)))
    if d == 1:
        return out

    x, y = pts[:, 0], pts[:, 1]
    for i, j, k in itertools.combinations(range(n), 3):
        det = (x[j] - x[i]) * (y[k] - y[i]) - (y[j] - y[i]) * (x[k] - x[i])
        if abs(det) <= tol * scale * scale:
            out.append(Violation("collinear", (i, j, k)))
            continue
        # lifted determinant against every later point at once
        rest = np.arange(k + 1, n)
        if rest.size == 0:
            continue
        ax, ay = x[i] - x[rest], y[i] - y[rest]
        bx, by = x[j] - x[rest], y[j] - y[rest]
        cx, cy = x[k] - x[rest], y[k] - y[rest]
        lift = ((ax * ax + ay * ay) * (bx * cy - cx * by)
                + (bx * bx + by * by) * (cx * ay - ax * cy)
                + (cx * cx + cy * cy) * (ax * by - bx * ay))
        for l in rest[np.abs(lift) <= tol * scale ** 4]:
            out.append(Violation("cocircular", (i, j, k, int(l))))
    return out


# --------------------------------------------------------------------------
# Tessellation


@dataclass(frozen=True, eq=False)
class Tessellation:
    """Delaunay tessellation of ``base`` (d+1 point indices per cell).

    ``coords`` are the triangulated vertex coordinates (equal to
    ``base.points``); ``jitter`` maps point index to the symbolic lifting
    weight that broke a cocircular tie, empty for points in general position.
    """

    base: PointPattern
    coords: np.ndarray
    cells: np.ndarray
    cell_volume: np.ndarray
    circumcenter: np.ndarray
    circumradius: np.ndarray
    jitter: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def n_points(self):
        return len(self.coords)

    @property
    def n_cells(self):
        return len(self.cells)

    @cached_property
    def contiguous_volume(self):
        """|W(x)| per point: summed volume of the cells incident to x."""
        w = np.repeat(self.cell_volume, self.dim + 1)
        vol = np.bincount(self.cells.ravel(), weights=w, minlength=self.n_points)
        vol.setflags(write=False)
        return vol

    @cached_property
    def incidence(self):
        """Per point, the sorted ids of the cells having it as a vertex."""
        flat = self.cells.ravel()
        order = np.argsort(flat, kind="stable")
        cell_of = order // (self.dim + 1)
        splits = np.searchsorted(flat[order], np.arange(1, self.n_points))
        return tuple(_frozen(np.sort(c)) for c in np.split(cell_of, splits))

    @cached_property
    def neighbors(self):
        """Per point, the frozenset of Delaunay-adjacent point indices."""
        nb = [set() for _ in range(self.n_points)]
        for cell in self.cells.tolist():
            for a, b in itertools.combinations(cell, 2):
                nb[a].add(b)
                nb[b].add(a)
        return tuple(frozenset(s) for s in nb)

    @cached_property
    def hull_vertices(self):
        """Boolean mask of points on the boundary of the convex hull."""
        mask = np.zeros(self.n_points, dtype=bool)
        if self.dim == 1:
            order = np.argsort(self.coords[:, 0])
            mask[order[0]] = mask[order[-1]] = True
            return mask
        count = {}
        for cell in self.cells.tolist():
            for a, b in ((0, 1), (1, 2), (2, 0)):
                key = (min(cell[a], cell[b]), max(cell[a], cell[b]))
                count[key] = count.get(key, 0) + 1
        for (a, b), c in count.items():
            if c == 1:
                mask[a] = mask[b] = True
        return mask

    @property
    def total_volume(self):
        return math.fsum(self.cell_volume)

    def to_dict(self):
        return {
            "dim": self.dim,
            "cells": self.cells.tolist(),
            "volumes": self.cell_volume.tolist(),
            "neighbors": [sorted(s) for s in self.neighbors],
            "jitter": {str(k): v for k, v in sorted(self.jitter.items())},
        }


def contiguous_cell_volume(tess, i):
    return float(tess.contiguous_volume[i])


def shared_contiguous_volume(tess, i, j):
    """|W(x_i) ∩ W(x_j)|: volume of the cells having both i and j as vertices."""
    if i == j:
        raise ValueError("need two distinct points")
    shared = np.intersect1d(tess.incidence[i], tess.incidence[j], assume_unique=True)
    return math.fsum(tess.cell_volume[shared])


# --------------------------------------------------------------------------
# Construction


def build_delaunay(pattern, jitter_seed=0):
    """Delaunay tessellation of all points (real and ghost) of ``pattern``.

    Exact cocircular ties are broken by a symbolic perturbation: point i is
    lifted to ``|x_i|^2 - eps * w_i`` for an infinitesimal ``eps`` and
    weights ``w_i`` drawn from ``jitter_seed``.  Coordinates are never
    moved.  The weights of the points that decided a tie are recorded in
    ``Tessellation.jitter``.
    """
    pts = pattern.points
    n, d = pts.shape
    if n < d + 1:
        raise TooFewPoints(f"need at least {d + 1} points, got {n}")
    if len(np.unique(pts, axis=0)) != n:
        raise DegenerateInput("pattern contains coincident points")
    if d == 1:
        return _build_1d(pattern)
    cells, jitter = _bowyer_watson(pts[:, 0].tolist(), pts[:, 1].tolist(), jitter_seed)
    return _finish(pattern, pts, cells, jitter)


def _build_1d(pattern):
    x = pattern.points[:, 0]
    order = np.argsort(x, kind="stable")
    cells = np.column_stack([order[:-1], order[1:]])
    return _finish(pattern, pattern.points.copy(), cells, {})


def _finish(pattern, coords, cells, jitter):
    cells = np.asarray(cells, dtype=np.intp).reshape(-1, coords.shape[1] + 1)
    p = coords[cells]
    if coords.shape[1] == 1:
        vol = p[:, 1, 0] - p[:, 0, 0]
        center = 0.5 * (p[:, 0] + p[:, 1])
        radius = 0.5 * vol
    else:
        a, b, c = p[:, 0], p[:, 1], p[:, 2]
        bx, by = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
        cx, cy = c[:, 0] - a[:, 0], c[:, 1] - a[:, 1]
        cross = bx * cy - by * cx
        vol = 0.5 * cross
        b2, c2 = bx * bx + by * by, cx * cx + cy * cy
        ux = (cy * b2 - by * c2) / (2.0 * cross)
        uy = (bx * c2 - cx * b2) / (2.0 * cross)
        center = a + np.column_stack([ux, uy])
        radius = np.hypot(ux, uy)
    if np.any(vol <= 0):
        raise DegenerateInput("construction produced a cell of non-positive volume")
    return Tessellation(pattern, _frozen(coords), _frozen(cells), _frozen(vol),
                        _frozen(center), _frozen(radius), dict(jitter))


def _hilbert_order(xs, ys, bits=16):
    x = np.asarray(xs)
    y = np.asarray(ys)
    side = (1 << bits) - 1
    span = max(np.ptp(x), np.ptp(y)) or 1.0
    xi = ((x - x.min()) / span * side).astype(np.int64)
    yi = ((y - y.min()) / span * side).astype(np.int64)
    key = np.zeros(len(x), dtype=np.int64)
    s = 1 << (bits - 1)
    while s > 0:
        rx = (xi & s) > 0
        ry = (yi & s) > 0
        key += s * s * ((3 * rx) ^ ry)
        flip = ~ry
        swap_x = np.where(flip & rx, side - xi, xi)
        swap_y = np.where(flip & rx, side - yi, yi)
        xi, yi = np.where(flip, swap_y, xi), np.where(flip, swap_x, yi)
        s >>= 1
    return np.argsort(key, kind="stable")


def _bowyer_watson(X, Y, seed=0):
    """Triangulate the points (X[i], Y[i]).

    Returns ccw index triples and the tie-breaking weights that were used.
    """
    n = len(X)
    weights = []
    used = {}

    def tie(a, b, c, p):
        # sign of the eps-coefficient of the perturbed in-circle determinant
        if not weights:
            rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
            weights.extend(rng.uniform(0.5, 1.5, size=n).tolist())
        wa, wb, wc, wp = (Fraction(weights[k]) for k in (a, b, c, p))
        xa, ya, xb, yb, xc, yc, xp, yp = X[a], Y[a], X[b], Y[b], X[c], Y[c], X[p], Y[p]
        val = (wp * orient2d_exact(xa, ya, xb, yb, xc, yc)
               - wa * orient2d_exact(xb, yb, xc, yc, xp, yp)
               - wb * orient2d_exact(xc, yc, xa, ya, xp, yp)
               - wc * orient2d_exact(xa, ya, xb, yb, xp, yp))
        if val == 0:
            raise DegenerateInput("cocircular tie survives the symbolic perturbation")
        for k in (a, b, c, p):
            used[k] = weights[k]
        return val > 0
    order = _hilbert_order(X, Y).tolist()

    # initial non-degenerate triangle
    i0 = order[0]
    i1 = order[1]
    i2 = None
    for k in order[2:]:
        if orient2d(X[i0], Y[i0], X[i1], Y[i1], X[k], Y[k]) != 0.0:
            i2 = k
            break
    if i2 is None:
        raise DegenerateInput("all points are collinear")
    if orient2d(X[i0], Y[i0], X[i1], Y[i1], X[i2], Y[i2]) < 0:
        i1, i2 = i2, i1

    V = [i0, i1, i2, i1, i0, GHOST, i2, i1, GHOST, i0, i2, GHOST]
    # N[3t+k] is the triangle across the edge opposite slot k
    N = [2, 3, 1, 3, 2, 0, 1, 3, 0, 2, 1, 0]
    alive = [True] * 4
    mark = [0] * 4
    free = []
    stamp = 0
    last = 0

    def ghost_conflict(t, px, py):
        a, b = V[3 * t], V[3 * t + 1]
        o = orient2d(X[a], Y[a], X[b], Y[b], px, py)
        if o > 0:
            return True
        if o < 0:
            return False
        # on the hull line: conflict only strictly inside the edge
        return ((X[a] - px) * (X[b] - px) + (Y[a] - py) * (Y[b] - py)) < 0

    def conflict(t, px, py):
        if V[3 * t + 2] == GHOST:
            return ghost_conflict(t, px, py)
        a, b, c = V[3 * t], V[3 * t + 1], V[3 * t + 2]
        s = incircle(X[a], Y[a], X[b], Y[b], X[c], Y[c], px, py)
        if s != 0.0:
            return s > 0
        return tie(a, b, c, p)

    def locate(t, px, py):
        steps = 0
        while True:
            steps += 1
            if V[3 * t + 2] == GHOST:
                if ghost_conflict(t, px, py):
                    return t
                t = N[3 * t + 2]
                continue
            for k in ((steps % 3), (steps + 1) % 3, (steps + 2) % 3):
                u = V[3 * t + (k + 1) % 3]
                v = V[3 * t + (k + 2) % 3]
                if orient2d(X[u], Y[u], X[v], Y[v], px, py) < 0:
                    t = N[3 * t + k]
                    break
            else:
                return t

    for p in order:
        if p == i0 or p == i1 or p == i2:
            continue
        px, py = X[p], Y[p]
        start = locate(last, px, py)
        stamp += 1
        mark[start] = stamp
        cavity = [start]
        stack = [start]
        boundary = []
        rejected = {}
        while stack:
            t = stack.pop()
            for k in range(3):
                nb = N[3 * t + k]
                if mark[nb] == stamp:
                    continue
                hit = rejected.get(nb)
                if hit is None:
                    hit = conflict(nb, px, py)
                    if hit:
                        mark[nb] = stamp
                        cavity.append(nb)
                        stack.append(nb)
                        continue
                    rejected[nb] = False
                boundary.append((V[3 * t + (k + 1) % 3], V[3 * t + (k + 2) % 3], nb))

        for t in cavity:
            alive[t] = False
        free.extend(cavity)

        by_start = {}
        by_end = {}
        created = []
        for u, v, nb in boundary:
            if free:
                t = free.pop()
                alive[t] = True
            else:
                t = len(alive)
                alive.append(True)
                mark.append(0)
                V.extend((0, 0, 0))
                N.extend((0, 0, 0))
            # rotate so that a ghost vertex sits in slot 2
            if u == GHOST:
                tri = (v, p, GHOST)
            elif v == GHOST:
                tri = (p, u, GHOST)
            else:
                tri = (u, v, p)
            V[3 * t:3 * t + 3] = tri
            _link(V, N, t, u, v, nb)
            _link(V, N, nb, v, u, t)
            by_start[u] = t
            by_end[v] = t
            created.append((t, u, v))
        for t, u, v in created:
            _link(V, N, t, v, p, by_start[v])
            _link(V, N, t, p, u, by_end[u])
        last = created[-1][0]
        for t, _, _ in created:
            if V[3 * t + 2] != GHOST:
                last = t
                break

    cells = []
    for t in range(len(alive)):
        if alive[t] and V[3 * t + 2] != GHOST:
            a, b, c = V[3 * t:3 * t + 3]
            # canonical rotation: smallest index first, orientation kept
            if b < a and b < c:
                a, b, c = b, c, a
            elif c < a and c < b:
                a, b, c = c, a, b
            cells.append((a, b, c))
    cells.sort()
    return cells, used


def _link(V, N, t, a, b, nb):
    """Set the neighbour of triangle t across its directed edge a->b."""
    # edge a->b is opposite the slot that follows a
    N[3 * t + (V.index(a, 3 * t, 3 * t + 3) - 3 * t + 2) % 3] = nb


# --------------------------------------------------------------------------
# Point location


def locate_cell(tess, x0):
    """Id of the closed cell containing ``x0`` (smallest id on shared facets).

    Returns ``None`` when ``x0`` lies outside the convex hull.
    """
    cid = locate_cells(tess, np.reshape(np.asarray(x0, dtype=float), (1, tess.dim)))[0]
    return None if cid < 0 else int(cid)


def locate_cells(tess, x0s):
    """Vectorised :func:`locate_cell`; ``-1`` marks points outside the hull."""
    q = np.asarray(x0s, dtype=float).reshape(-1, tess.dim)
    if tess.dim == 1:
        return _locate_1d(tess, q[:, 0])
    return _locate_2d(tess, q)


def _locate_1d(tess, q):
    left = tess.coords[tess.cells[:, 0], 0]
    right = tess.coords[tess.cells[:, 1], 0]
    # cells are ordered left to right, so vertex ties go to the smaller id
    idx = np.searchsorted(right, q, side="left")
    idx = np.minimum(idx, len(right) - 1)
    out = np.where((q >= left[0]) & (q <= right[-1]), idx, -1)
    return out.astype(np.intp)


def _locate_2d(tess, q, chunk=1 << 21):
    P = tess.coords
    A, B, C = P[tess.cells[:, 0]], P[tess.cells[:, 1]], P[tess.cells[:, 2]]
    m = len(A)
    scale = max(float(np.max(np.abs(P))), 1.0)
    slack = 1e-9 * scale * scale
    lo = np.minimum(np.minimum(A, B), C)
    hi = np.maximum(np.maximum(A, B), C)
    out = np.full(len(q), -1, dtype=np.intp)
    step = max(1, chunk // max(m, 1))
    for s in range(0, len(q), step):
        Q = q[s:s + step, None, :]
        inbox = np.all((Q >= lo - 1e-9 * scale) & (Q <= hi + 1e-9 * scale), axis=2)
        cand = inbox.copy()
        for U, W in ((A, B), (B, C), (C, A)):
            o = ((W[:, 0] - U[:, 0]) * (Q[..., 1] - U[:, 1])
                 - (W[:, 1] - U[:, 1]) * (Q[..., 0] - U[:, 0]))
            cand &= o >= -slack
        for r, row in enumerate(cand):
            for cid in np.flatnonzero(row):
                if _in_closed_triangle(P, tess.cells[cid], q[s + r]):
                    out[s + r] = cid
                    break
    return out


def _in_closed_triangle(P, cell, x):
    a, b, c = P[cell[0]], P[cell[1]], P[cell[2]]
    return (orient2d(a[0], a[1], b[0], b[1], x[0], x[1]) >= 0
            and orient2d(b[0], b[1], c[0], c[1], x[0], x[1]) >= 0
            and orient2d(c[0], c[1], a[0], a[1], x[0], x[1]) >= 0)


def in_open_cell(tess, cid, x):
    """True if ``x`` lies in the interior of cell ``cid``."""
    cell = tess.cells[cid]
    P = tess.coords
    x = np.asarray(x, dtype=float).reshape(-1)
    if tess.dim == 1:
        return bool(P[cell[0], 0] < x[0] < P[cell[1], 0])
    a, b, c = P[cell[0]], P[cell[1]], P[cell[2]]
    return (orient2d(a[0], a[1], b[0], b[1], x[0], x[1]) > 0
            and orient2d(b[0], b[1], c[0], c[1], x[0], x[1]) > 0
            and orient2d(c[0], c[1], a[0], a[1], x[0], x[1]) > 0)


def hull_volume(points):
    """Volume of the convex hull (monotone-chain in the plane)."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] == 1:
        return float(np.ptp(pts[:, 0]))
    P = sorted(map(tuple, pts.tolist()))

    def half(seq):
        h = []
        for p in seq:
            while len(h) >= 2 and orient2d(*h[-2], *h[-1], *p) <= 0:
                h.pop()
            h.append(p)
        return h

    hull = half(P)[:-1] + half(P[::-1])[:-1]
    x = np.array([p[0] for p in hull])
    y = np.array([p[1] for p in hull])
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
