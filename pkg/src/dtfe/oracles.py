"""Slow, independent reference constructions used to check the fast paths.

Everything here uses exact rational arithmetic and exhaustive search, so
it shares no code with the incremental triangulation.
"""

from fractions import Fraction
from itertools import combinations

import numpy as np


def sort_and_pair(x):
    """1D Delaunay cells: consecutive points after sorting, as sorted index pairs."""
    x = np.asarray(x, dtype=float).reshape(-1)
    order = np.argsort(x, kind="stable")
    return sorted(tuple(sorted((int(a), int(b)))) for a, b in zip(order[:-1], order[1:]))


def _exact_orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _exact_incircle(a, b, c, d):
    rows = []
    for p in (a, b, c):
        dx, dy = p[0] - d[0], p[1] - d[1]
        rows.append((dx, dy, dx * dx + dy * dy))
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2) = rows
    return (a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0)
            + a2 * (b0 * c1 - b1 * c0))


def brute_force_delaunay(points):
    """All triangles whose open circumdisk contains no other point.

    Valid for points in general position (no four cocircular).  Returns
    sorted index triples.
    """
    P = [(Fraction(float(x)), Fraction(float(y))) for x, y in np.asarray(points)]
    cells = []
    for i, j, k in combinations(range(len(P)), 3):
        o = _exact_orient(P[i], P[j], P[k])
        if o == 0:
            continue
        a, b, c = (P[i], P[j], P[k]) if o > 0 else (P[i], P[k], P[j])
        if all(_exact_incircle(a, b, c, P[m]) <= 0
               for m in range(len(P)) if m not in (i, j, k)):
            cells.append((i, j, k))
    return sorted(cells)


def empty_circumball_violations(tess, rel_tol=1e-9):
    """Cells whose open circumball contains some vertex of the tessellation.

    A float screen with a relative margin flags candidates; each candidate
    is confirmed with exact arithmetic (2D) or an exact interval test (1D).
    """
    pts = tess.coords
    bad = []
    for cid, cell in enumerate(tess.cells):
        c, r = tess.circumcenter[cid], tess.circumradius[cid]
        dist = np.linalg.norm(pts - c, axis=1)
        cand = np.flatnonzero(dist < r * (1 + rel_tol))
        cand = [int(m) for m in cand if m not in set(cell.tolist())]
        for m in cand:
            if tess.dim == 1:
                lo, hi = sorted(pts[cell, 0])
                inside = lo < pts[m, 0] < hi
            else:
                A, B, C = (tuple(map(Fraction, map(float, pts[v]))) for v in cell)
                D = tuple(map(Fraction, map(float, pts[m])))
                if _exact_orient(A, B, C) < 0:
                    B, C = C, B
                inside = _exact_incircle(A, B, C, D) > 0
            if inside:
                bad.append((cid, m))
    return bad
