"""Adaptive-precision orientation and in-circle predicates.

Each predicate is evaluated in double precision first. When the result is
within the forward error bound of zero (the static bounds of Shewchuk's
``orient2dfast`` / ``incirclefast``) the determinant is recomputed exactly
with :class:`fractions.Fraction`, which represents every double exactly.
The returned value therefore always has the correct sign; its magnitude is
only approximate unless the exact path ran.
"""

from fractions import Fraction

_EPS = 2.0 ** -53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def orient2d_exact(ax, ay, bx, by, cx, cy):
    ax, ay, bx, by, cx, cy = map(Fraction, (ax, ay, bx, by, cx, cy))
    return (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)


def orient2d(ax, ay, bx, by, cx, cy):
    """Twice the signed area of triangle abc; positive if counter-clockwise."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _CCW_BOUND * detsum:
        return det
    exact = orient2d_exact(ax, ay, bx, by, cx, cy)
    if exact == 0:
        return 0.0
    # keep the sign even if the float rounds to zero
    return float(exact) or (1e-300 if exact > 0 else -1e-300)


def incircle_exact(ax, ay, bx, by, cx, cy, dx, dy):
    ax, ay, bx, by, cx, cy, dx, dy = map(Fraction, (ax, ay, bx, by, cx, cy, dx, dy))
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    return (alift * (bdx * cdy - cdx * bdy)
            + blift * (cdx * ady - adx * cdy)
            + clift * (adx * bdy - bdx * ady))


def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """Positive if d lies strictly inside the circle through a, b, c (ccw).

    Zero when the four points are cocircular, negative outside.  The sign is
    inverted when a, b, c are clockwise.
    """
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    cdxady = cdx * ady
    adxcdy = adx * cdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdxcdy - cdxbdy)
           + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    if abs(det) > _ICC_BOUND * permanent:
        return det
    exact = incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)
    if exact == 0:
        return 0.0
    return float(exact) or (1e-300 if exact > 0 else -1e-300)
