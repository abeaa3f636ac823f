"""Robust orientation and incircle predicates.

Coordinates handled by the package live on the dyadic grid ``k * 2**-48``
(see :data:`QUANTUM`), so translated copies ``p + offset`` and all pairwise
differences are exact doubles.  The predicates first try a floating-point
evaluation with Shewchuk's static error bound and only fall back to exact
integer arithmetic when the sign is uncertain.  Exact cocircularity is
resolved by a symbolic lifting perturbation ordered by ``(id, ox, oy)``,
which is equivalent to an infinitesimally weighted Delaunay triangulation
and therefore always consistent.
"""

import numpy as np

from ._jit import USE_NUMBA, njit, numba

QUANTUM_BITS = 48
QUANTUM = 2.0 ** -QUANTUM_BITS
_SCALE = 2 ** QUANTUM_BITS

_EPS = 2.0 ** -53
CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
ICC_ERRBOUND = (10.0 + 96.0 * _EPS) * _EPS


def _as_int(v):
    return int(v * _SCALE)


def _orient_exact_py(ax, ay, bx, by, cx, cy):
    ax, ay, bx, by, cx, cy = (_as_int(v) for v in (ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def _incircle_exact_py(ax, ay, bx, by, cx, cy, dx, dy):
    ax, ay, bx, by, cx, cy, dx, dy = (
        _as_int(v) for v in (ax, ay, bx, by, cx, cy, dx, dy))
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - cdx * bdy)
           + blift * (cdx * ady - adx * cdy)
           + clift * (adx * bdy - bdx * ady))
    return (det > 0) - (det < 0)


if USE_NUMBA:
    @numba.njit(cache=True)
    def _orient_exact(ax, ay, bx, by, cx, cy):
        with numba.objmode(r="int64"):
            r = _orient_exact_py(ax, ay, bx, by, cx, cy)
        return r

    @numba.njit(cache=True)
    def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy):
        with numba.objmode(r="int64"):
            r = _incircle_exact_py(ax, ay, bx, by, cx, cy, dx, dy)
        return r
else:
    _orient_exact = _orient_exact_py
    _incircle_exact = _incircle_exact_py


@njit
def orient(ax, ay, bx, by, cx, cy):
    """Sign of the orientation of (a, b, c): +1 counter-clockwise."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    bound = CCW_ERRBOUND * (abs(detleft) + abs(detright))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _orient_exact(ax, ay, bx, by, cx, cy)


@njit
def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """Sign of the incircle determinant; +1 when d is inside circle(a, b, c)
    for counter-clockwise (a, b, c).  Returns 0 only on exact cocircularity."""
    adx = ax - dx
    bdx = bx - dx
    cdx = cx - dx
    ady = ay - dy
    bdy = by - dy
    cdy = cy - dy
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    bound = ICC_ERRBOUND * permanent
    if det > bound:
        return 1
    if -det > bound:
        return -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


@njit
def _key_less(ia, oax, oay, ib, obx, oby):
    if ia != ib:
        return ia < ib
    if oax != obx:
        return oax < obx
    return oay < oby


@njit
def incircle_sos(ax, ay, bx, by, cx, cy, dx, dy,
                 ia, oax, oay, ib, obx, oby, ic, ocx, ocy, id_, odx, ody):
    """Incircle with symbolic perturbation; never returns 0 unless the
    four points are collinear.

    Each point carries a key ``(id, ox, oy)``; offsets only matter when two
    of the points are copies of the same periodic point.
    """
    s = incircle(ax, ay, bx, by, cx, cy, dx, dy)
    if s != 0:
        return s
    keys = np.array([[ia, oax, oay], [ib, obx, oby],
                     [ic, ocx, ocy], [id_, odx, ody]], dtype=np.int64)
    # cofactors of the lifted column of the 4x4 determinant
    cof = np.empty(4, np.int64)
    cof[0] = orient(bx, by, cx, cy, dx, dy)
    cof[1] = -orient(ax, ay, cx, cy, dx, dy)
    cof[2] = orient(ax, ay, bx, by, dx, dy)
    cof[3] = -orient(ax, ay, bx, by, cx, cy)
    used = np.zeros(4, np.bool_)
    for _ in range(4):
        best = -1
        for i in range(4):
            if used[i]:
                continue
            if best < 0 or _key_less(keys[i, 0], keys[i, 1], keys[i, 2],
                                     keys[best, 0], keys[best, 1],
                                     keys[best, 2]):
                best = i
        used[best] = True
        if cof[best] != 0:
            return cof[best]
    return 0


def quantize(values):
    """Round coordinates onto the 2**-48 grid used by the exact predicates."""
    return np.round(np.asarray(values, dtype=np.float64) * _SCALE) / _SCALE
