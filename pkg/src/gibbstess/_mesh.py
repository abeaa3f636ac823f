"""Array-based periodic Delaunay triangulation of the unit torus.

The mesh is a tuple of arrays (see :data:`FIELDS`) so that it can be handed
to jitted kernels as a single argument.  Triangle ``t`` has vertices
``TV[t]`` at integer translations ``TO[t]``; its unwrapped corner ``k`` is
``P[TV[t, k]] + TO[t, k]`` and corners are counter-clockwise.  Offsets are
chosen so that the triangle barycenter lies in ``[0, 1)^2``.  ``TN[t, i]``
is the triangle across the edge opposite corner ``i`` and ``TS[t, i]`` is
the translation that brings that neighbour into the frame of ``t``.

All kernels return an integer status; 0 means success.
"""

import numpy as np

from ._jit import njit
from .predicates import incircle_sos, orient

FIELDS = ("P", "VT", "TV", "TO", "TN", "TS", "TMARK", "TCS", "TFREE",
          "PFREE", "LIVE", "LPOS", "META", "CELL", "VMARK", "VTMP")

# META slots
M_TTOP = 0
M_TFREE = 1
M_PTOP = 2
M_PFREE = 3
M_NLIVE = 4
M_STAMP = 5
M_LAST = 6
M_VSTAMP = 7

OK = 0
ERR_DUP = 1
ERR_WRAP = 2
ERR_WALK = 3
ERR_CAP = 4
ERR_HOLE = 5

CAV_CAP = 256
STAR_CAP = 96
# Circumradius above which the periodic structure is no longer trusted.
RMAX_GEOM = 0.45
DEDUP_TOL = 1e-12
SCALE48 = 2.0 ** 48


def allocate(n_points, n_tris):
    pc = max(int(n_points), 8)
    tc = max(int(n_tris), 16)
    P = np.zeros((pc, 2))
    VT = np.full(pc, -1, np.int64)
    TV = np.full((tc, 3), -1, np.int64)
    TO = np.zeros((tc, 3, 2), np.int64)
    TN = np.full((tc, 3), -1, np.int64)
    TS = np.zeros((tc, 3, 2), np.int64)
    TMARK = np.zeros(tc, np.int64)
    TCS = np.zeros((tc, 2), np.int64)
    TFREE = np.zeros(tc, np.int64)
    PFREE = np.zeros(pc, np.int64)
    LIVE = np.full(pc, -1, np.int64)
    LPOS = np.full(pc, -1, np.int64)
    META = np.zeros(16, np.int64)
    CELL = np.zeros((pc, 3))
    VMARK = np.zeros(pc, np.int64)
    VTMP = np.zeros((pc, 3))
    return (P, VT, TV, TO, TN, TS, TMARK, TCS, TFREE, PFREE, LIVE, LPOS,
            META, CELL, VMARK, VTMP)


def grow(M, n_points=None, n_tris=None):
    """Return a copy of ``M`` with at least the requested capacities."""
    pc_old = M[0].shape[0]
    tc_old = M[2].shape[0]
    pc = max(pc_old, n_points or 0)
    tc = max(tc_old, n_tris or 0)
    N = allocate(pc, tc)
    for name, src, dst in zip(FIELDS, M, N):
        if name == "META":
            dst[:] = src
        elif name in _TRI_FIELDS:
            dst[:tc_old] = src
        else:
            dst[:pc_old] = src
    return N


_TRI_FIELDS = ("TV", "TO", "TN", "TS", "TMARK", "TCS", "TFREE")


@njit
def wrap_q(v):
    """Reduce into [0, 1) and snap onto the 2**-48 grid."""
    v = v - np.floor(v)
    v = np.floor(v * SCALE48 + 0.5) / SCALE48
    if v >= 1.0:
        v -= 1.0
    return v


# ---------------------------------------------------------------------------
# small geometric helpers

@njit
def tri_stats(ax, ay, bx, by, cx, cy):
    """(min edge, circumradius, min angle, perimeter) of a triangle."""
    la = np.hypot(bx - cx, by - cy)
    lb = np.hypot(cx - ax, cy - ay)
    lc = np.hypot(ax - bx, ay - by)
    cross = abs((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
    per = la + lb + lc
    if cross == 0.0:
        return min(la, min(lb, lc)), np.inf, 0.0, per
    R = la * lb * lc / (2.0 * cross)
    # smallest angle sits opposite the shortest side
    if la <= lb and la <= lc:
        ang = np.arctan2(cross, (bx - ax) * (cx - ax) + (by - ay) * (cy - ay))
        lmin = la
    elif lb <= lc:
        ang = np.arctan2(cross, (ax - bx) * (cx - bx) + (ay - by) * (cy - by))
        lmin = lb
    else:
        ang = np.arctan2(cross, (ax - cx) * (bx - cx) + (ay - cy) * (by - cy))
        lmin = lc
    return lmin, R, ang, per


@njit
def circumcenter(ax, ay, bx, by, cx, cy):
    bx -= ax
    by -= ay
    cx -= ax
    cy -= ay
    d = 2.0 * (bx * cy - by * cx)
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return ax + ux, ay + uy


@njit
def poly_stats(px, py, n):
    """(h_min, h_max, area) of a convex polygon around the origin.

    Consecutive vertices closer than DEDUP_TOL are merged first (they come
    from cocircular triangles sharing a circumcenter).
    """
    qx = np.empty(n)
    qy = np.empty(n)
    m = 0
    for i in range(n):
        if m > 0 and abs(px[i] - qx[m - 1]) <= DEDUP_TOL \
                and abs(py[i] - qy[m - 1]) <= DEDUP_TOL:
            continue
        qx[m] = px[i]
        qy[m] = py[i]
        m += 1
    while m > 1 and abs(qx[m - 1] - qx[0]) <= DEDUP_TOL \
            and abs(qy[m - 1] - qy[0]) <= DEDUP_TOL:
        m -= 1
    hmin = np.inf
    hmax = 0.0
    area = 0.0
    for i in range(m):
        j = (i + 1) % m
        x0 = qx[i]
        y0 = qy[i]
        dx = qx[j] - x0
        dy = qy[j] - y0
        area += x0 * qy[j] - qx[j] * y0
        d2 = dx * dx + dy * dy
        t = 0.0
        if d2 > 0.0:
            t = -(x0 * dx + y0 * dy) / d2
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
        h = np.hypot(x0 + t * dx, y0 + t * dy)
        if h < hmin:
            hmin = h
        if h > hmax:
            hmax = h
    return hmin, hmax, 0.5 * area


@njit
def clip_halfplane(px, py, n, wx, wy):
    """Clip a convex polygon to {p : p.w <= |w|^2 / 2}."""
    c = 0.5 * (wx * wx + wy * wy)
    ox = np.empty(n + 2)
    oy = np.empty(n + 2)
    m = 0
    for i in range(n):
        j = (i + 1) % n
        si = px[i] * wx + py[i] * wy - c
        sj = px[j] * wx + py[j] * wy - c
        if si <= 0.0:
            ox[m] = px[i]
            oy[m] = py[i]
            m += 1
        if (si < 0.0 < sj) or (sj < 0.0 < si):
            t = si / (si - sj)
            ox[m] = px[i] + t * (px[j] - px[i])
            oy[m] = py[i] + t * (py[j] - py[i])
            m += 1
    return ox, oy, m


# ---------------------------------------------------------------------------
# bookkeeping

@njit
def _new_tri(M):
    TV = M[2]
    TFREE = M[8]
    META = M[12]
    if META[M_TFREE] > 0:
        META[M_TFREE] -= 1
        return TFREE[META[M_TFREE]]
    t = META[M_TTOP]
    if t >= TV.shape[0]:
        return -1
    META[M_TTOP] += 1
    return t


@njit
def _free_tri(M, t):
    TV = M[2]
    TFREE = M[8]
    META = M[12]
    TV[t, 0] = -1
    TV[t, 1] = -1
    TV[t, 2] = -1
    TFREE[META[M_TFREE]] = t
    META[M_TFREE] += 1


@njit
def new_point_id(M):
    P = M[0]
    PFREE = M[9]
    META = M[12]
    if META[M_PFREE] > 0:
        META[M_PFREE] -= 1
        return PFREE[META[M_PFREE]]
    p = META[M_PTOP]
    if p >= P.shape[0]:
        return -1
    META[M_PTOP] += 1
    return p


@njit
def _live_add(M, p):
    LIVE = M[10]
    LPOS = M[11]
    META = M[12]
    if LPOS[p] >= 0:
        return
    n = META[M_NLIVE]
    LIVE[n] = p
    LPOS[p] = n
    META[M_NLIVE] = n + 1


@njit
def _live_remove(M, p):
    LIVE = M[10]
    LPOS = M[11]
    META = M[12]
    i = LPOS[p]
    if i < 0:
        return
    n = META[M_NLIVE] - 1
    q = LIVE[n]
    LIVE[i] = q
    LPOS[q] = i
    LIVE[n] = -1
    LPOS[p] = -1
    META[M_NLIVE] = n


@njit
def release_point_id(M, p):
    PFREE = M[9]
    META = M[12]
    PFREE[META[M_PFREE]] = p
    META[M_PFREE] += 1


@njit
def _find_edge(M, u, usx, usy, p, opx, opy, q, oqx, oqy):
    """Local index j of u such that corners (j+1, j+2) are (p, q) in the
    frame where u is translated by (usx, usy)."""
    TV = M[2]
    TO = M[3]
    for j in range(3):
        j1 = (j + 1) % 3
        j2 = (j + 2) % 3
        if TV[u, j1] == p and TV[u, j2] == q \
                and TO[u, j1, 0] + usx == opx and TO[u, j1, 1] + usy == opy \
                and TO[u, j2, 0] + usx == oqx and TO[u, j2, 1] + usy == oqy:
            return j
    return -1


# ---------------------------------------------------------------------------
# point location and insertion

@njit
def locate(M, x, y, t, maxsteps):
    """Visibility walk to a triangle whose translate contains (x, y)."""
    P = M[0]
    TV = M[2]
    TO = M[3]
    TN = M[4]
    TS = M[5]
    bx = 0.0
    by = 0.0
    for k in range(3):
        v = TV[t, k]
        bx += P[v, 0] + TO[t, k, 0]
        by += P[v, 1] + TO[t, k, 1]
    sx = np.int64(np.floor(x - bx / 3.0 + 0.5))
    sy = np.int64(np.floor(y - by / 3.0 + 0.5))
    r = 0
    for step in range(maxsteps):
        moved = False
        for kk in range(3):
            i = (kk + r) % 3
            a = TV[t, (i + 1) % 3]
            b = TV[t, (i + 2) % 3]
            ax = P[a, 0] + TO[t, (i + 1) % 3, 0] + sx
            ay = P[a, 1] + TO[t, (i + 1) % 3, 1] + sy
            bx = P[b, 0] + TO[t, (i + 2) % 3, 0] + sx
            by = P[b, 1] + TO[t, (i + 2) % 3, 1] + sy
            if orient(ax, ay, bx, by, x, y) < 0:
                sx += TS[t, i, 0]
                sy += TS[t, i, 1]
                t = TN[t, i]
                moved = True
                break
        if not moved:
            return OK, t, sx, sy
        r = (r + 1) % 3
    return ERR_WALK, t, sx, sy


@njit
def find_cavity(M, pid, x, y, t0, sx0, sy0):
    """Triangles whose circumdisc contains (x, y), by breadth-first search.

    Returns ``(status, nc, cav, nb, bnd)``.  ``bnd[e]`` describes boundary
    edge e as ``a, oax, oay, b, obx, oby, u, usx, usy`` in the frame of the
    new point, where ``u`` is the triangle outside the cavity.
    """
    P = M[0]
    TV = M[2]
    TO = M[3]
    TN = M[4]
    TS = M[5]
    TMARK = M[6]
    TCS = M[7]
    META = M[12]
    cav = np.empty(CAV_CAP, np.int64)
    bnd = np.empty((CAV_CAP + 2, 9), np.int64)
    for k in range(3):
        v = TV[t0, k]
        if P[v, 0] + TO[t0, k, 0] + sx0 == x and P[v, 1] + TO[t0, k, 1] + sy0 == y:
            return ERR_DUP, 0, cav, 0, bnd
    META[M_STAMP] += 1
    stamp = META[M_STAMP]
    TMARK[t0] = stamp
    TCS[t0, 0] = sx0
    TCS[t0, 1] = sy0
    cav[0] = t0
    nc = 1
    nb = 0
    ptr = 0
    while ptr < nc:
        t = cav[ptr]
        sx = TCS[t, 0]
        sy = TCS[t, 1]
        ptr += 1
        for i in range(3):
            u = TN[t, i]
            usx = sx + TS[t, i, 0]
            usy = sy + TS[t, i, 1]
            if TMARK[u] == stamp:
                if TCS[u, 0] != usx or TCS[u, 1] != usy:
                    return ERR_WRAP, nc, cav, nb, bnd
                continue
            v0 = TV[u, 0]
            v1 = TV[u, 1]
            v2 = TV[u, 2]
            o0x = TO[u, 0, 0] + usx
            o0y = TO[u, 0, 1] + usy
            o1x = TO[u, 1, 0] + usx
            o1y = TO[u, 1, 1] + usy
            o2x = TO[u, 2, 0] + usx
            o2y = TO[u, 2, 1] + usy
            s = incircle_sos(P[v0, 0] + o0x, P[v0, 1] + o0y,
                             P[v1, 0] + o1x, P[v1, 1] + o1y,
                             P[v2, 0] + o2x, P[v2, 1] + o2y, x, y,
                             v0, o0x, o0y, v1, o1x, o1y, v2, o2x, o2y,
                             pid, 0, 0)
            if s > 0:
                if nc >= CAV_CAP:
                    return ERR_CAP, nc, cav, nb, bnd
                TMARK[u] = stamp
                TCS[u, 0] = usx
                TCS[u, 1] = usy
                cav[nc] = u
                nc += 1
            else:
                if nb >= CAV_CAP + 2:
                    return ERR_CAP, nc, cav, nb, bnd
                i1 = (i + 1) % 3
                i2 = (i + 2) % 3
                bnd[nb, 0] = TV[t, i1]
                bnd[nb, 1] = TO[t, i1, 0] + sx
                bnd[nb, 2] = TO[t, i1, 1] + sy
                bnd[nb, 3] = TV[t, i2]
                bnd[nb, 4] = TO[t, i2, 0] + sx
                bnd[nb, 5] = TO[t, i2, 1] + sy
                bnd[nb, 6] = u
                bnd[nb, 7] = usx
                bnd[nb, 8] = usy
                nb += 1
    return OK, nc, cav, nb, bnd


@njit
def order_boundary(bnd, nb):
    """Indices of boundary edges in cyclic (counter-clockwise) order."""
    order = np.empty(nb, np.int64)
    order[0] = 0
    for k in range(1, nb):
        e = order[k - 1]
        nxt = -1
        for f in range(nb):
            if bnd[f, 0] == bnd[e, 3] and bnd[f, 1] == bnd[e, 4] \
                    and bnd[f, 2] == bnd[e, 5]:
                nxt = f
                break
        if nxt < 0:
            return order, False
        order[k] = nxt
    return order, True


@njit
def commit_insert(M, pid, x, y, nc, cav, nb, bnd):
    """Replace the cavity by the fan around the new point ``pid``."""
    P = M[0]
    VT = M[1]
    TV = M[2]
    TO = M[3]
    TN = M[4]
    TS = M[5]
    META = M[12]
    slots = np.empty(nb, np.int64)
    for e in range(nb):
        if e < nc:
            slots[e] = cav[e]
        else:
            t = _new_tri(M)
            if t < 0:
                return ERR_CAP
            slots[e] = t
    # outside edge indices must be read before anything is overwritten
    jout = np.empty(nb, np.int64)
    for e in range(nb):
        jout[e] = _find_edge(M, bnd[e, 6], bnd[e, 7], bnd[e, 8],
                             bnd[e, 3], bnd[e, 4], bnd[e, 5],
                             bnd[e, 0], bnd[e, 1], bnd[e, 2])
        if jout[e] < 0:
            return ERR_HOLE
    P[pid, 0] = x
    P[pid, 1] = y
    cx = np.empty(nb, np.int64)
    cy = np.empty(nb, np.int64)
    for e in range(nb):
        a = bnd[e, 0]
        b = bnd[e, 3]
        gx = (P[a, 0] + bnd[e, 1] + P[b, 0] + bnd[e, 4] + x) / 3.0
        gy = (P[a, 1] + bnd[e, 2] + P[b, 1] + bnd[e, 5] + y) / 3.0
        cx[e] = np.int64(np.floor(gx))
        cy[e] = np.int64(np.floor(gy))
    for e in range(nb):
        T = slots[e]
        TV[T, 0] = bnd[e, 0]
        TV[T, 1] = bnd[e, 3]
        TV[T, 2] = pid
        TO[T, 0, 0] = bnd[e, 1] - cx[e]
        TO[T, 0, 1] = bnd[e, 2] - cy[e]
        TO[T, 1, 0] = bnd[e, 4] - cx[e]
        TO[T, 1, 1] = bnd[e, 5] - cy[e]
        TO[T, 2, 0] = -cx[e]
        TO[T, 2, 1] = -cy[e]
    for e in range(nb):
        T = slots[e]
        u = bnd[e, 6]
        j = jout[e]
        TN[T, 2] = u
        TS[T, 2, 0] = bnd[e, 7] - cx[e]
        TS[T, 2, 1] = bnd[e, 8] - cy[e]
        TN[u, j] = T
        TS[u, j, 0] = cx[e] - bnd[e, 7]
        TS[u, j, 1] = cy[e] - bnd[e, 8]
        f0 = -1
        f1 = -1
        for f in range(nb):
            if bnd[f, 0] == bnd[e, 3] and bnd[f, 1] == bnd[e, 4] \
                    and bnd[f, 2] == bnd[e, 5]:
                f0 = f
            if bnd[f, 3] == bnd[e, 0] and bnd[f, 4] == bnd[e, 1] \
                    and bnd[f, 5] == bnd[e, 2]:
                f1 = f
        if f0 < 0 or f1 < 0:
            return ERR_HOLE
        # opposite a: edge (b, new point); opposite b: edge (new point, a)
        TN[T, 0] = slots[f0]
        TS[T, 0, 0] = cx[f0] - cx[e]
        TS[T, 0, 1] = cy[f0] - cy[e]
        TN[T, 1] = slots[f1]
        TS[T, 1, 0] = cx[f1] - cx[e]
        TS[T, 1, 1] = cy[f1] - cy[e]
        VT[bnd[e, 0]] = T
        VT[bnd[e, 3]] = T
    VT[pid] = slots[0]
    META[M_LAST] = slots[0]
    _live_add(M, pid)
    return OK


@njit
def insert_point(M, pid, x, y):
    """Locate, carve the cavity and commit.  Convenience for builds."""
    META = M[12]
    st, t, sx, sy = locate(M, x, y, META[M_LAST], 100000)
    if st != OK:
        return st
    st, nc, cav, nb, bnd = find_cavity(M, pid, x, y, t, sx, sy)
    if st != OK:
        return st
    return commit_insert(M, pid, x, y, nc, cav, nb, bnd)


# ---------------------------------------------------------------------------
# stars and deletion

@njit
def _corner_of(M, t, pid, sx, sy):
    """Corner of t holding pid at offset (-sx, -sy), i.e. at the origin of
    the frame where t is translated by (sx, sy)."""
    TV = M[2]
    TO = M[3]
    for k in range(3):
        if TV[t, k] == pid and TO[t, k, 0] + sx == 0 and TO[t, k, 1] + sy == 0:
            return k
    return -1


@njit
def find_star(M, pid):
    """Triangles around ``pid`` in counter-clockwise order.

    Returns ``(status, d, star, link, outer)`` where ``star[j] = (t, sx, sy,
    k)`` puts pid at its own stored position, ``link[j] = (id, ox, oy)`` is
    the j-th neighbour and ``outer[j] = (u, usx, usy)`` the triangle across
    the link edge (link[j], link[j+1]).
    """
    VT = M[1]
    TV = M[2]
    TO = M[3]
    TN = M[4]
    TS = M[5]
    star = np.empty((STAR_CAP, 4), np.int64)
    link = np.empty((STAR_CAP, 3), np.int64)
    outer = np.empty((STAR_CAP, 3), np.int64)
    t0 = VT[pid]
    if t0 < 0:
        return ERR_HOLE, 0, star, link, outer
    k0 = -1
    for k in range(3):
        if TV[t0, k] == pid:
            k0 = k
            break
    sx0 = -TO[t0, k0, 0]
    sy0 = -TO[t0, k0, 1]
    t = t0
    sx = sx0
    sy = sy0
    k = k0
    d = 0
    while True:
        if d >= STAR_CAP:
            return ERR_CAP, d, star, link, outer
        k1 = (k + 1) % 3
        star[d, 0] = t
        star[d, 1] = sx
        star[d, 2] = sy
        star[d, 3] = k
        link[d, 0] = TV[t, k1]
        link[d, 1] = TO[t, k1, 0] + sx
        link[d, 2] = TO[t, k1, 1] + sy
        outer[d, 0] = TN[t, k]
        outer[d, 1] = sx + TS[t, k, 0]
        outer[d, 2] = sy + TS[t, k, 1]
        d += 1
        t2 = TN[t, k1]
        sx2 = sx + TS[t, k1, 0]
        sy2 = sy + TS[t, k1, 1]
        if t2 == t0:
            if sx2 == sx0 and sy2 == sy0:
                break
            return ERR_WRAP, d, star, link, outer
        k2 = _corner_of(M, t2, pid, sx2, sy2)
        if k2 < 0:
            return ERR_HOLE, d, star, link, outer
        t = t2
        sx = sx2
        sy = sy2
        k = k2
    return OK, d, star, link, outer


@njit
def _inside_polygon(qx, qy, d, x, y):
    inside = False
    j = d - 1
    for i in range(d):
        if (qy[i] > y) != (qy[j] > y):
            xc = qx[i] + (y - qy[i]) * (qx[j] - qx[i]) / (qy[j] - qy[i])
            if x < xc:
                inside = not inside
        j = i
    return inside


@njit
def hole_triangulation(M, d, link):
    """Delaunay triangulation of the star-shaped hole left by a deletion.

    Brute force over triples of link vertices: a triple is kept when it is
    counter-clockwise, lies inside the link polygon and its circumdisc holds
    no other link vertex.  Returns ``(status, hole)`` with ``hole`` of shape
    (d-2, 3) indexing into ``link``.
    """
    P = M[0]
    qx = np.empty(d)
    qy = np.empty(d)
    for i in range(d):
        v = link[i, 0]
        qx[i] = P[v, 0] + link[i, 1]
        qy[i] = P[v, 1] + link[i, 2]
    hole = np.empty((max(d - 2, 1), 3), np.int64)
    if d < 3:
        return ERR_HOLE, hole
    count = 0
    for i in range(d):
        for j in range(i + 1, d):
            for l in range(j + 1, d):
                if orient(qx[i], qy[i], qx[j], qy[j], qx[l], qy[l]) <= 0:
                    continue
                gx = (qx[i] + qx[j] + qx[l]) / 3.0
                gy = (qy[i] + qy[j] + qy[l]) / 3.0
                if not _inside_polygon(qx, qy, d, gx, gy):
                    continue
                empty = True
                for m in range(d):
                    if m == i or m == j or m == l:
                        continue
                    s = incircle_sos(qx[i], qy[i], qx[j], qy[j], qx[l], qy[l],
                                     qx[m], qy[m],
                                     link[i, 0], link[i, 1], link[i, 2],
                                     link[j, 0], link[j, 1], link[j, 2],
                                     link[l, 0], link[l, 1], link[l, 2],
                                     link[m, 0], link[m, 1], link[m, 2])
                    if s > 0:
                        empty = False
                        break
                if empty:
                    if count >= d - 2:
                        return ERR_HOLE, hole
                    hole[count, 0] = i
                    hole[count, 1] = j
                    hole[count, 2] = l
                    count += 1
    if count != d - 2:
        return ERR_HOLE, hole
    return OK, hole


@njit
def commit_delete(M, pid, d, star, link, outer, hole, keep_id):
    """Replace the star of ``pid`` by the hole triangulation."""
    P = M[0]
    VT = M[1]
    TV = M[2]
    TO = M[3]
    TN = M[4]
    TS = M[5]
    META = M[12]
    nh = d - 2
    jout = np.empty(d, np.int64)
    for j in range(d):
        jn = (j + 1) % d
        jout[j] = _find_edge(M, outer[j, 0], outer[j, 1], outer[j, 2],
                             link[jn, 0], link[jn, 1], link[jn, 2],
                             link[j, 0], link[j, 1], link[j, 2])
        if jout[j] < 0:
            return ERR_HOLE
    slots = np.empty(nh, np.int64)
    for h in range(nh):
        slots[h] = star[h, 0]
    cx = np.empty(nh, np.int64)
    cy = np.empty(nh, np.int64)
    for h in range(nh):
        gx = 0.0
        gy = 0.0
        for k in range(3):
            q = hole[h, k]
            v = link[q, 0]
            gx += P[v, 0] + link[q, 1]
            gy += P[v, 1] + link[q, 2]
        cx[h] = np.int64(np.floor(gx / 3.0))
        cy[h] = np.int64(np.floor(gy / 3.0))
    for h in range(nh):
        T = slots[h]
        for k in range(3):
            q = hole[h, k]
            TV[T, k] = link[q, 0]
            TO[T, k, 0] = link[q, 1] - cx[h]
            TO[T, k, 1] = link[q, 2] - cy[h]
    for h in range(nh):
        T = slots[h]
        for k in range(3):
            p = hole[h, (k + 1) % 3]
            q = hole[h, (k + 2) % 3]
            if q == (p + 1) % d:
                u = outer[p, 0]
                TN[T, k] = u
                TS[T, k, 0] = outer[p, 1] - cx[h]
                TS[T, k, 1] = outer[p, 2] - cy[h]
                TN[u, jout[p]] = T
                TS[u, jout[p], 0] = cx[h] - outer[p, 1]
                TS[u, jout[p], 1] = cy[h] - outer[p, 2]
            else:
                other = -1
                for g in range(nh):
                    if g == h:
                        continue
                    for kk in range(3):
                        if hole[g, (kk + 1) % 3] == q and hole[g, (kk + 2) % 3] == p:
                            other = g
                            break
                    if other >= 0:
                        break
                if other < 0:
                    return ERR_HOLE
                TN[T, k] = slots[other]
                TS[T, k, 0] = cx[other] - cx[h]
                TS[T, k, 1] = cy[other] - cy[h]
        for k in range(3):
            VT[TV[T, k]] = T
    _free_tri(M, star[d - 2, 0])
    _free_tri(M, star[d - 1, 0])
    VT[pid] = -1
    META[M_LAST] = slots[0]
    _live_remove(M, pid)
    if not keep_id:
        release_point_id(M, pid)
    return OK


@njit
def star_polygon(M, v):
    """Voronoi polygon of v as circumcenters of its star, relative to P[v]."""
    P = M[0]
    st, d, star, link, outer = find_star(M, v)
    px = np.empty(max(d, 1))
    py = np.empty(max(d, 1))
    if st != OK:
        return st, px, py, 0
    vx = P[v, 0]
    vy = P[v, 1]
    for j in range(d):
        jn = (j + 1) % d
        a = link[j, 0]
        b = link[jn, 0]
        ax = P[a, 0] + link[j, 1] - vx
        ay = P[a, 1] + link[j, 2] - vy
        bx = P[b, 0] + link[jn, 1] - vx
        by = P[b, 1] + link[jn, 2] - vy
        px[j], py[j] = circumcenter(0.0, 0.0, ax, ay, bx, by)
    return OK, px, py, d


@njit
def update_cell(M, v):
    CELL = M[13]
    st, px, py, d = star_polygon(M, v)
    if st != OK:
        return st
    hmin, hmax, vol = poly_stats(px, py, d)
    CELL[v, 0] = hmin
    CELL[v, 1] = hmax
    CELL[v, 2] = vol
    return OK


@njit
def update_all_cells(M):
    LIVE = M[10]
    META = M[12]
    for i in range(META[M_NLIVE]):
        st = update_cell(M, LIVE[i])
        if st != OK:
            return st
    return OK


# ---------------------------------------------------------------------------
# construction

@njit
def init_from_triangles(M, pts, ids, tv, to):
    """Load a valid periodic triangulation given as canonical triangles."""
    P = M[0]
    VT = M[1]
    TV = M[2]
    TO = M[3]
    TN = M[4]
    TS = M[5]
    META = M[12]
    for i in range(ids.shape[0]):
        p = ids[i]
        P[p, 0] = pts[i, 0]
        P[p, 1] = pts[i, 1]
        _live_add(M, p)
        if p + 1 > META[M_PTOP]:
            META[M_PTOP] = p + 1
    m = tv.shape[0]
    for t in range(m):
        for k in range(3):
            TV[t, k] = tv[t, k]
            TO[t, k, 0] = to[t, k, 0]
            TO[t, k, 1] = to[t, k, 1]
            VT[tv[t, k]] = t
    META[M_TTOP] = m
    # adjacency by matching reversed edges (quadratic, only used on
    # small seed triangulations)
    for t in range(m):
        for i in range(3):
            a = TV[t, (i + 1) % 3]
            b = TV[t, (i + 2) % 3]
            oax = TO[t, (i + 1) % 3, 0]
            oay = TO[t, (i + 1) % 3, 1]
            obx = TO[t, (i + 2) % 3, 0]
            oby = TO[t, (i + 2) % 3, 1]
            found = False
            for u in range(m):
                for j in range(3):
                    if TV[u, (j + 1) % 3] != b or TV[u, (j + 2) % 3] != a:
                        continue
                    sx = obx - TO[u, (j + 1) % 3, 0]
                    sy = oby - TO[u, (j + 1) % 3, 1]
                    if oax - TO[u, (j + 2) % 3, 0] != sx or oay - TO[u, (j + 2) % 3, 1] != sy:
                        continue
                    if u == t and sx == 0 and sy == 0:
                        continue
                    TN[t, i] = u
                    TS[t, i, 0] = sx
                    TS[t, i, 1] = sy
                    found = True
                    break
                if found:
                    break
            if not found:
                return ERR_HOLE
    META[M_LAST] = 0
    return OK


@njit
def star_overlaps(M, d, star, outer):
    """True when a triangle across the link is itself part of the star, i.e.
    the star meets one of its own periodic translates."""
    TMARK = M[6]
    META = M[12]
    META[M_STAMP] += 1
    stamp = META[M_STAMP]
    for j in range(d):
        TMARK[star[j, 0]] = stamp
    for j in range(d):
        if TMARK[outer[j, 0]] == stamp:
            return True
    return False


@njit
def delete_point(M, pid):
    st, d, star, link, outer = find_star(M, pid)
    if st != OK:
        return st
    if star_overlaps(M, d, star, outer):
        return ERR_WRAP
    st, hole = hole_triangulation(M, d, link)
    if st != OK:
        return st
    return commit_delete(M, pid, d, star, link, outer, hole, False)


@njit
def max_circumradius(M):
    P = M[0]
    TV = M[2]
    TO = M[3]
    META = M[12]
    rmax = 0.0
    for t in range(META[M_TTOP]):
        if TV[t, 0] < 0:
            continue
        a = TV[t, 0]
        b = TV[t, 1]
        c = TV[t, 2]
        _, R, _, _ = tri_stats(P[a, 0] + TO[t, 0, 0], P[a, 1] + TO[t, 0, 1],
                               P[b, 0] + TO[t, 1, 0], P[b, 1] + TO[t, 1, 1],
                               P[c, 0] + TO[t, 2, 0], P[c, 1] + TO[t, 2, 1])
        if R > rmax:
            rmax = R
    return rmax


@njit
def build_from_seed(M, pts, ids, dummy_ids):
    """Insert ``pts`` into a seeded mesh, then delete the seed points."""
    for i in range(ids.shape[0]):
        st = insert_point(M, ids[i], pts[i, 0], pts[i, 1])
        if st != OK:
            return st, ids[i]
    for i in range(dummy_ids.shape[0]):
        st = delete_point(M, dummy_ids[i])
        if st != OK:
            return st, dummy_ids[i]
    return OK, -1


@njit
def extract_triangles(M):
    TV = M[2]
    TO = M[3]
    META = M[12]
    m = 0
    for t in range(META[M_TTOP]):
        if TV[t, 0] >= 0:
            m += 1
    tv = np.empty((m, 3), np.int64)
    to = np.empty((m, 3, 2), np.int64)
    tn = np.empty((m, 3), np.int64)
    slot = np.empty(m, np.int64)
    i = 0
    for t in range(META[M_TTOP]):
        if TV[t, 0] >= 0:
            tv[i] = TV[t]
            to[i] = TO[t]
            slot[i] = t
            i += 1
    return tv, to, slot
