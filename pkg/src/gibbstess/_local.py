"""Local energy kernels on the periodic mesh.

Every built-in model is linear in its smooth parameter, h = theta * S, so
the kernels only report the change ``dS`` of the smooth statistic and a
``forbidden`` flag from the hardcore part (which never reads theta).

Parameter vector ``PAR``::

    0 eps      (< 0: inactive)
    1 alpha    (inf: inactive)
    2 B        (inf: inactive)
    3 angle    (< 0: inactive)
    4 power    exponent of the Voronoi pair potential
    5 smooth   1.0 when the Delaunay perimeter potential is on

Model kinds: 0 null, 1 Delaunay, 2 Voronoi.
"""

import numpy as np

from ._jit import njit
from ._mesh import (
    ERR_DUP, ERR_HOLE, ERR_WRAP, M_LAST, M_STAMP, M_VSTAMP, OK, RMAX_GEOM,
    clip_halfplane, commit_delete, commit_insert, find_cavity, find_star,
    hole_triangulation, locate, order_boundary, poly_stats, star_overlaps,
    star_polygon, tri_stats, update_cell, circumcenter,
)

KIND_NULL = 0
KIND_DELAUNAY = 1
KIND_VORONOI = 2

WALK_STEPS = 1000000


@njit
def tri_forbidden(PAR, lmin, R, amin):
    if PAR[0] >= 0.0 and lmin <= PAR[0]:
        return True
    if R >= PAR[1]:
        return True
    if PAR[3] >= 0.0 and amin <= PAR[3]:
        return True
    return False


@njit
def cell_forbidden(PAR, hmin, hmax, vol):
    if PAR[0] >= 0.0 and hmin <= PAR[0]:
        return True
    if hmax >= PAR[1]:
        return True
    if hmax * hmax >= PAR[2] * vol:
        return True
    return False


@njit
def pair_pot(PAR, v1, v2):
    if v1 == v2:
        return 0.0
    r = max(v1, v2) / min(v1, v2) - 1.0
    if PAR[4] == 0.5:
        return np.sqrt(r)
    return r ** PAR[4]


@njit
def _tri_eval(P, TV, TO, t, PAR):
    a = TV[t, 0]
    b = TV[t, 1]
    c = TV[t, 2]
    return tri_stats(P[a, 0] + TO[t, 0, 0], P[a, 1] + TO[t, 0, 1],
                     P[b, 0] + TO[t, 1, 0], P[b, 1] + TO[t, 1, 1],
                     P[c, 0] + TO[t, 2, 0], P[c, 1] + TO[t, 2, 1])


# ---------------------------------------------------------------------------
# Delaunay models

@njit
def del_birth(M, PAR, pid, x, y):
    """Virtual insertion.  Returns status, forbidden, dS and the cavity."""
    P = M[0]
    TV = M[2]
    TO = M[3]
    META = M[12]
    st, t, sx, sy = locate(M, x, y, META[M_LAST], WALK_STEPS)
    if st != OK:
        return st, False, 0.0, 0, np.empty(0, np.int64), 0, np.empty((0, 9), np.int64)
    st, nc, cav, nb, bnd = find_cavity(M, pid, x, y, t, sx, sy)
    if st != OK:
        return st, False, 0.0, nc, cav, nb, bnd
    forb = False
    dS = 0.0
    for e in range(nb):
        a = bnd[e, 0]
        b = bnd[e, 3]
        lmin, R, amin, per = tri_stats(P[a, 0] + bnd[e, 1], P[a, 1] + bnd[e, 2],
                                       P[b, 0] + bnd[e, 4], P[b, 1] + bnd[e, 5],
                                       x, y)
        if R >= RMAX_GEOM:
            return ERR_WRAP, False, 0.0, nc, cav, nb, bnd
        if tri_forbidden(PAR, lmin, R, amin):
            forb = True
        dS += per
    for i in range(nc):
        lmin, R, amin, per = _tri_eval(P, TV, TO, cav[i], PAR)
        dS -= per
    if PAR[5] == 0.0:
        dS = 0.0
    return OK, forb, dS, nc, cav, nb, bnd


@njit
def del_death(M, PAR, pid):
    """Virtual deletion.  dS = S(gamma - x) - S(gamma)."""
    P = M[0]
    TV = M[2]
    TO = M[3]
    st, d, star, link, outer = find_star(M, pid)
    hole = np.empty((1, 3), np.int64)
    if st != OK:
        return st, False, 0.0, d, star, link, outer, hole
    if star_overlaps(M, d, star, outer):
        return ERR_WRAP, False, 0.0, d, star, link, outer, hole
    st, hole = hole_triangulation(M, d, link)
    if st != OK:
        return st, False, 0.0, d, star, link, outer, hole
    forb = False
    dS = 0.0
    for h in range(d - 2):
        i = hole[h, 0]
        j = hole[h, 1]
        k = hole[h, 2]
        a = link[i, 0]
        b = link[j, 0]
        c = link[k, 0]
        lmin, R, amin, per = tri_stats(P[a, 0] + link[i, 1], P[a, 1] + link[i, 2],
                                       P[b, 0] + link[j, 1], P[b, 1] + link[j, 2],
                                       P[c, 0] + link[k, 1], P[c, 1] + link[k, 2])
        if R >= RMAX_GEOM:
            return ERR_WRAP, False, 0.0, d, star, link, outer, hole
        if tri_forbidden(PAR, lmin, R, amin):
            forb = True
        dS += per
    for j in range(d):
        lmin, R, amin, per = _tri_eval(P, TV, TO, star[j, 0], PAR)
        dS -= per
    if PAR[5] == 0.0:
        dS = 0.0
    return OK, forb, dS, d, star, link, outer, hole


# ---------------------------------------------------------------------------
# Voronoi models

@njit
def _mark_set(M, S, nS):
    VMARK = M[14]
    META = M[12]
    META[M_VSTAMP] += 1
    stamp = META[M_VSTAMP]
    for i in range(nS):
        VMARK[S[i]] = stamp
    return stamp


@njit
def vor_pair_sum(M, PAR, S, nS):
    """Sum of the pair potential over Delaunay edges touching S, each once,
    using the cached cell volumes."""
    CELL = M[13]
    VMARK = M[14]
    stamp = _mark_set(M, S, nS)
    total = 0.0
    for s in range(nS):
        v = S[s]
        st, d, star, link, outer = find_star(M, v)
        if st != OK:
            return st, 0.0
        for j in range(d):
            w = link[j, 0]
            if VMARK[w] == stamp and w <= v:
                continue
            total += pair_pot(PAR, CELL[v, 2], CELL[w, 2])
    return OK, total


@njit
def vor_birth(M, PAR, pid, x, y):
    """Virtual insertion for a Voronoi model.

    The new cells of the boundary vertices are their old cells clipped by
    the bisector with x; the cell of x comes from the fan circumcenters.
    Returns status, forbidden, dS, cavity data and the boundary set S.
    """
    P = M[0]
    TMARK = M[6]
    META = M[12]
    CELL = M[13]
    VMARK = M[14]
    VTMP = M[15]
    S = np.empty(0, np.int64)
    st, t, sx, sy = locate(M, x, y, META[M_LAST], WALK_STEPS)
    if st != OK:
        return st, False, 0.0, 0, np.empty(0, np.int64), 0, np.empty((0, 9), np.int64), S
    st, nc, cav, nb, bnd = find_cavity(M, pid, x, y, t, sx, sy)
    if st != OK:
        return st, False, 0.0, nc, cav, nb, bnd, S
    cstamp = META[M_STAMP]
    order, ok = order_boundary(bnd, nb)
    if not ok:
        return ERR_HOLE, False, 0.0, nc, cav, nb, bnd, S
    S = np.empty(nb, np.int64)
    for e in range(nb):
        S[e] = bnd[e, 0]
    # boundary ids must be distinct for a local update to make sense
    stamp = _mark_set(M, S, nb)
    for e in range(nb):
        for f in range(e):
            if S[f] == S[e]:
                return ERR_WRAP, False, 0.0, nc, cav, nb, bnd, S
    forb = False
    # cell of x
    px = np.empty(nb)
    py = np.empty(nb)
    for k in range(nb):
        e = order[k]
        a = bnd[e, 0]
        b = bnd[e, 3]
        ux, uy = circumcenter(P[a, 0] + bnd[e, 1] - x, P[a, 1] + bnd[e, 2] - y,
                              P[b, 0] + bnd[e, 4] - x, P[b, 1] + bnd[e, 5] - y,
                              0.0, 0.0)
        px[k] = ux
        py[k] = uy
    hmin, hmax, vol_x = poly_stats(px, py, nb)
    if cell_forbidden(PAR, hmin, hmax, vol_x):
        forb = True
    # clipped boundary cells
    for e in range(nb):
        v = S[e]
        st, qx, qy, d = star_polygon(M, v)
        if st != OK:
            return st, False, 0.0, nc, cav, nb, bnd, S
        wx = x - (P[v, 0] + bnd[e, 1])
        wy = y - (P[v, 1] + bnd[e, 2])
        cx, cy, m = clip_halfplane(qx, qy, d, wx, wy)
        h0, h1, vv = poly_stats(cx, cy, m)
        VTMP[v, 0] = h0
        VTMP[v, 1] = h1
        VTMP[v, 2] = vv
        if cell_forbidden(PAR, h0, h1, vv):
            forb = True
    st, before = vor_pair_sum(M, PAR, S, nb)
    if st != OK:
        return st, False, 0.0, nc, cav, nb, bnd, S
    stamp = _mark_set(M, S, nb)
    after = 0.0
    for s in range(nb):
        v = S[s]
        st, d, star, link, outer = find_star(M, v)
        if st != OK:
            return st, False, 0.0, nc, cav, nb, bnd, S
        for j in range(d):
            w = link[j, 0]
            # edge (v, link[j]) sits between star triangles j-1 and j
            jp = (j - 1 + d) % d
            if TMARK[star[j, 0]] == cstamp and TMARK[star[jp, 0]] == cstamp:
                continue
            if VMARK[w] == stamp:
                if w <= v:
                    continue
                vw = VTMP[w, 2]
            else:
                vw = CELL[w, 2]
            after += pair_pot(PAR, VTMP[v, 2], vw)
        after += pair_pot(PAR, vol_x, VTMP[v, 2])
    return OK, forb, after - before, nc, cav, nb, bnd, S


@njit
def vor_commit_birth(M, pid, x, y, nc, cav, nb, bnd, S):
    st = commit_insert(M, pid, x, y, nc, cav, nb, bnd)
    if st != OK:
        return st
    for i in range(nb):
        st = update_cell(M, S[i])
        if st != OK:
            return st
    return update_cell(M, pid)


@njit
def vor_death_commit(M, PAR, pid):
    """Delete pid for real and report (status, forbidden, dS, S, saved).

    ``saved`` holds the old cell cache rows of S followed by pid's row, so
    that :func:`undo_death` can restore it.
    """
    P = M[0]
    CELL = M[13]
    st, d, star, link, outer = find_star(M, pid)
    S = np.empty(d + 1, np.int64)
    saved = np.empty((d + 1, 3))
    if st != OK:
        return st, False, 0.0, S, saved, 0
    if star_overlaps(M, d, star, outer):
        return ERR_WRAP, False, 0.0, S, saved, 0
    for j in range(d):
        S[j] = link[j, 0]
        if S[j] == pid:
            return ERR_WRAP, False, 0.0, S, saved, 0
        for k in range(j):
            if S[k] == S[j]:
                return ERR_WRAP, False, 0.0, S, saved, 0
    S[d] = pid
    st, hole = hole_triangulation(M, d, link)
    if st != OK:
        return st, False, 0.0, S, saved, 0
    # validity of the hole before touching anything
    for h in range(d - 2):
        i = hole[h, 0]
        j = hole[h, 1]
        k = hole[h, 2]
        a = link[i, 0]
        b = link[j, 0]
        c = link[k, 0]
        lmin, R, amin, per = tri_stats(P[a, 0] + link[i, 1], P[a, 1] + link[i, 2],
                                       P[b, 0] + link[j, 1], P[b, 1] + link[j, 2],
                                       P[c, 0] + link[k, 1], P[c, 1] + link[k, 2])
        if R >= RMAX_GEOM:
            return ERR_WRAP, False, 0.0, S, saved, 0
    st, before = vor_pair_sum(M, PAR, S, d + 1)
    if st != OK:
        return st, False, 0.0, S, saved, 0
    for j in range(d + 1):
        saved[j, 0] = CELL[S[j], 0]
        saved[j, 1] = CELL[S[j], 1]
        saved[j, 2] = CELL[S[j], 2]
    st = commit_delete(M, pid, d, star, link, outer, hole, True)
    if st != OK:
        return st, False, 0.0, S, saved, d
    forb = False
    for j in range(d):
        st = update_cell(M, S[j])
        if st != OK:
            return st, False, 0.0, S, saved, d
        if cell_forbidden(PAR, CELL[S[j], 0], CELL[S[j], 1], CELL[S[j], 2]):
            forb = True
    st, after = vor_pair_sum(M, PAR, S, d)
    if st != OK:
        return st, False, 0.0, S, saved, d
    return OK, forb, after - before, S, saved, d


@njit
def reinsert(M, pid, x, y):
    """Insert pid at (x, y) starting the walk at the last touched triangle."""
    META = M[12]
    st, t, sx, sy = locate(M, x, y, META[M_LAST], WALK_STEPS)
    if st != OK:
        return st
    st, nc, cav, nb, bnd = find_cavity(M, pid, x, y, t, sx, sy)
    if st != OK:
        return st
    return commit_insert(M, pid, x, y, nc, cav, nb, bnd)


@njit
def undo_death(M, pid, x, y, S, saved, d):
    CELL = M[13]
    st = reinsert(M, pid, x, y)
    if st != OK:
        return st
    for j in range(d + 1):
        CELL[S[j], 0] = saved[j, 0]
        CELL[S[j], 1] = saved[j, 1]
        CELL[S[j], 2] = saved[j, 2]
    return OK


# ---------------------------------------------------------------------------
# batch evaluations used by estimation and residuals

@njit
def birth_profile(M, kind, PAR, pid, xs, ys):
    """For each location: status, forbidden flag and dS of inserting it."""
    n = xs.shape[0]
    status = np.zeros(n, np.int64)
    forb = np.zeros(n, np.bool_)
    dS = np.zeros(n)
    if kind == KIND_NULL:
        return status, forb, dS
    for i in range(n):
        if kind == KIND_DELAUNAY:
            st, f, ds, nc, cav, nb, bnd = del_birth(M, PAR, pid, xs[i], ys[i])
        else:
            st, f, ds, nc, cav, nb, bnd, S = vor_birth(M, PAR, pid, xs[i], ys[i])
        status[i] = st
        forb[i] = f
        dS[i] = ds
    return status, forb, dS


@njit
def death_profile(M, kind, PAR, pids):
    """For each point: status, whether gamma - x is forbidden, and
    S(gamma) - S(gamma - x), the smooth statistic of h(x, gamma - x)."""
    P = M[0]
    n = pids.shape[0]
    status = np.zeros(n, np.int64)
    forb = np.zeros(n, np.bool_)
    hS = np.zeros(n)
    if kind == KIND_NULL:
        return status, forb, hS
    for i in range(n):
        pid = pids[i]
        if kind == KIND_DELAUNAY:
            st, f, ds, d, star, link, outer, hole = del_death(M, PAR, pid)
        else:
            x = P[pid, 0]
            y = P[pid, 1]
            st, f, ds, S, saved, d = vor_death_commit(M, PAR, pid)
            if st == OK:
                st2 = undo_death(M, pid, x, y, S, saved, d)
                if st2 != OK:
                    status[i] = st2
                    return status, forb, hS
            elif d > 0:
                # the mesh was modified before the failure: unrecoverable
                status[i] = st
                return status, forb, hS
        status[i] = st
        forb[i] = f
        hS[i] = -ds
    return status, forb, hS
