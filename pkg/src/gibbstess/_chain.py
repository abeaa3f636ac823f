"""Birth-death-move blocks, run entirely inside the kernels.

Random numbers are drawn outside (one row of ``R`` per step: a, b, u, v,
n1, n2) so the two backends consume exactly the same stream.
"""

import numpy as np

from ._jit import njit
from ._local import (
    KIND_DELAUNAY, cell_forbidden, del_birth, del_death, reinsert,
    tri_forbidden, undo_death, vor_birth, vor_commit_birth, vor_death_commit,
)
from ._mesh import (
    M_NLIVE, M_STAMP, M_VSTAMP, OK, commit_delete, commit_insert,
    new_point_id, release_point_id, tri_stats, wrap_q,
)

# counters layout
C_BIRTH = 0
C_DEATH = 1
C_MOVE = 2
C_GEOM = 3          # proposals rejected because the geometry could not follow


@njit
def g_value(gcode, GPAR, x, y):
    if gcode == 0:
        return GPAR[0]
    dx = x - 0.5
    dy = y - 0.5
    r2 = dx * dx + dy * dy
    if r2 == 0.0:
        return np.inf
    return GPAR[0] * r2 ** (-GPAR[1])


@njit
def _accept(b, log_ratio):
    # b < exp(log_ratio) without overflow
    if log_ratio >= 0.0:
        return True
    return b < np.exp(log_ratio)


@njit
def _hole_forbidden(M, PAR, star, d, cstamp):
    """Any surviving hole triangle (not swallowed by the new cavity)
    violating the hardcore part."""
    P = M[0]
    TV = M[2]
    TO = M[3]
    TMARK = M[6]
    for h in range(d - 2):
        t = star[h, 0]
        if TMARK[t] == cstamp:
            continue
        a = TV[t, 0]
        b = TV[t, 1]
        c = TV[t, 2]
        lmin, R, amin, per = tri_stats(P[a, 0] + TO[t, 0, 0], P[a, 1] + TO[t, 0, 1],
                                       P[b, 0] + TO[t, 1, 0], P[b, 1] + TO[t, 1, 1],
                                       P[c, 0] + TO[t, 2, 0], P[c, 1] + TO[t, 2, 1])
        if tri_forbidden(PAR, lmin, R, amin):
            return True
    return False


@njit
def run_block(M, kind, PAR, theta, gcode, GPAR, sigma, pb, pd, R, counts,
              nmin, S_acc):
    """Run ``R.shape[0]`` steps.  Returns a status (non-zero means the
    mesh could not be restored and the chain must stop)."""
    P = M[0]
    LIVE = M[10]
    META = M[12]
    CELL = M[13]
    VMARK = M[14]
    log_bd = np.log(pd / pb)
    for step in range(R.shape[0]):
        a = R[step, 0]
        b = R[step, 1]
        n = META[M_NLIVE]
        if a < pb:
            x = wrap_q(R[step, 2])
            y = wrap_q(R[step, 3])
            pid = new_point_id(M)
            if pid < 0:
                return 4
            if kind == KIND_DELAUNAY:
                st, forb, dS, nc, cav, nb, bnd = del_birth(M, PAR, pid, x, y)
                S2 = np.empty(0, np.int64)
            else:
                st, forb, dS, nc, cav, nb, bnd, S2 = vor_birth(M, PAR, pid, x, y)
            if st != OK:
                counts[C_GEOM] += 1
                release_point_id(M, pid)
                continue
            if forb:
                release_point_id(M, pid)
                continue
            lr = -theta * dS + np.log(g_value(gcode, GPAR, x, y)) - np.log(n + 1.0) + log_bd
            if _accept(b, lr):
                if kind == KIND_DELAUNAY:
                    st = commit_insert(M, pid, x, y, nc, cav, nb, bnd)
                else:
                    st = vor_commit_birth(M, pid, x, y, nc, cav, nb, bnd, S2)
                if st != OK:
                    return st
                S_acc[0] += dS
                counts[C_BIRTH] += 1
            else:
                release_point_id(M, pid)
        elif a >= 1.0 - pd:
            if n - 1 < nmin:
                continue
            i = min(np.int64(R[step, 2] * n), n - 1)
            pid = LIVE[i]
            x = P[pid, 0]
            y = P[pid, 1]
            base = np.log(n) - np.log(g_value(gcode, GPAR, x, y)) - log_bd
            if kind == KIND_DELAUNAY:
                st, forb, dS, d, star, link, outer, hole = del_death(M, PAR, pid)
                if st != OK:
                    counts[C_GEOM] += 1
                    continue
                if forb:
                    continue
                if _accept(b, base - theta * dS):
                    st = commit_delete(M, pid, d, star, link, outer, hole, False)
                    if st != OK:
                        return st
                    S_acc[0] += dS
                    counts[C_DEATH] += 1
            else:
                st, forb, dS, S1, saved, d = vor_death_commit(M, PAR, pid)
                if st != OK:
                    if d > 0:
                        return st
                    counts[C_GEOM] += 1
                    continue
                if (not forb) and _accept(b, base - theta * dS):
                    release_point_id(M, pid)
                    S_acc[0] += dS
                    counts[C_DEATH] += 1
                else:
                    st = undo_death(M, pid, x, y, S1, saved, d)
                    if st != OK:
                        return st
        else:
            if n < 1:
                continue
            i = min(np.int64(R[step, 2] * n), n - 1)
            pid = LIVE[i]
            x0 = P[pid, 0]
            y0 = P[pid, 1]
            x1 = wrap_q(x0 + sigma * R[step, 4])
            y1 = wrap_q(y0 + sigma * R[step, 5])
            if x1 == x0 and y1 == y0:
                counts[C_MOVE] += 1
                continue
            base = np.log(g_value(gcode, GPAR, x1, y1)) - np.log(g_value(gcode, GPAR, x0, y0))
            if kind == KIND_DELAUNAY:
                st, forb, dS1, d, star, link, outer, hole = del_death(M, PAR, pid)
                if st != OK:
                    counts[C_GEOM] += 1
                    continue
                st = commit_delete(M, pid, d, star, link, outer, hole, True)
                if st != OK:
                    return st
                st, forb2, dS2, nc, cav, nb, bnd = del_birth(M, PAR, pid, x1, y1)
                ok = st == OK
                if not ok:
                    counts[C_GEOM] += 1
                else:
                    cstamp = META[M_STAMP]
                    ok = (not forb2) and not _hole_forbidden(M, PAR, star, d, cstamp)
                    ok = ok and _accept(b, base - theta * (dS1 + dS2))
                if ok:
                    st = commit_insert(M, pid, x1, y1, nc, cav, nb, bnd)
                    if st != OK:
                        return st
                    S_acc[0] += dS1 + dS2
                    counts[C_MOVE] += 1
                else:
                    st = reinsert(M, pid, x0, y0)
                    if st != OK:
                        return st
            else:
                st, forb1, dS1, S1, saved, d = vor_death_commit(M, PAR, pid)
                if st != OK:
                    if d > 0:
                        return st
                    counts[C_GEOM] += 1
                    continue
                st, forb2, dS2, nc, cav, nb, bnd, S2 = vor_birth(M, PAR, pid, x1, y1)
                ok = st == OK
                if not ok:
                    counts[C_GEOM] += 1
                else:
                    ok = not forb2
                    if ok:
                        # cells left final by the deletion must be allowed
                        vstamp = META[M_VSTAMP]
                        for j in range(d):
                            v = S1[j]
                            if VMARK[v] != vstamp and cell_forbidden(
                                    PAR, CELL[v, 0], CELL[v, 1], CELL[v, 2]):
                                ok = False
                                break
                    ok = ok and _accept(b, base - theta * (dS1 + dS2))
                if ok:
                    st = vor_commit_birth(M, pid, x1, y1, nc, cav, nb, bnd, S2)
                    if st != OK:
                        return st
                    S_acc[0] += dS1 + dS2
                    counts[C_MOVE] += 1
                else:
                    st = undo_death(M, pid, x0, y0, S1, saved, d)
                    if st != OK:
                        return st
    return OK


@njit
def run_block_null(P, n_arr, gcode, GPAR, sigma, pb, pd, R, counts, nmin):
    """Same chain without any geometry (V1 = V2 = 0, no hardcore)."""
    n = n_arr[0]
    log_bd = np.log(pd / pb)
    for step in range(R.shape[0]):
        a = R[step, 0]
        b = R[step, 1]
        if a < pb:
            x = wrap_q(R[step, 2])
            y = wrap_q(R[step, 3])
            lr = np.log(g_value(gcode, GPAR, x, y)) - np.log(n + 1.0) + log_bd
            if _accept(b, lr):
                if n >= P.shape[0]:
                    return 4
                P[n, 0] = x
                P[n, 1] = y
                n += 1
                counts[C_BIRTH] += 1
        elif a >= 1.0 - pd:
            if n - 1 < nmin:
                continue
            i = min(np.int64(R[step, 2] * n), n - 1)
            lr = np.log(n) - np.log(g_value(gcode, GPAR, P[i, 0], P[i, 1])) - log_bd
            if _accept(b, lr):
                P[i, 0] = P[n - 1, 0]
                P[i, 1] = P[n - 1, 1]
                n -= 1
                counts[C_DEATH] += 1
        else:
            if n < 1:
                continue
            i = min(np.int64(R[step, 2] * n), n - 1)
            x1 = wrap_q(P[i, 0] + sigma * R[step, 4])
            y1 = wrap_q(P[i, 1] + sigma * R[step, 5])
            lr = np.log(g_value(gcode, GPAR, x1, y1)) - np.log(g_value(gcode, GPAR, P[i, 0], P[i, 1]))
            if _accept(b, lr):
                P[i, 0] = x1
                P[i, 1] = y1
                counts[C_MOVE] += 1
    n_arr[0] = n
    return OK
