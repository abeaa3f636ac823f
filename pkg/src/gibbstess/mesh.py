"""Python handle around the periodic Delaunay kernels."""

import numpy as np

from . import _mesh as K
from .predicates import quantize


class DegeneracyError(RuntimeError):
    """The configuration has no valid periodic Delaunay triangulation here."""


_STATUS_TEXT = {
    K.ERR_DUP: "duplicate point",
    K.ERR_WRAP: "configuration too sparse for a simple periodic triangulation",
    K.ERR_WALK: "point location did not terminate",
    K.ERR_CAP: "capacity exceeded",
    K.ERR_HOLE: "inconsistent triangulation",
}


def status_message(st):
    return _STATUS_TEXT.get(int(st), "status %d" % st)


def lattice_shape(k):
    """Rows for a near-equilateral lattice with k columns (always even)."""
    m = int(round(2.0 * k / np.sqrt(3.0)))
    if m % 2:
        m += 1
    return max(m, 2)


def triangular_lattice(k, m=None, shift=(0.0, 0.0)):
    """Points and canonical triangles of a k x m triangular lattice.

    Odd rows are shifted by half a column.  Returns ``(pts, tv, to)`` with
    triangles in the same canonical form as the mesh arrays.
    """
    if m is None:
        m = lattice_shape(k)
    if m % 2:
        raise ValueError("row count must be even")
    jj, ii = np.meshgrid(np.arange(m), np.arange(k), indexing="ij")
    x = (ii + 0.5 * (jj % 2) + shift[0]) / k
    y = (jj + shift[1]) / m
    pts = np.column_stack([x.ravel(), y.ravel()])
    base = np.floor(pts).astype(np.int64)
    pts = quantize(pts - base)
    pts[pts >= 1.0] -= 1.0

    def vid(i, j):
        return (j % m) * k + (i % k)

    def off(i, j):
        # lattice index (i, j) may sit outside the stored cell
        p = vid(i, j)
        ux = (i + 0.5 * (j % 2) + shift[0]) / k
        uy = (j + shift[1]) / m
        return p, np.floor(ux + 1e-9 - pts[p, 0] + 0.5), np.floor(uy + 1e-9 - pts[p, 1] + 0.5)

    tris = []
    for j in range(m):
        for i in range(k):
            if j % 2 == 0:
                tris.append((off(i, j), off(i + 1, j), off(i, j + 1)))
                tris.append((off(i + 1, j), off(i + 1, j + 1), off(i, j + 1)))
            else:
                tris.append((off(i, j), off(i + 1, j), off(i + 1, j + 1)))
                tris.append((off(i, j), off(i + 1, j + 1), off(i, j + 1)))
    tv = np.array([[c[0] for c in t] for t in tris], dtype=np.int64)
    to = np.array([[[c[1], c[2]] for c in t] for t in tris], dtype=np.int64)
    # canonical translate: barycenter inside [0, 1)^2
    cen = (pts[tv] + to).mean(axis=1)
    to -= np.floor(cen).astype(np.int64)[:, None, :]
    return pts, tv, to


_SEED_K = 6
_SHIFTS = np.array([(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)])


def replicated_delaunay(pts):
    """Periodic triangles from Qhull on the 3x3 replicated point set.

    Exactly cocircular ties are broken by Qhull rather than symbolically,
    which is why this is only a fallback.
    """
    from scipy.spatial import Delaunay

    n = len(pts)
    rep = np.concatenate([pts + s for s in _SHIFTS])
    simp = Delaunay(rep).simplices
    ids = simp % n
    offs = _SHIFTS[simp // n]
    q = pts[ids] + offs
    cen = q.mean(axis=1)
    keep = np.all((cen >= 0) & (cen < 1), axis=1)
    ids, offs, q = ids[keep], offs[keep], q[keep]
    cr = ((q[:, 1, 0] - q[:, 0, 0]) * (q[:, 2, 1] - q[:, 0, 1])
          - (q[:, 1, 1] - q[:, 0, 1]) * (q[:, 2, 0] - q[:, 0, 0]))
    flip = cr < 0
    ids[flip] = ids[flip][:, [0, 2, 1]]
    offs[flip] = offs[flip][:, [0, 2, 1]]
    if len(ids) != 2 * n:
        raise DegeneracyError(status_message(K.ERR_WRAP))
    return ids.astype(np.int64), offs.astype(np.int64)


class PeriodicMesh:
    """Mutable periodic Delaunay triangulation with stable point ids."""

    def __init__(self, arrays):
        self.M = arrays

    # -- construction -----------------------------------------------------
    @classmethod
    def empty_capacity(cls, n_points):
        n_points = max(int(n_points), 1)
        return K.allocate(n_points + 64, 2 * n_points + 256)

    @classmethod
    def from_points(cls, points, capacity=None):
        pts = quantize(np.asarray(points, dtype=float).reshape(-1, 2))
        n = pts.shape[0]
        if n < 4:
            raise DegeneracyError("at least 4 points are needed, got %d" % n)
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite coordinates")
        if np.any(pts < 0) or np.any(pts >= 1):
            raise ValueError("points must lie in [0, 1)^2")
        cap = max(capacity or 0, n)
        seed, stv, sto = triangular_lattice(_SEED_K, _SEED_K, shift=(0.37, 0.41))
        ns = seed.shape[0]
        M = K.allocate(cap + ns + 64, 2 * (cap + ns) + 256)
        seed_ids = np.arange(n, n + ns, dtype=np.int64)
        st = K.init_from_triangles(M, seed, seed_ids, stv + n, sto)
        if st != K.OK:
            raise DegeneracyError(status_message(st))
        ids = np.arange(n, dtype=np.int64)
        st, where = K.build_from_seed(M, pts, ids, seed_ids)
        if st == K.ERR_DUP:
            raise DegeneracyError("duplicate point at index %d" % where)
        if st != K.OK:
            # Very sparse sets: a seed point's star can wrap onto itself,
            # which local deletion cannot handle.  Build globally instead.
            M = K.allocate(cap + 64, 2 * cap + 256)
            tv, to = replicated_delaunay(pts)
            st = K.init_from_triangles(M, pts, ids, tv, to)
            if st != K.OK:
                raise DegeneracyError(status_message(st))
        META = M[12]
        # seed ids were released; reset id allocation to the real points
        META[K.M_PTOP] = n
        META[K.M_PFREE] = 0
        mesh = cls(M)
        if K.max_circumradius(M) >= 0.5:
            raise DegeneracyError(status_message(K.ERR_WRAP))
        st = K.update_all_cells(M)
        if st != K.OK:
            raise DegeneracyError(status_message(st))
        return mesh

    def copy(self):
        return PeriodicMesh(tuple(a.copy() for a in self.M))

    def reserve(self, n_points):
        """Make sure ``n_points`` more ids and their triangles fit."""
        P = self.M[0]
        META = self.M[12]
        need_p = META[K.M_PTOP] + n_points + 8
        need_t = META[K.M_TTOP] + 2 * n_points + 16
        if need_p > P.shape[0] or need_t > self.M[2].shape[0]:
            self.M = K.grow(self.M, int(need_p * 1.5), int(need_t * 1.5))

    # -- queries -----------------------------------------------------------
    @property
    def n(self):
        return int(self.M[12][K.M_NLIVE])

    def ids(self):
        """Live point ids in increasing order."""
        return np.sort(self.M[10][:self.n])

    def points(self, ids=None):
        if ids is None:
            ids = self.ids()
        return self.M[0][ids].copy()

    def triangles(self):
        tv, to, slot = K.extract_triangles(self.M)
        return tv, to

    def cells(self):
        """Cached (h_min, h_max, area) for the live ids."""
        return self.M[13][self.ids()].copy()

    def polygon(self, pid):
        st, px, py, d = K.star_polygon(self.M, pid)
        if st != K.OK:
            raise DegeneracyError(status_message(st))
        return np.column_stack([px[:d], py[:d]]) + self.M[0][pid]

    # -- edits ---------------------------------------------------------------
    def insert(self, x, y):
        self.reserve(1)
        x = float(quantize(x))
        y = float(quantize(y))
        pid = K.new_point_id(self.M)
        st = K.insert_point(self.M, pid, x, y)
        if st != K.OK:
            K.release_point_id(self.M, pid)
            raise DegeneracyError(status_message(st))
        return pid

    def delete(self, pid):
        if self.n <= 4:
            raise DegeneracyError("cannot go below 4 points")
        st = K.delete_point(self.M, pid)
        if st != K.OK:
            raise DegeneracyError(status_message(st))

    def refresh_cells(self):
        st = K.update_all_cells(self.M)
        if st != K.OK:
            raise DegeneracyError(status_message(st))


def check_mesh(M):
    """List of structural problems (empty when the mesh is consistent)."""
    P, VT, TV, TO, TN, TS = M[:6]
    META = M[12]
    errs = []
    for t in range(META[K.M_TTOP]):
        if TV[t, 0] < 0:
            continue
        q = P[TV[t]] + TO[t]
        cen = q.mean(axis=0)
        if np.any(cen < 0) or np.any(cen >= 1):
            errs.append("tri %d not canonical" % t)
        cr = (q[1, 0] - q[0, 0]) * (q[2, 1] - q[0, 1]) - (q[1, 1] - q[0, 1]) * (q[2, 0] - q[0, 0])
        if cr <= 0:
            errs.append("tri %d not ccw" % t)
        for i in range(3):
            u = TN[t, i]
            s = TS[t, i]
            if u < 0 or TV[u, 0] < 0:
                errs.append("tri %d edge %d: dead neighbour" % (t, i))
                continue
            a, b = (i + 1) % 3, (i + 2) % 3
            j = K._find_edge(M, u, s[0], s[1], TV[t, b], TO[t, b, 0], TO[t, b, 1],
                             TV[t, a], TO[t, a, 0], TO[t, a, 1])
            if j < 0:
                errs.append("tri %d edge %d: neighbour %d lacks edge" % (t, i, u))
                continue
            if TN[u, j] != t or np.any(TS[u, j] != -s):
                errs.append("tri %d edge %d: back pointer" % (t, i))
    for p in M[10][:META[K.M_NLIVE]]:
        t = VT[p]
        if t < 0 or p not in TV[t]:
            errs.append("vertex %d: bad VT" % p)
    return errs
