"""Periodic point configurations and their Delaunay/Voronoi tessellations."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _mesh as K
from .mesh import DegeneracyError, PeriodicMesh, check_mesh, status_message
from .predicates import quantize

MIN_POINTS = 4

__all__ = [
    "DegeneracyError", "PointConfiguration", "Tessellation", "Triangle",
    "VoronoiCell", "affected_region", "build_tessellation", "cell_stats",
    "read_points", "triangle_stats", "wrap_to_torus", "write_edges",
    "write_points",
]


def wrap_to_torus(p):
    """Reduce coordinates into [0, 1) (on the 2**-48 grid).

    Accepts a single point or an (n, 2) array.
    """
    a = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite coordinate: %r" % (p,))
    a = quantize(a - np.floor(a))
    a = np.where(a >= 1.0, a - 1.0, a)
    return a


class PointConfiguration:
    """Points on the unit torus with stable integer ids.

    ``generation`` increases on every edit, so cached tessellations can
    tell when they are stale.
    """

    def __init__(self, points=(), ids=None):
        pts = wrap_to_torus(np.asarray(points, dtype=float).reshape(-1, 2))
        if ids is None:
            ids = np.arange(len(pts))
        self._pts = {int(i): (float(x), float(y)) for i, (x, y) in zip(ids, pts)}
        if len(self._pts) != len(pts):
            raise ValueError("repeated ids")
        self._check_unique()
        self._next = max(self._pts, default=-1) + 1
        self.generation = 0

    def _check_unique(self):
        seen = {}
        for i, p in self._pts.items():
            if p in seen:
                raise DegeneracyError("points %d and %d coincide" % (seen[p], i))
            seen[p] = i

    def __len__(self):
        return len(self._pts)

    @property
    def ids(self):
        return np.array(sorted(self._pts), dtype=np.int64)

    @property
    def points(self):
        return np.array([self._pts[i] for i in sorted(self._pts)]).reshape(-1, 2)

    def __getitem__(self, pid):
        return self._pts[pid]

    def add(self, p):
        x, y = wrap_to_torus(p)
        if (float(x), float(y)) in set(self._pts.values()):
            raise DegeneracyError("duplicate point (%r, %r)" % (x, y))
        pid = self._next
        self._next += 1
        self._pts[pid] = (float(x), float(y))
        self.generation += 1
        return pid

    def remove(self, pid):
        del self._pts[pid]
        self.generation += 1

    def move(self, pid, p):
        x, y = wrap_to_torus(p)
        old = self._pts.pop(pid)
        if (float(x), float(y)) in set(self._pts.values()):
            self._pts[pid] = old
            raise DegeneracyError("duplicate point (%r, %r)" % (x, y))
        self._pts[pid] = (float(x), float(y))
        self.generation += 1

    def copy(self):
        c = PointConfiguration(self.points, self.ids)
        c._next = self._next
        return c


# ---------------------------------------------------------------------------
# statistics (vectorised, independent of the kernels)

def triangle_stats(coords):
    """Statistics of unwrapped triangles given as an (m, 3, 2) array.

    Returns a dict of arrays: ``min_edge``, ``circumradius``, ``min_angle``,
    ``perimeter``.
    """
    q = np.asarray(coords, dtype=float).reshape(-1, 3, 2)
    a, b, c = q[:, 0], q[:, 1], q[:, 2]
    la = np.linalg.norm(b - c, axis=1)
    lb = np.linalg.norm(c - a, axis=1)
    lc = np.linalg.norm(a - b, axis=1)
    cross = np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                   - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def angle(p, u, v):
        du, dv = u - p, v - p
        return np.arctan2(cross, (du * dv).sum(axis=1))

    angles = np.column_stack([angle(a, b, c), angle(b, c, a), angle(c, a, b)])
    with np.errstate(divide="ignore"):
        R = la * lb * lc / (2.0 * cross)
    return {
        "min_edge": np.minimum(np.minimum(la, lb), lc),
        "circumradius": R,
        "min_angle": angles.min(axis=1),
        "perimeter": la + lb + lc,
    }


def _dedup_polygon(poly, tol=K.DEDUP_TOL):
    keep = [poly[0]]
    for p in poly[1:]:
        if np.any(np.abs(p - keep[-1]) > tol):
            keep.append(p)
    while len(keep) > 1 and np.all(np.abs(keep[-1] - keep[0]) <= tol):
        keep.pop()
    return np.array(keep)


def cell_stats(polygon, center):
    """(h_min, h_max, volume) of a convex polygon around ``center``.

    h_min and h_max are the smallest and largest distances from the center
    to the polygon's edges (as segments).
    """
    q = _dedup_polygon(np.asarray(polygon, dtype=float)) - np.asarray(center, float)
    r = np.roll(q, -1, axis=0)
    d = r - q
    d2 = (d * d).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(-(q * d).sum(axis=1) / d2, 0.0, 1.0)
    t = np.where(d2 > 0, t, 0.0)
    h = np.linalg.norm(q + t[:, None] * d, axis=1)
    vol = 0.5 * np.sum(q[:, 0] * r[:, 1] - r[:, 0] * q[:, 1])
    return float(h.min()), float(h.max()), float(vol)


# ---------------------------------------------------------------------------
# tessellation

@dataclass(frozen=True)
class Triangle:
    vertices: tuple
    offsets: tuple
    coords: np.ndarray = field(repr=False)
    barycenter: tuple


@dataclass(frozen=True)
class VoronoiCell:
    center: int
    polygon: np.ndarray = field(repr=False)
    barycenter: tuple


class Tessellation:
    """Snapshot of the periodic Delaunay triangulation and Voronoi diagram.

    Indices in the arrays below refer to positions in ``points`` (use
    ``ids`` to map back to configuration ids).

    ``tri_vertices``/``tri_offsets`` give each triangle once, translated so
    its barycenter is in [0, 1)^2.  ``edges`` holds each Delaunay edge
    (equivalently, each pair of neighbouring Voronoi cells) once as
    ``(i, j, dx, dy)`` with point j taken at ``points[j] + (dx, dy)``.
    """

    def __init__(self, mesh, ids=None):
        self._mesh = mesh
        live = mesh.ids() if ids is None else np.asarray(ids, dtype=np.int64)
        order = np.sort(live)
        self._mids = order
        self.ids = order
        P = mesh.M[0]
        self.points = P[order].copy()
        dense = np.full(P.shape[0], -1, dtype=np.int64)
        dense[order] = np.arange(len(order))
        tv, to, slots = K.extract_triangles(mesh.M)
        self.tri_vertices = dense[tv]
        self.tri_offsets = to
        self._slots = slots
        slot_index = np.full(mesh.M[2].shape[0], -1, dtype=np.int64)
        slot_index[slots] = np.arange(len(slots))
        self.tri_coords = self.points[self.tri_vertices] + to
        self.tri_barycenters = self.tri_coords.mean(axis=1)
        st = triangle_stats(self.tri_coords)
        self.min_edge = st["min_edge"]
        self.circumradius = st["circumradius"]
        self.min_angle = st["min_angle"]
        self.perimeter = st["perimeter"]
        tn = slot_index[mesh.M[4][slots]]
        m = len(slots)
        a = np.repeat(np.arange(m), 3)
        b = tn.ravel()
        sel = a < b
        self.delaunay_neighbours = np.column_stack([a[sel], b[sel]])
        self.edges = self._edges()
        self._cells = None

    def _edges(self):
        v, o = self.tri_vertices, self.tri_offsets
        rows = []
        for k in range(3):
            i, j = v[:, k], v[:, (k + 1) % 3]
            d = o[:, (k + 1) % 3] - o[:, k]
            rows.append(np.column_stack([i, j, d]))
        e = np.concatenate(rows)
        flip = (e[:, 0] > e[:, 1]) | ((e[:, 0] == e[:, 1]) & (
            (e[:, 2] < 0) | ((e[:, 2] == 0) & (e[:, 3] < 0))))
        e[flip] = np.column_stack([e[flip, 1], e[flip, 0], -e[flip, 2], -e[flip, 3]])
        return np.unique(e, axis=0)

    @classmethod
    def from_points(cls, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(pts) < MIN_POINTS:
            raise DegeneracyError(
                "at least %d points are needed, got %d" % (MIN_POINTS, len(pts)))
        return cls(PeriodicMesh.from_points(wrap_to_torus(pts)))

    # -- sizes -------------------------------------------------------------
    @property
    def n_points(self):
        return len(self.points)

    @property
    def n_triangles(self):
        return len(self.tri_vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def voronoi_neighbours(self):
        return self.edges[:, :2]

    # -- cells ---------------------------------------------------------------
    def _build_cells(self):
        polys = []
        for pid in self._mids:
            polys.append(self._mesh.polygon(pid))
        self._cells = polys
        stats = np.array([cell_stats(p, c) for p, c in zip(polys, self.points)])
        self.h_min = stats[:, 0]
        self.h_max = stats[:, 1]
        self.volume = stats[:, 2]

    @property
    def polygons(self):
        if self._cells is None:
            self._build_cells()
        return self._cells

    def cell_stats(self):
        """(n, 3) array of h_min, h_max, volume."""
        if self._cells is None:
            self._build_cells()
        return np.column_stack([self.h_min, self.h_max, self.volume])

    def triangles(self):
        out = []
        for v, o, q, g in zip(self.tri_vertices, self.tri_offsets,
                              self.tri_coords, self.tri_barycenters):
            out.append(Triangle(tuple(int(i) for i in self.ids[v]),
                                tuple(map(tuple, o.tolist())), q, tuple(g)))
        return out

    def cells(self):
        out = []
        for pid, poly in zip(self.ids, self.polygons):
            g = _polygon_centroid(poly)
            out.append(VoronoiCell(int(pid), poly, tuple(g - np.floor(g))))
        return out

    def check(self):
        """Structural self-check; returns a list of problems."""
        return check_mesh(self._mesh.M)


def _polygon_centroid(poly):
    q = _dedup_polygon(np.asarray(poly))
    r = np.roll(q, -1, axis=0)
    cr = q[:, 0] * r[:, 1] - r[:, 0] * q[:, 1]
    a = cr.sum() / 2.0
    return np.array([((q[:, 0] + r[:, 0]) * cr).sum(),
                     ((q[:, 1] + r[:, 1]) * cr).sum()]) / (6.0 * a)


def build_tessellation(config):
    """Tessellation of a :class:`PointConfiguration` or an (n, 2) array."""
    if isinstance(config, PointConfiguration):
        if len(config) == 0:
            raise ValueError("empty configuration")
        if len(config) < MIN_POINTS:
            raise DegeneracyError(
                "at least %d points are needed, got %d" % (MIN_POINTS, len(config)))
        mesh = PeriodicMesh.from_points(config.points)
        tess = Tessellation(mesh)
        tess.ids = config.ids
        return tess
    pts = np.asarray(config, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty configuration")
    return Tessellation.from_points(pts)


# ---------------------------------------------------------------------------
# locality

@dataclass
class AffectedRegion:
    """Triangles (by index) and cells (by point index) that may change when
    a point is inserted at, or removed from, location ``x``."""

    triangles: np.ndarray
    cells: np.ndarray
    full: bool


def affected_region(tess, x, radius):
    """Conservative set of triangles and cells touched by an edit at ``x``.

    The combinatorial part is exact: the triangles whose circumdisc holds x
    (or the star of x when x is a vertex), plus all cells of their vertices.
    Everything with a vertex within ``radius`` of x is added on top.  A
    radius of 0.5 or more means the ball wraps around the torus, so the
    whole tessellation is returned.
    """
    x = wrap_to_torus(x)
    n, m = tess.n_points, tess.n_triangles
    if radius >= 0.5:
        return AffectedRegion(np.arange(m), np.arange(n), True)
    d = tess.points - x
    d -= np.round(d)
    near_pts = np.hypot(d[:, 0], d[:, 1]) <= radius
    hit = np.where(np.all(tess.points == x, axis=1))[0]
    if len(hit):
        tri = np.where(np.any(tess.tri_vertices == hit[0], axis=1))[0]
    else:
        q = tess.tri_coords
        cen = np.array([K.circumcenter(*t.ravel()) for t in q])
        dd = x - cen
        dd -= np.round(dd)
        tri = np.where(np.hypot(dd[:, 0], dd[:, 1]) < tess.circumradius * (1 + 1e-9))[0]
    tri_mask = np.zeros(m, bool)
    tri_mask[tri] = True
    tri_mask |= np.any(near_pts[tess.tri_vertices], axis=1)
    cells = np.zeros(n, bool)
    cells[np.unique(tess.tri_vertices[tri_mask])] = True
    cells |= near_pts
    # first ring: cells sharing an edge with a changed cell (pairs change too)
    e = tess.edges
    ring = cells[e[:, 0]] | cells[e[:, 1]]
    cells_ring = cells.copy()
    cells_ring[e[ring, 0]] = True
    cells_ring[e[ring, 1]] = True
    return AffectedRegion(np.where(tri_mask)[0], np.where(cells_ring)[0], False)


# ---------------------------------------------------------------------------
# text I/O

def read_points(path):
    """Read an "x,y" CSV (header optional) into an (n, 2) array."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError("%s:%d: expected 'x,y'" % (path, lineno))
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                if not rows and parts[0].strip().lower() == "x":
                    continue
                raise ValueError("%s:%d: bad number" % (path, lineno)) from None
    return np.array(rows, dtype=float).reshape(-1, 2)


def write_points(path, points):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in pts:
            fh.write("%.17g,%.17g\n" % (x, y))


def write_edges(path, tess):
    """Delaunay edges as unwrapped segments, one "x1,y1,x2,y2" per line."""
    with open(path, "w") as fh:
        fh.write("x1,y1,x2,y2\n")
        for i, j, dx, dy in tess.edges:
            a = tess.points[i]
            b = tess.points[j] + (dx, dy)
            fh.write("%.17g,%.17g,%.17g,%.17g\n" % (a[0], a[1], b[0], b[1]))


def hexagon_ratio():
    """h_max^2 / Vol for a regular hexagonal cell."""
    return 1.0 / (2.0 * math.sqrt(3.0))
