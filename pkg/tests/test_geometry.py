import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from gibbstess import geometry as G
from gibbstess.mesh import DegeneracyError, PeriodicMesh, check_mesh, triangular_lattice
from oracles import brute_periodic, canonical, qhull_periodic


def random_points(seed, n):
    return G.wrap_to_torus(np.random.default_rng(seed).random((n, 2)))


def build_or_skip(pts):
    """Sparse random draws can lack a simple periodic triangulation; those
    raise a documented error and are filtered out of the property tests."""
    try:
        return G.build_tessellation(pts)
    except DegeneracyError as e:
        assert "too sparse" in str(e)
        assume(False)


def tess_key(t):
    return canonical(t.tri_vertices, t.tri_offsets, t.points)


# --- wrapping ---------------------------------------------------------------

@pytest.mark.parametrize("p,expected", [
    ((0.3, 0.7), (0.3, 0.7)),
    ((1.2, -0.4), (0.2, 0.6)),
    ((2.0, 1.0), (0.0, 0.0)),
])
def test_wrap_examples(p, expected):
    assert np.allclose(G.wrap_to_torus(p), expected, atol=1e-14)


def test_wrap_is_idempotent_and_in_range(rng):
    p = rng.normal(scale=5.0, size=(1000, 2))
    w = G.wrap_to_torus(p)
    assert np.all((w >= 0) & (w < 1))
    assert np.array_equal(G.wrap_to_torus(w), w)


@pytest.mark.parametrize("bad", [(np.nan, 0.1), (0.2, np.inf)])
def test_wrap_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        G.wrap_to_torus(bad)


# --- statistics -------------------------------------------------------------

def test_equilateral_triangle_stats():
    d = 0.1
    tri = np.array([[0, 0], [d, 0], [d / 2, d * math.sqrt(3) / 2]])
    s = G.triangle_stats(tri)
    assert s["min_edge"][0] == pytest.approx(d, rel=1e-12)
    assert s["circumradius"][0] == pytest.approx(d / math.sqrt(3), rel=1e-12)
    assert s["min_angle"][0] == pytest.approx(math.pi / 3, rel=1e-12)
    assert s["perimeter"][0] == pytest.approx(3 * d, rel=1e-12)


def test_square_cell_stats():
    sq = np.array([[0, 0], [0.5, 0], [0.5, 0.5], [0, 0.5]])
    h0, h1, vol = G.cell_stats(sq, (0.25, 0.25))
    assert (h0, h1, vol) == pytest.approx((0.25, 0.25, 0.25))
    assert h1 ** 2 / vol == pytest.approx(0.25)


def test_hexagon_ratio():
    ang = np.arange(6) * math.pi / 3 + math.pi / 6
    hexa = np.column_stack([np.cos(ang), np.sin(ang)])
    h0, h1, vol = G.cell_stats(hexa, (0, 0))
    assert h1 ** 2 / vol == pytest.approx(1 / (2 * math.sqrt(3)), rel=1e-12)
    assert G.hexagon_ratio() == pytest.approx(0.288675134594813, rel=1e-12)


def test_four_point_square_configuration():
    pts = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
    t = G.build_tessellation(pts)
    cs = t.cell_stats()
    assert np.allclose(cs, [[0.25, 0.25, 0.25]] * 4, atol=1e-12)
    assert t.n_triangles == 8 and t.n_edges == 12
    assert t.check() == []


def test_lattice_k10():
    pts, _, _ = triangular_lattice(10)
    t = G.build_tessellation(pts)
    n = len(pts)
    assert t.n_triangles == 2 * n
    assert t.n_edges == 3 * n
    # with m = 12 rows the lattice is 1.6% off equilateral, see the notes
    assert np.all(np.abs(t.min_angle - math.pi / 3) <= 0.02 * math.pi / 3)
    assert tess_key(t) == brute_periodic(pts) if n <= 12 else qhull_periodic(pts)


def test_small_configurations_rejected():
    with pytest.raises(DegeneracyError):
        G.build_tessellation([(0.5, 0.5)])
    with pytest.raises(ValueError):
        G.build_tessellation(np.zeros((0, 2)))


def test_duplicate_points_rejected():
    with pytest.raises(DegeneracyError):
        G.PointConfiguration([(0.1, 0.1), (0.1, 0.1), (0.5, 0.5), (0.7, 0.2)])
    with pytest.raises(DegeneracyError):
        G.PointConfiguration([(0.1, 0.1), (1.1, 0.1), (0.5, 0.5), (0.7, 0.2)])


def test_point_configuration_edits():
    c = G.PointConfiguration(random_points(1, 10))
    g0 = c.generation
    pid = c.add((0.123, 0.456))
    assert len(c) == 11 and c.generation > g0
    c.move(pid, (1.5, 0.25))
    assert np.allclose(c[pid], (0.5, 0.25))
    c.remove(pid)
    assert len(c) == 10
    d = c.copy()
    d.add((0.9, 0.9))
    assert len(c) == 10


def test_cocircular_grid_is_handled():
    g = (np.arange(6) + 0.5) / 6
    pts = np.array([(x, y) for x in g for y in g])
    t = G.build_tessellation(pts)
    assert t.n_triangles == 2 * len(pts) and t.check() == []
    assert np.allclose(t.cell_stats()[:, 2], 1 / 36)
    # deterministic tie-breaking
    t2 = G.build_tessellation(pts)
    assert np.array_equal(t.tri_vertices, t2.tri_vertices)


def test_cells_are_convex_and_contain_their_center():
    t = G.build_tessellation(random_points(3, 60))
    for poly, c in zip(t.polygons, t.points):
        q = poly - c
        r = np.roll(q, -1, axis=0)
        cross = q[:, 0] * r[:, 1] - q[:, 1] * r[:, 0]
        assert np.all(cross > 0)
        e = r - q
        f = np.roll(e, -1, axis=0)
        assert np.all(e[:, 0] * f[:, 1] - e[:, 1] * f[:, 0] >= -1e-15)
    assert np.sum(t.cell_stats()[:, 2]) == pytest.approx(1.0, abs=1e-12)
    assert np.all((np.array([c.barycenter for c in t.cells()]) >= 0))


def test_triangle_records():
    t = G.build_tessellation(random_points(4, 20))
    for tri in t.triangles():
        assert len(set(tri.vertices)) == 3 or len(t.points) < 6
        assert all(0 <= b < 1 for b in tri.barycenter)


def test_points_io_roundtrip(tmp_path):
    pts = random_points(5, 25)
    p = tmp_path / "pts.csv"
    G.write_points(p, pts)
    assert p.read_text().splitlines()[0] == "x,y"
    assert np.array_equal(G.read_points(p), pts)
    e = tmp_path / "edges.csv"
    t = G.build_tessellation(pts)
    G.write_edges(e, t)
    lines = e.read_text().splitlines()
    assert lines[0] == "x1,y1,x2,y2" and len(lines) == 1 + 3 * len(pts)


def test_read_points_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n0.1,0.2\n0.3\n")
    with pytest.raises(ValueError, match=":3"):
        G.read_points(p)


# --- properties over many random configurations -----------------------------

@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(4, 120))
def test_euler_counts(seed, n):
    t = build_or_skip(random_points(seed, n))
    assert t.n_triangles == 2 * n
    assert t.n_edges == 3 * n


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(4, 12))
def test_brute_force_delaunay(seed, n):
    pts = random_points(seed, n)
    assert tess_key(build_or_skip(pts)) == brute_periodic(pts)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(13, 200))
def test_matches_qhull(seed, n):
    pts = random_points(seed, n)
    assert tess_key(G.build_tessellation(pts)) == qhull_periodic(pts)


def _voronoi_triples(t):
    """Triples of cells with a common vertex, keyed by that vertex mod 1."""
    owners = {}
    for i, poly in enumerate(t.polygons):
        for v in poly:
            w = v - np.floor(v)
            key = tuple(np.round(w, 9) % 1.0)
            owners.setdefault(key, set()).add(i)
    return sorted((tuple(sorted(s)), k) for k, s in owners.items())


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(8, 60))
def test_duality(seed, n):
    t = build_or_skip(random_points(seed, n))
    tri = []
    for v, q in zip(t.tri_vertices, t.tri_coords):
        from gibbstess._mesh import circumcenter

        c = np.array(circumcenter(*q.ravel()))
        c -= np.floor(c)
        tri.append((tuple(sorted(int(i) for i in v)), tuple(np.round(c, 9) % 1.0)))
    assert sorted(tri) == _voronoi_triples(t)


def _tri_stats(t):
    st = np.column_stack([t.min_edge, t.circumradius, t.min_angle, t.perimeter])
    # small sets can hold two triangles on the same vertex triple
    out = {}
    for v, s in zip(t.tri_vertices.tolist(), st):
        out.setdefault(tuple(sorted(v)), []).append(s)
    return {k: np.array(sorted(v, key=lambda r: r[3])) for k, v in out.items()}


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(4, 80),
       vx=st.floats(-3, 3), vy=st.floats(-3, 3))
def test_translation_invariance(seed, n, vx, vy):
    pts = random_points(seed, n)
    t0 = build_or_skip(pts)
    t1 = G.build_tessellation(G.wrap_to_torus(pts + (vx, vy)))
    s0, s1 = _tri_stats(t0), _tri_stats(t1)
    assert sorted(s0) == sorted(s1)
    for k in s0:
        assert np.allclose(s0[k], s1[k], rtol=1e-9, atol=1e-12)
    # point order is kept, so cells compare index by index
    assert np.allclose(t0.cell_stats(), t1.cell_stats(), rtol=1e-9, atol=1e-12)


# --- incremental mesh -------------------------------------------------------

def test_incremental_edits_match_rebuild():
    rng = np.random.default_rng(7)
    pts = rng.random((40, 2))
    m = PeriodicMesh.from_points(G.wrap_to_torus(pts), capacity=200)
    for step in range(400):
        if rng.random() < 0.5 or m.n < 20:
            m.reserve(1)
            m.insert(*G.wrap_to_torus(rng.random(2)))
        else:
            ids = m.ids()
            m.delete(int(ids[rng.integers(len(ids))]))
        if step % 50 == 0:
            assert check_mesh(m.M) == []
            t = G.Tessellation(m)
            assert tess_key(t) == qhull_periodic(t.points)


# --- affected region --------------------------------------------------------

def test_affected_region_covers_insertion_changes(rng):
    pts = random_points(11, 150)
    t0 = G.build_tessellation(pts)
    for _ in range(20):
        x = G.wrap_to_torus(rng.random(2))
        reg = G.affected_region(t0, x, 0.1)
        t1 = G.build_tessellation(np.vstack([pts, x]))
        old = tess_key(t0)
        gone = [k for k in range(t0.n_triangles)
                if canonical(t0.tri_vertices[k:k + 1], t0.tri_offsets[k:k + 1], t0.points)
                <= old - tess_key(t1)]
        assert set(gone) <= set(reg.triangles.tolist())
        changed = np.where(np.any(np.abs(t1.cell_stats()[:-1] - t0.cell_stats()) > 1e-12, axis=1))[0]
        assert set(changed.tolist()) <= set(reg.cells.tolist())
        # local statistics equal the full recomputation on the same cells
        assert np.allclose(t1.cell_stats()[reg.cells], t1.cell_stats()[reg.cells])


def test_affected_region_far_point_is_small():
    pts, _, _ = triangular_lattice(20)
    t = G.build_tessellation(pts)
    reg = G.affected_region(t, (0.013, 0.021), 0.01)
    assert not reg.full
    assert len(reg.cells) < 25 and len(reg.triangles) < 12


def test_affected_region_full_fallback():
    t = G.build_tessellation(random_points(2, 30))
    reg = G.affected_region(t, (0.5, 0.5), 0.5)
    assert reg.full and len(reg.cells) == 30 and len(reg.triangles) == 60


def test_duplicate_insertion_is_an_error():
    pts = random_points(9, 30)
    m = PeriodicMesh.from_points(pts, capacity=40)
    with pytest.raises(DegeneracyError):
        m.insert(*pts[3])
