import math

import numpy as np
import pytest

from gibbstess import estimation as E
from gibbstess.energy import HardcoreParams, get_model
from gibbstess.geometry import triangle_stats
from gibbstess.mesh import triangular_lattice
from gibbstess.sampler import _lattice_rows, initial_lattice, run


def lattice_triangle(k, m):
    dx, dy = 1.0 / k, 1.0 / m
    return triangle_stats(np.array([[[0, 0], [dx, 0], [dx / 2, dy]]]))


def test_window():
    w = E.Window.eroded(0.1)
    assert (w.x0, w.y0, w.x1, w.y1) == pytest.approx((0.1, 0.1, 0.9, 0.9))
    assert w.area == pytest.approx(0.64)
    assert list(w.contains(np.array([[0.5, 0.5], [0.05, 0.5]]))) == [True, False]
    u = w.uniform(1000, np.random.default_rng(0))
    assert np.all(w.contains(u))
    with pytest.raises(ValueError):
        E.Window.eroded(0.5)


def test_default_erosion():
    assert E.default_erosion(get_model("model2"), HardcoreParams(alpha=0.05)) == pytest.approx(0.1)
    assert E.default_erosion(get_model("model3"), HardcoreParams(alpha=0.05)) == pytest.approx(0.2)
    assert E.default_erosion(get_model("model3"), HardcoreParams(alpha=0.3)) == 0.45
    assert E.default_erosion(get_model("model3"), HardcoreParams(B=1.0)) == 0.0


def test_hardcore_estimates_on_lattice():
    k = 10
    m = _lattice_rows(k)
    pts, _, _ = triangular_lattice(k, m)
    s = lattice_triangle(k, m)
    b = E.estimate_hardcore(pts, get_model("model2"))
    assert b.eps == pytest.approx(s["min_edge"][0], rel=1e-9)
    assert b.alpha == pytest.approx(s["circumradius"][0], rel=1e-9)
    a = E.estimate_hardcore(pts, get_model("model1"))
    assert a.angle == pytest.approx(s["min_angle"][0], rel=1e-9)
    # Voronoi cells: edge distances are half the Delaunay edge lengths
    c = E.estimate_hardcore(pts, get_model("model3"))
    slanted = math.hypot(0.5 / k, 1.0 / m)
    assert c.alpha == pytest.approx(max(1.0 / k, slanted) / 2, rel=1e-9)
    assert c.eps == pytest.approx(min(1.0 / k, slanted) / 2, rel=1e-9)
    assert c.B == pytest.approx(c.alpha ** 2 * k * m, rel=1e-9)


def test_hardcore_estimates_respect_fields_and_window(rng):
    pts = rng.random((200, 2))
    b = E.estimate_hardcore(pts, get_model("model3"), fields=("alpha",))
    assert b.eps is None and b.B is None and b.alpha > 0
    sub = E.estimate_hardcore(pts, get_model("model3"), E.Window.eroded(0.2), ("alpha",))
    assert sub.alpha <= b.alpha
    with pytest.raises(ValueError, match="no interior cells"):
        E.estimate_hardcore(pts, get_model("model3"), E.Window(0.5, 0.5, 0.5001, 0.5001))


def test_support_params_keep_data_allowed(rng):
    from gibbstess.energy import periodic_energy

    pts = run(get_model("model3"), HardcoreParams(alpha=0.1, B=1.0), 0.5, 100.0,
              n_iters=5000, seed=1).points
    m = get_model("model3")
    b = E.estimate_hardcore(pts, m)
    assert not periodic_energy(pts, m, b, 0.0).finite
    assert periodic_energy(pts, m, E.support_params(b), 0.0).finite


def test_poisson_closed_form(rng):
    pts = rng.random((137, 2))
    f = E.fit(pts, get_model("null"), seed=1)
    assert f.z_hat == pytest.approx(137.0)
    assert math.isnan(f.theta_hat)
    assert f.removable_count == 137
    g = E.fit(pts, get_model("null"), erosion=0.1, seed=1)
    n_in = np.sum(E.Window.eroded(0.1).contains(pts))
    assert g.z_hat == pytest.approx(n_in / 0.64)


def model3_data(seed=2, mc=4000):
    m = get_model("model3")
    pts = run(m, HardcoreParams(alpha=0.08, B=1.0), 0.5, 100.0, n_iters=8000, seed=seed).points
    b = E.support_params(E.estimate_hardcore(pts, m, fields=("alpha", "B")))
    return E.PLLData(pts, m, b, E.Window.eroded(0.1), mc, seed=seed)


def test_pll_rejects_nonpositive_z():
    d = model3_data()
    with pytest.raises(ValueError, match="z must be positive"):
        d.pll(0.0, 0.1)
    with pytest.raises(ValueError):
        d.pll(-1.0, 0.1)


def test_pll_is_convex():
    d = model3_data()
    thetas = np.linspace(-3, 3, 61)
    for z in (50.0, 100.0, 200.0):
        v = np.array([d.pll(z, t) for t in thetas])
        assert np.all(np.diff(v, 2) >= -1e-9 * np.abs(v).max())
    zs = np.linspace(20, 400, 40)
    v = np.array([d.pll(z, 0.3) for z in zs])
    assert np.all(np.diff(v, 2) >= -1e-9 * np.abs(v).max())


def test_scores_are_decreasing():
    d = model3_data()
    t = np.linspace(-5, 5, 41)
    assert np.all(np.diff([d.score(x) for x in t]) <= 1e-9)
    assert np.all(np.diff([d.score_unscaled(x, 100.0) for x in t]) <= 1e-9)


@pytest.mark.parametrize("z_known", [None, 100.0])
def test_score_vanishes_at_root(z_known):
    d = model3_data()
    theta, z, score, bracket = E.estimate_smooth(d, z_known)
    scale = float(np.sum(np.abs(d.removable_S))) + 1.0
    assert abs(score) <= 1e-8 * scale
    assert bracket[0] <= theta <= bracket[1]
    if z_known is None:
        assert z == pytest.approx(d.z_hat(theta))


@pytest.mark.parametrize("seed", range(20))
def test_root_matches_grid_oracle(seed):
    d = model3_data(seed=100 + seed, mc=2000)
    theta, z, _, _ = E.estimate_smooth(d)
    thetas = np.round(np.arange(theta - 0.5, theta + 0.5, 0.01), 10)
    z_grid = z * 1.01 ** np.arange(-30, 31)
    tg, zg, _ = E.grid_search(d, thetas, z_grid)
    assert abs(tg - theta) <= 0.01 + 1e-9
    assert abs(math.log(zg / z)) <= math.log(1.01) + 1e-9


def test_rigid_lattice_is_inestimable():
    m = get_model("model3")
    beta = HardcoreParams(alpha=0.06, B=0.3)
    pts = initial_lattice(m, beta, 200)
    with pytest.raises(E.InestimableError):
        E.fit(pts, m, beta=beta, seed=0)


class _Stub(E.PLLData):
    def __init__(self, mc_S, removable_S):
        self.model = get_model("model3")
        self.mc_S = np.asarray(mc_S, float)
        self.mc_allowed = np.ones(len(mc_S), bool)
        self.removable_S = np.asarray(removable_S, float)
        self.removable_index = np.arange(len(removable_S))
        self.area = 1.0


def test_no_root_is_reported():
    # every removable point costs more than any location the MC sees
    d = _Stub(np.linspace(0.1, 1.0, 50), [2.0, 3.0, 5.0])
    with pytest.raises(E.NoRootError):
        E.estimate_smooth(d)


def test_find_root_expands_bracket():
    r, br = E.find_root(lambda t: 35.0 - t)
    assert r == pytest.approx(35.0) and br[0] <= 35.0 <= br[1]
    with pytest.raises(E.NoRootError):
        E.find_root(lambda t: 1.0)


def test_fit_is_deterministic_and_round_trips():
    m = get_model("model3")
    pts = run(m, HardcoreParams(alpha=0.08, B=1.0), 0.5, 100.0, n_iters=8000, seed=3).points
    a = E.fit(pts, m, seed=7, mc_samples=3000, fields=("alpha", "B"))
    b = E.fit(pts, m, seed=7, mc_samples=3000, fields=("alpha", "B"))
    assert a.theta_hat == b.theta_hat and a.z_hat == b.z_hat
    back = E.FitResult.from_text(a.to_text())
    assert back.theta_hat == a.theta_hat and back.z_hat == a.z_hat
    assert back.beta_hat == a.beta_hat
    assert back.window == a.window and back.removable_count == a.removable_count
    assert "eps=none" in a.to_text()


def test_fit_result_rejects_garbage():
    with pytest.raises(ValueError, match="line 2"):
        E.FitResult.from_text("model=model3\nthis is not a pair\n")
