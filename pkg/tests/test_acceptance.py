"""Acceptance criteria 1-9.

Each test records (passed, detail) in conftest.ACCEPTANCE, and the terminal
summary prints one line per criterion.  All tolerances and study sizes are
fixed below, before any study is run.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import brute_periodic, canonical
from gibbstess import estimation as E
from gibbstess import studies as S
from gibbstess._mesh import circumcenter
from gibbstess.energy import HardcoreParams, get_model, local_energy, periodic_energy, removal_energy
from gibbstess.geometry import build_tessellation, wrap_to_torus
from gibbstess.mesh import DegeneracyError
from gibbstess.sampler import run

# 1: geometry properties
C1_CONFIGS = 100
C1_SECONDS = 60.0
# 2: energy oracles
C2_QUERIES = 100
C2_REL_TOL = 1e-9
C2_THETAS = 50
C2_PAIRS = 100
C2_SECONDS = 60.0
# 3: null sampler
C3_Z = 100.0
C3_STEPS = 10 ** 6
C3_SE = 3.0
C3_SECONDS = 300.0
# 4: Model 2, theta = -5
C4_REPS = 50
C4_ITERS = 200000
C4_MEAN = (-6.0, -4.0)
C4_SD = 0.8
C4_POP = 1500.0
C4_POP_TOL = 0.2
# 5: Model 2, theta = 5, hardcore estimate
C5_REPS = 30
C5_ITERS = 200000
C5_RANGE = (0.08 - 3 * 3e-2, 0.08)
# 6: Model 3 sign separation
C6_REPS = 30
C6_ITERS = 200000
C6_SIGN = 0.8
C6_REMOVABLE = {-0.5: 45 / 265, 0.5: 3.5 / 215}
C6_FACTOR = 2.0
# 7: PLL oracle
C7_DATASETS = 20
C7_MAX_POINTS = 30
C7_THETA_STEP = 0.01
C7_Z_FACTOR = 1.01
# 8: GNZ balance
C8_REPS = 100
C8_SE = 3.0
# 9: misspecification
C9_ITERS = 200000
C9_BOOT = 100
C9_POISSON_P = 0.05     # Poisson rejected when the global p-value is at most this
C9_MODEL3_P = 0.01      # Model 3 accepted when the global p-value exceeds this

M2 = get_model("model2")
M3 = get_model("model3")


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


def _random_points(rng, n):
    return wrap_to_torus(rng.random((n, 2)))


def _allowed_tess(rng, lo, hi):
    """Random configuration that has a simple periodic triangulation."""
    while True:
        pts = _random_points(rng, int(rng.integers(lo, hi + 1)))
        try:
            return pts, build_tessellation(pts)
        except DegeneracyError:
            continue


def test_criterion1_geometry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    fails = []
    for _ in range(C1_CONFIGS):
        pts, t = _allowed_tess(rng, 8, 150)
        n = len(pts)
        if t.n_triangles != 2 * n or t.n_edges != 3 * n:
            fails.append("euler n=%d" % n)
        # duality: every triangle's circumcenter is a vertex shared by its three cells
        owners = {}
        for i, poly in enumerate(t.polygons):
            for v in poly:
                owners.setdefault(tuple(np.round(v - np.floor(v), 9) % 1.0), set()).add(i)
        tri = set()
        for v, q in zip(t.tri_vertices, t.tri_coords):
            c = np.array(circumcenter(*q.ravel()))
            tri.add((tuple(sorted(v.tolist())), tuple(np.round(c - np.floor(c), 9) % 1.0)))
        if tri != {(tuple(sorted(s)), k) for k, s in owners.items()}:
            fails.append("duality n=%d" % n)
        shift = rng.uniform(-2, 2, 2)
        u = build_tessellation(wrap_to_torus(pts + shift))
        if not np.allclose(t.cell_stats(), u.cell_stats(), rtol=1e-9, atol=1e-12):
            fails.append("translation n=%d" % n)
    for _ in range(C1_CONFIGS):
        pts, t = _allowed_tess(rng, 4, 12)
        if canonical(t.tri_vertices, t.tri_offsets, t.points) != brute_periodic(pts):
            fails.append("brute n=%d" % len(pts))
    dt = time.perf_counter() - t0
    record(1, not fails and dt < C1_SECONDS,
           "%d configs per property, failures=%s, %.1fs (limit %gs)"
           % (C1_CONFIGS, fails[:3], dt, C1_SECONDS))


def test_criterion2_energy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    cases = {"model1": (HardcoreParams(angle=0.1), 0.0, 100.0),
             "model2": (HardcoreParams(eps=0.005, alpha=0.08), -2.0, 1000.0),
             "model3": (HardcoreParams(alpha=0.05, B=0.625), 0.5, 100.0)}
    worst = 0.0
    fails = []
    counts = {}
    for name, (beta, theta, z) in cases.items():
        m = get_model(name)
        pts = run(m, beta, theta, z, n_iters=3000, seed=5, check=False).points
        e0 = periodic_energy(pts, m, beta, theta)
        c = 0
        for k in range(C2_QUERIES):
            x = rng.random(2)
            h = local_energy(x, pts, m, beta, theta)
            e1 = periodic_energy(np.vstack([pts, x]), m, beta, theta)
            if h.finite != e1.finite:
                fails.append("%s birth support" % name)
            elif h.finite:
                err = abs(h.value - (e1.value - e0.value)) / (1 + abs(e1.value - e0.value))
                worst = max(worst, err)
                c += 1
            i = int(rng.integers(len(pts)))
            h = removal_energy(i, pts, m, beta, theta)
            e1 = periodic_energy(np.delete(pts, i, axis=0), m, beta, theta)
            if h.finite != e1.finite:
                fails.append("%s death support" % name)
            elif h.finite:
                err = abs(h.value - (e0.value - e1.value)) / (1 + abs(e0.value - e1.value))
                worst = max(worst, err)
                c += 1
        counts[name] = c
    # support does not read theta; support monotone in beta
    for name in ("model2", "model3"):
        m = get_model(name)
        beta = cases[name][0]
        for k in range(C2_PAIRS):
            if k % 2:
                pts = run(m, beta, cases[name][1], cases[name][2], n_iters=300, seed=k,
                          check=False).points
            else:
                pts = _random_points(rng, int(rng.integers(30, 80)))
            b = HardcoreParams(eps=rng.uniform(0.001, 0.01), alpha=rng.uniform(0.04, 0.2),
                               B=rng.uniform(0.3, 3.0) if name == "model3" else None)
            ref = periodic_energy(pts, m, b, 0.0).finite
            for th in rng.uniform(-20, 20, C2_THETAS // 10):
                if periodic_energy(pts, m, b, th).finite != ref:
                    fails.append("%s theta-dependent support" % name)
            looser = HardcoreParams(eps=b.eps * rng.uniform(0, 1), alpha=b.alpha * rng.uniform(1, 2),
                                    B=b.B * rng.uniform(1, 2) if b.B else None)
            if ref and not periodic_energy(pts, m, looser, 1.0).finite:
                fails.append("%s non-monotone support" % name)
    dt = time.perf_counter() - t0
    ok = not fails and worst <= C2_REL_TOL and dt < C2_SECONDS
    record(2, ok, "finite comparisons %s, worst rel err %.2e (tol %g), failures=%s, %.1fs"
           % (counts, worst, C2_REL_TOL, fails[:3], dt))


def test_criterion3_null_sampler():
    t0 = time.perf_counter()
    r = S.null_check(z=C3_Z, n_steps=C3_STEPS, seed=303)
    dt = time.perf_counter() - t0
    ok = r.mean_ok and r.var_ok and dt < C3_SECONDS
    record(3, ok, "mean %.2f (se %.2f), variance %.1f (se %.1f), target %g, %.0fs"
           % (r.mean, r.se_mean, r.var, r.se_var, C3_Z, dt))


def test_criterion4_model2_negative_theta():
    recs = S.replicate(M2, HardcoreParams(alpha=0.08), -5.0, 1000.0, C4_REPS, C4_ITERS,
                       seed=404, fields=("alpha",))
    th = np.array([r["theta_zknown"] for r in recs if r["status"] == "ok"])
    pop = np.mean([r["n_points"] for r in recs])
    mean, sd = float(np.mean(th)), float(np.std(th, ddof=1))
    ok = (C4_MEAN[0] <= mean <= C4_MEAN[1] and sd <= C4_SD
          and abs(pop - C4_POP) <= C4_POP_TOL * C4_POP)
    record(4, ok, "mean theta %.3f, sd %.3f over %d estimable reps, mean population %.0f"
           % (mean, sd, th.size, pop))


def test_criterion5_model2_alpha_hat():
    recs = S.replicate(M2, HardcoreParams(alpha=0.08), 5.0, 1000.0, C5_REPS, C5_ITERS,
                       seed=505, fields=("alpha",))
    a = np.array([r["alpha_hat"] for r in recs])
    ok = bool(np.all((a >= C5_RANGE[0]) & (a <= C5_RANGE[1])))
    record(5, ok, "alpha-hat in [%.4f, %.4f], mean %.4f sd %.4f over %d reps"
           % (a.min(), a.max(), a.mean(), a.std(ddof=1), a.size))


def test_criterion6_model3_signs():
    parts = []
    ok = True
    for theta in (-0.5, 0.5):
        recs = S.replicate(M3, HardcoreParams(alpha=0.05, B=0.625), theta, 100.0, C6_REPS,
                           C6_ITERS, seed=606 + int(10 * theta), fields=("alpha", "B"))
        est = [r for r in recs if r["status"] == "ok"]
        right = np.mean([np.sign(r["theta_zknown"]) == np.sign(theta) for r in est])
        frac = np.mean([r["removable_all"] / r["n_points"] for r in recs])
        target = C6_REMOVABLE[theta]
        ok &= right >= C6_SIGN and target / C6_FACTOR <= frac <= target * C6_FACTOR
        parts.append("theta=%+.1f: sign %.0f%% of %d estimable, removable %.1f/%.0f (%.3f vs %.3f)"
                     % (theta, 100 * right, len(est),
                        np.mean([r["removable_all"] for r in recs]),
                        np.mean([r["n_points"] for r in recs]), frac, target))
    record(6, ok, "; ".join(parts))


def test_criterion7_pll_oracle():
    m = get_model("model3")
    beta = HardcoreParams(alpha=0.2, B=1.0)
    worst_t = worst_z = 0.0
    used = skipped = 0
    seed = 700
    while used < C7_DATASETS:
        seed += 1
        pts = run(m, beta, 0.5, 25.0, n_iters=3000, seed=seed, check=False).points
        if len(pts) > C7_MAX_POINTS:
            skipped += 1
            continue
        b = E.support_params(E.estimate_hardcore(pts, m, fields=("alpha", "B")))
        d = E.PLLData(pts, m, b, E.FULL, 2000, seed=seed)
        try:
            theta, z, _, _ = E.estimate_smooth(d)
        except (E.InestimableError, E.NoRootError):
            skipped += 1
            continue
        thetas = np.round(theta + C7_THETA_STEP * np.arange(-100, 101), 12)
        z_grid = z * C7_Z_FACTOR ** np.arange(-50, 51)
        tg, zg, _ = E.grid_search(d, thetas, z_grid)
        worst_t = max(worst_t, abs(tg - theta) / C7_THETA_STEP)
        worst_z = max(worst_z, abs(math.log(zg / z)) / math.log(C7_Z_FACTOR))
        used += 1
    ok = worst_t <= 1 + 1e-9 and worst_z <= 1 + 1e-9
    record(7, ok, "%d datasets (<= %d points, %d skipped), worst offset %.2f theta cells, "
           "%.2f z cells" % (used, C7_MAX_POINTS, skipped, worst_t, worst_z))


def test_criterion8_gnz_balance():
    r = S.gnz_balance(M3, HardcoreParams(alpha=0.05, B=0.625), 0.5, 100.0, C8_REPS, seed=808)
    mean, se = r["mean"], r["se"]
    ok = bool(np.all(np.abs(mean) <= C8_SE * se))
    record(8, ok, "innovation mean %.3f (se %.3f) on the window, %.3f (se %.3f) on half of it"
           % (mean[0], se[0], mean[1], se[1]))


def test_criterion9_misspecification():
    res = run(M3, HardcoreParams(alpha=0.05), -0.5, 100.0, n_iters=C9_ITERS, seed=909,
              check=False)
    st = S.misspecification(res.points, n_boot=C9_BOOT, seed=909)
    p0, p3 = st["poisson"].pvalue, st["model3"].pvalue
    f0, f3 = st["poisson"].envelope.fraction_outside, st["model3"].envelope.fraction_outside
    ok = p0 <= C9_POISSON_P and p3 > C9_MODEL3_P
    record(9, ok, "%d points; Poisson: p=%.3f, %.1f%% outside; Model 3 (theta-hat %.3f): "
           "p=%.3f, %.1f%% outside" % (len(res.points), p0, 100 * f0,
                                       st["model3"].fit.theta_hat, p3, 100 * f3))
