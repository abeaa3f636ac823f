import math
import re

import numpy as np
import pytest

from gibbstess import energy as En
from gibbstess.energy import HardcoreParams, get_model
from gibbstess.geometry import build_tessellation, wrap_to_torus
from gibbstess.mesh import DegeneracyError, triangular_lattice
from gibbstess.sampler import initial_lattice, run

CASES = {
    "model1": (HardcoreParams(angle=0.1), 0.0),
    "model2": (HardcoreParams(eps=0.01, alpha=0.1), -2.0),
    "model3": (HardcoreParams(alpha=0.1, B=1.0), 0.7),
}


def sample_config(name, n_iters=3000, seed=1):
    beta, theta = CASES[name]
    return run(get_model(name), beta, theta, 100.0, n_iters=n_iters, seed=seed).points


def rel_close(a, b, tol=1e-9):
    return abs(a - b) <= tol * (1 + abs(b))


# --- local versus global ----------------------------------------------------

@pytest.mark.parametrize("name", sorted(CASES))
def test_local_energy_matches_global_difference(name, rng):
    model = get_model(name)
    beta, theta = CASES[name]
    pts = sample_config(name)
    e0 = En.periodic_energy(pts, model, beta, theta)
    assert e0.finite
    checked = 0
    for _ in range(100):
        x = rng.random(2)
        h = En.local_energy(x, pts, model, beta, theta)
        e1 = En.periodic_energy(np.vstack([pts, x]), model, beta, theta)
        assert h.finite == e1.finite
        if h.finite:
            assert rel_close(h.value, e1.value - e0.value)
            checked += 1
    for i in rng.choice(len(pts), size=min(100, len(pts)), replace=False):
        h = En.removal_energy(int(i), pts, model, beta, theta)
        e1 = En.periodic_energy(np.delete(pts, i, axis=0), model, beta, theta)
        assert h.finite == e1.finite
        if h.finite:
            assert rel_close(h.value, e0.value - e1.value)
    assert checked > 0


def test_local_evaluator_batch_matches_global(rng):
    model = get_model("model3")
    beta, _ = CASES["model3"]
    pts = sample_config("model3")
    ev = En.LocalEvaluator(pts, model, beta)
    xy = rng.random((60, 2))
    allowed, dS = ev.birth(xy)
    _, S0 = En.energy_statistic(pts, model, beta)
    for k in range(len(xy)):
        ok, S1 = En.energy_statistic(np.vstack([pts, xy[k]]), model, beta)
        assert allowed[k] == ok
        if ok:
            assert rel_close(dS[k], S1 - S0)


@pytest.mark.parametrize("name", ["model2", "model3"])
def test_local_energy_linear_in_theta(name, rng):
    model = get_model(name)
    beta, _ = CASES[name]
    pts = sample_config(name)
    x = rng.random(2)
    while not En.local_energy(x, pts, model, beta, 1.0).finite:
        x = rng.random(2)
    s1 = En.local_energy(x, pts, model, beta, 1.0).value
    for theta in np.linspace(-10, 10, 50):
        h = En.local_energy(x, pts, model, beta, theta).value
        assert h == pytest.approx(theta * s1, rel=1e-9, abs=1e-12)


def test_volume_ratio_potential():
    assert En.volume_ratio_potential(1.0, 1.0) == 0.0
    assert En.volume_ratio_potential(2.0, 1.0) == pytest.approx(1.0)
    assert En.volume_ratio_potential(1.0, 5.0) == pytest.approx(2.0)
    v = np.linspace(0.1, 3, 30)
    assert np.all(np.diff(En.volume_ratio_potential(v[v >= 1], 1.0)) > 0)
    assert np.allclose(En.volume_ratio_potential(v, 0.7), En.volume_ratio_potential(0.7, v))


# --- known values -----------------------------------------------------------

def test_model2_lattice_energy_is_perimeter_sum():
    pts, _, _ = triangular_lattice(10)
    t = build_tessellation(pts)
    model = get_model("model2")
    e = En.periodic_energy(pts, model, HardcoreParams(eps=0.01, alpha=0.2), 1.5)
    assert e.finite
    assert e.value == pytest.approx(1.5 * t.perimeter.sum(), rel=1e-12)


def test_model3_regular_lattice_has_nearly_zero_energy():
    pts, _, _ = triangular_lattice(10)
    e = En.periodic_energy(pts, get_model("model3"), HardcoreParams(alpha=0.2), 1.0)
    # congruent cells; rounding in the volumes is amplified by the square root
    assert e.finite and abs(e.value) < 1e-3


def test_null_model_local_energy_is_zero(rng):
    pts = rng.random((50, 2))
    m = get_model("null")
    for _ in range(20):
        assert En.local_energy(rng.random(2), pts, m, HardcoreParams(), 3.0).value == 0.0
    assert En.removal_energy(3, pts, m, HardcoreParams(), 3.0).value == 0.0


def test_short_edge_gives_infinite_energy():
    pts, _, _ = triangular_lattice(8)
    model = get_model("model2")
    beta = HardcoreParams(eps=0.05, alpha=0.2)
    x = wrap_to_torus(pts[0] + (0.025, 0.0))
    h = En.local_energy(x, pts, model, beta, 1.0)
    assert not h.finite and h.value == math.inf
    assert "l(T) <= eps" in str(h.violation)


def test_violation_report_names_elements():
    pts, _, _ = triangular_lattice(8)
    pts = np.vstack([pts, wrap_to_torus(pts[0] + (0.02, 0.0))])
    e = En.periodic_energy(pts, get_model("model2"), HardcoreParams(eps=0.05), 1.0,
                           full_report=True)
    assert not e.finite and len(e.violations) >= 2
    assert all(v.element == "triangle" and len(v.index) == 3 for v in e.violations)
    c = En.periodic_energy(pts, get_model("model3"), HardcoreParams(eps=0.03), 1.0)
    assert c.violation.element == "cell" and "h_min" in c.violation.constraint


def test_duplicate_location_is_an_error():
    pts, _, _ = triangular_lattice(5)
    with pytest.raises(DegeneracyError):
        En.local_energy(pts[2], pts, get_model("model2"), HardcoreParams(alpha=0.5), 1.0)


# --- removable points -------------------------------------------------------

@pytest.mark.parametrize("name", sorted(CASES))
def test_removable_set_matches_deletion_oracle(name):
    model = get_model(name)
    beta, _ = CASES[name]
    pts = sample_config(name, seed=4)
    mask = En.removable_mask(pts, model, beta)
    for i in range(len(pts)):
        ok = En.periodic_energy(np.delete(pts, i, axis=0), model, beta, 0.0).finite
        assert mask[i] == ok
    assert set(En.removable_set(pts, model, beta)) == set(np.where(mask)[0])
    assert En.is_removable(0, pts, model, beta) == mask[0]


def test_regular_lattice_is_rigid():
    model = get_model("model3")
    beta = HardcoreParams(alpha=0.06, B=0.3)
    pts = initial_lattice(model, beta, 200)
    assert En.removable_mask(pts, model, beta).sum() == 0


def test_no_hardcore_means_everything_removable(rng):
    pts = rng.random((30, 2))
    assert En.removable_mask(pts, get_model("model3"), HardcoreParams()).all()


# --- validation -------------------------------------------------------------

@pytest.mark.parametrize("model,beta,msg", [
    ("model2", HardcoreParams(eps=0.1, alpha=0.08), "requires ε < α"),
    ("model3", HardcoreParams(alpha=0.1, B=0.2), "requires B > 1/(2√3)"),
    ("model1", HardcoreParams(angle=1.2), "requires 0 ≤ angle < π/3"),
    ("model2", HardcoreParams(alpha=-1.0), "must be positive"),
    ("null", HardcoreParams(alpha=0.1), "no hardcore"),
    ("model2", HardcoreParams(B=1.0), "only takes"),
])
def test_validation_messages(model, beta, msg):
    with pytest.raises(ValueError, match=re.escape(msg)):
        get_model(model).validate(beta)


def test_unknown_model():
    with pytest.raises((KeyError, ValueError)):
        get_model("model9")


def test_describe_spells_out_inactive():
    d = HardcoreParams(alpha=0.05).describe()
    assert d["alpha"] == 0.05 and d["eps"] == "inactive" and d["B"] == "inactive"


# --- support properties -----------------------------------------------------

def _random_beta(name, rng):
    if name == "model2":
        return HardcoreParams(eps=rng.uniform(0.001, 0.03), alpha=rng.uniform(0.05, 0.2))
    return HardcoreParams(eps=rng.uniform(0.001, 0.02), alpha=rng.uniform(0.06, 0.2),
                          B=rng.uniform(0.3, 3.0))


@pytest.mark.parametrize("name", ["model2", "model3"])
def test_support_does_not_depend_on_theta(name, rng):
    model = get_model(name)
    verdicts = []
    for k in range(10):
        if k % 2:
            pts, beta = rng.random((rng.integers(40, 120), 2)), _random_beta(name, rng)
        else:
            pts, beta = sample_config(name, n_iters=500, seed=k), CASES[name][0]
        ref = En.periodic_energy(pts, model, beta, 0.0).finite
        verdicts.append(ref)
        for theta in rng.uniform(-20, 20, 50):
            assert En.periodic_energy(pts, model, beta, theta).finite == ref
    assert True in verdicts and False in verdicts


@pytest.mark.parametrize("name", ["model2", "model3"])
def test_support_is_monotone_in_beta(name, rng):
    model = get_model(name)
    seen = 0
    for _ in range(30):
        pts = sample_config(name, n_iters=500, seed=int(rng.integers(1 << 30)))
        beta = _random_beta(name, rng)
        if not En.periodic_energy(pts, model, beta, 1.0).finite:
            # the sampled configuration is allowed under the case parameters
            beta = CASES[name][0]
        assert En.periodic_energy(pts, model, beta, 1.0).finite
        for _ in range(10):
            kw = {"eps": beta.eps * rng.uniform(0, 1) if beta.eps else None,
                  "alpha": beta.alpha * rng.uniform(1, 3)}
            if name == "model3":
                kw["B"] = beta.B * rng.uniform(1, 3)
            looser = HardcoreParams(**{k: (v if v else None) for k, v in kw.items()})
            assert En.periodic_energy(pts, model, looser, 1.0).finite
            seen += 1
    assert seen == 300
