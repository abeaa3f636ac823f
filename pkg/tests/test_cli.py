import json
import subprocess
import sys

import numpy as np
import pytest

from gibbstess.cli import main
from gibbstess.geometry import read_points, write_points
from gibbstess.mesh import triangular_lattice

MODEL3 = """\
[model]
kind = model3
alpha = 0.08
B = 1.0
theta = 0.5
z = 100

[sampler]
iters = 6000
seed = 3
monitor_every = 1000

[estimation]
z_known = 100
mc_samples = 2000
erosion = 0.1
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "m3.ini"
    p.write_text(MODEL3)
    return p


def simulate(cfg, out, *extra):
    return main(["simulate", "--config", str(cfg), "--out-dir", str(out), "-q", *extra])


def test_simulate_outputs_and_manifest(cfg, tmp_path):
    out = tmp_path / "sim"
    assert simulate(cfg, out) == 0
    names = {p.name for p in out.iterdir()}
    assert {"sim_points.csv", "sim_trace.csv", "sim_tessellation.svg", "sim_trace.svg",
            "sim_points_edges.csv", "initial_points.csv", "simulate.manifest.json"} <= names
    m = json.loads((out / "simulate.manifest.json").read_text())
    assert m["seed"] == 3 and m["config"] == MODEL3 and len(m["config_sha256"]) == 64
    assert "sim_points.csv" in m["outputs"] and "numpy" in m["versions"]
    assert len((out / "sim_trace.csv").read_text().splitlines()) == 7


def test_simulate_is_bit_reproducible(cfg, tmp_path):
    assert simulate(cfg, tmp_path / "a", "--no-svg") == 0
    assert simulate(cfg, tmp_path / "b", "--no-svg") == 0
    assert simulate(cfg, tmp_path / "c", "--no-svg", "--seed", "4") == 0
    a = (tmp_path / "a" / "sim_points.csv").read_bytes()
    assert a == (tmp_path / "b" / "sim_points.csv").read_bytes()
    assert a != (tmp_path / "c" / "sim_points.csv").read_bytes()


def test_zero_iterations_reproduces_initial(cfg, tmp_path):
    out = tmp_path / "z"
    assert simulate(cfg, out, "--iters", "0", "--no-svg") == 0
    assert (out / "sim_points.csv").read_bytes() == (out / "initial_points.csv").read_bytes()


def test_replications(cfg, tmp_path):
    out = tmp_path / "r"
    assert simulate(cfg, out, "--replications", "3", "--iters", "1000", "--no-svg") == 0
    pts = sorted(p.name for p in out.glob("rep*_points.csv"))
    assert pts == ["rep000_points.csv", "rep001_points.csv", "rep002_points.csv"]


def test_estimate_residuals_qqplot_pipeline(cfg, tmp_path):
    out = tmp_path / "p"
    assert simulate(cfg, out, "--no-svg") == 0
    pts = out / "sim_points.csv"
    fit = tmp_path / "fit.txt"
    assert main(["estimate", "--points", str(pts), "--model", str(cfg), "--out", str(fit),
                 "-q"]) == 0
    text = fit.read_text()
    assert "theta=" in text and "z_known=100.0" in text and "eps=none" in text
    assert (tmp_path / "estimate.manifest.json").exists()
    grid = tmp_path / "grid.csv"
    assert main(["residuals", "--points", str(pts), "--fit", str(fit), "--grid-side", "0.1",
                 "--mc-per-square", "10", "--out-grid", str(grid),
                 "--out-svg", str(tmp_path / "grid.svg"),
                 "--out-smooth-svg", str(tmp_path / "smooth.svg"), "-q"]) == 0
    lines = grid.read_text().splitlines()
    assert lines[0] == "i,j,value" and len(lines) == 1 + 64
    qq = tmp_path / "qq.csv"
    assert main(["qqplot", "--points", str(pts), "--fit", str(fit), "--grid-side", "0.2",
                 "--mc-per-square", "5", "--n-boot", "3", "--iters-per-boot", "500",
                 "--out-qq", str(qq), "--out-svg", str(tmp_path / "qq.svg"), "-q"]) == 0
    assert qq.read_text().splitlines()[0] == "quantile,observed,bootMean,lo95,hi95"


def test_estimate_to_stdout_and_batch(cfg, tmp_path, capsys):
    out = tmp_path / "b"
    assert simulate(cfg, out, "--replications", "2", "--iters", "3000", "--no-svg") == 0
    assert main(["estimate", "--points", str(out / "rep000_points.csv"), "--model", str(cfg),
                 "-q"]) == 0
    assert "model=model3" in capsys.readouterr().out
    assert main(["estimate", "--batch", str(out), "--model", str(cfg), "-q"]) == 0
    assert (out / "fits.csv").exists()
    assert (out / "summary.csv").read_text().startswith("parameter,mean,sd,count")


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nkind = model2\neps = 0.1\nalpha = 0.08\nz = 1\n")
    assert main(["simulate", "--config", str(bad), "-q"]) == 2
    empty = tmp_path / "empty.ini"
    empty.write_text("")
    assert main(["simulate", "--config", str(empty), "-q"]) == 2
    assert main(["simulate", "--config", str(tmp_path / "missing.ini"), "-q"]) == 2
    assert main(["estimate", "--points", str(tmp_path / "none.csv"), "--model", "model2"]) == 2
    assert main(["reproduce", "fig99", "-q"]) == 2


def test_degenerate_input_exits_3(tmp_path):
    p = tmp_path / "tiny.csv"
    write_points(p, np.array([[0.1, 0.2], [0.6, 0.7]]))
    assert main(["estimate", "--points", str(p), "--model", "model2", "-q"]) == 3


def test_rigid_lattice_exits_4(tmp_path):
    p = tmp_path / "lattice.csv"
    pts, _, _ = triangular_lattice(12)
    write_points(p, pts)
    assert main(["estimate", "--points", str(p), "--model", "model3", "-q"]) == 4


def test_reproduce_small_preset(tmp_path):
    out = tmp_path / "rep"
    assert main(["reproduce", "fig3", "--out-dir", str(out), "--iters", "2000", "-q"]) == 0
    d = out / "fig3"
    assert len(list(d.glob("model3_theta*_points.csv"))) == 4
    assert len(list(d.glob("*_tessellation.svg"))) == 4
    m = json.loads((d / "reproduce.manifest.json").read_text())
    assert m["preset"] == "fig3"
    pts = read_points(d / "model3_theta+0.5_points.csv")
    assert len(pts) > 50


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "gibbstess.cli", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    for cmd in ("simulate", "estimate", "residuals", "qqplot", "reproduce"):
        assert cmd in r.stdout
