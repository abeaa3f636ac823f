"""Replicated simulation / estimation studies and the null-model check."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import estimation as E
from . import residuals as Rz
from . import sampler
from .energy import HardcoreParams, Intensity, LocalEvaluator, NullModel, get_model

FIT_FIELDS = {"model2": ("alpha",), "model3": ("alpha", "B"), "model1": ("angle",), "null": ()}


def child_seeds(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


def seed_int(ss):
    """A plain integer seed from a SeedSequence (for file names / manifests)."""
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# ---------------------------------------------------------------------------
# replications

RECORD_FIELDS = ("rep", "seed", "n_points", "removable_all", "removable_window",
                 "eps_hat", "alpha_hat", "B_hat", "angle_hat", "theta_zknown",
                 "theta_zest", "z_est", "status")


def fit_replication(points, model, z_known, mc_samples=E.DEFAULT_MC, seed=None,
                    fields=None, erosion=None):
    """Both fits (z known and z estimated) of one dataset, as a flat dict."""
    fields = fields if fields is not None else FIT_FIELDS.get(model.name, ())
    rec = {"n_points": len(points), "status": "ok"}
    beta_hat = E.estimate_hardcore(points, model, E.FULL, fields)
    for k in ("eps", "alpha", "B", "angle"):
        v = getattr(beta_hat, k)
        rec[k + "_hat"] = math.nan if v is None else v
    ev = LocalEvaluator(points, model, E.support_params(beta_hat))
    rem_all, _ = ev.death()
    rec["removable_all"] = int(rem_all.sum())
    rec["removable_window"] = 0
    rec["theta_zknown"] = rec["theta_zest"] = rec["z_est"] = math.nan
    try:
        f1 = E.fit(points, model, z_known=z_known, mc_samples=mc_samples, seed=seed,
                   fields=fields, erosion=erosion)
        rec["removable_window"] = f1.removable_count
        rec["theta_zknown"] = f1.theta_hat
        f2 = E.fit(points, model, mc_samples=mc_samples, seed=seed, fields=fields,
                   erosion=erosion)
        rec["theta_zest"] = f2.theta_hat
        rec["z_est"] = f2.z_hat
    except E.InestimableError:
        rec["status"] = "inestimable"
    except E.NoRootError:
        rec["status"] = "noroot"
    return rec


def replicate(model, beta, theta, z, n_reps, n_iters=None, seed=0, mc_samples=E.DEFAULT_MC,
              fields=None, erosion=None, check=False, progress=None, keep_points=False):
    """Simulate ``n_reps`` datasets and fit each; returns a list of dicts."""
    out = []
    for r, ss in enumerate(child_seeds(seed, n_reps)):
        sim_ss, fit_ss = ss.spawn(2)
        res = sampler.run(model, beta, theta, Intensity.constant(z), n_iters=n_iters,
                          seed=sim_ss, check=check)
        rec = fit_replication(res.points, model, z, mc_samples, fit_ss, fields, erosion)
        rec["rep"] = r
        rec["seed"] = seed_int(ss)
        rec["geometry_rejections"] = res.trace.geometry_rejections
        if keep_points:
            rec["points"] = res.points
            rec["trace"] = res.trace
        out.append(rec)
        if progress is not None:
            progress(r + 1, n_reps, rec)
    return out


def summarize(records, keys=("n_points", "removable_all", "removable_window", "alpha_hat",
                             "B_hat", "theta_zknown", "theta_zest", "z_est")):
    """mean / sd / count per field over the estimable replications."""
    out = {}
    for k in keys:
        v = np.array([r[k] for r in records if r.get("status") == "ok" or k in
                      ("n_points", "removable_all", "alpha_hat", "B_hat")], dtype=float)
        v = v[np.isfinite(v)]
        out[k] = {"mean": float(v.mean()) if v.size else math.nan,
                  "sd": float(v.std(ddof=1)) if v.size > 1 else math.nan,
                  "count": int(v.size)}
    out["inestimable"] = sum(r["status"] == "inestimable" for r in records)
    out["noroot"] = sum(r["status"] == "noroot" for r in records)
    out["replications"] = len(records)
    return out


def write_records(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow([_csv(r.get(k)) for k in RECORD_FIELDS])


def read_records(path):
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                if k == "status":
                    rec[k] = v
                else:
                    rec[k] = float(v) if v not in ("", "nan") else math.nan
            out.append(rec)
    return out


def _csv(v):
    if isinstance(v, float):
        return "%.17g" % v
    return v


# ---------------------------------------------------------------------------
# null-model check

@dataclass
class NullCheck:
    mean: float
    var: float
    se_mean: float
    se_var: float
    z: float
    samples: int

    @property
    def mean_ok(self):
        return abs(self.mean - self.z) <= 3 * self.se_mean

    @property
    def var_ok(self):
        return abs(self.var - self.z) <= 3 * self.se_var


def null_check(z=100.0, n_steps=10 ** 6, record_every=100, seed=0, burn=0.05, batches=50):
    """Run the chain with V = 0 and no hardcore; compare the point-count
    mean and variance with Poisson(z), standard errors by batch means."""
    model = NullModel()
    init = sampler.initial_lattice(model, HardcoreParams(), int(z))
    state = sampler.ChainState(init, model, HardcoreParams(), 0.0, Intensity.constant(z),
                               seed=seed)
    counts = []
    done = 0
    while done < n_steps:
        k = min(record_every, n_steps - done)
        state.advance(state.draw(k))
        done += k
        counts.append(state.n)
    x = np.array(counts[int(burn * len(counts)):], dtype=float)
    m = x.mean()
    b = np.array_split(x, batches)
    bm = np.array([s.mean() for s in b])
    bv = np.array([np.mean((s - m) ** 2) for s in b])
    return NullCheck(mean=float(m), var=float(np.mean((x - m) ** 2)),
                     se_mean=float(bm.std(ddof=1) / math.sqrt(batches)),
                     se_var=float(bv.std(ddof=1) / math.sqrt(batches)),
                     z=z, samples=len(x))


# ---------------------------------------------------------------------------
# GNZ balance

def innovation(points, model, beta, theta, z, window, mc_samples=E.DEFAULT_MC, seed=None,
               regions=None):
    """Innovations (true parameters) on the window and on sub-boxes."""
    fitted = Rz.FittedModel(model, beta, theta, z, window)
    data = Rz._Data(points, fitted, window)
    rng = np.random.Generator(np.random.PCG64(seed))
    xy = window.uniform(mc_samples, rng)
    allowed, h = data.mc(xy)
    w = np.where(allowed, np.exp(-h), 0.0)
    out = {"window": data.rem_points.shape[0] - z * window.area * float(w.mean())}
    for name, box in (regions or {}).items():
        b = E.Window(*box)
        sel = b.contains(xy)
        n_rem = int(np.sum(b.contains(data.rem_points)))
        out[name] = n_rem - z * window.area * float(np.mean(w * sel))
    return out


def gnz_balance(model, beta, theta, z, n_reps=100, n_iters=None, seed=0,
                mc_samples=E.DEFAULT_MC, erosion=None, progress=None):
    width = E.default_erosion(model, beta) if erosion is None else erosion
    window = E.Window.eroded(width)
    half = (window.x0, window.y0, (window.x0 + window.x1) / 2, window.y1)
    vals = []
    for r, ss in enumerate(child_seeds(seed, n_reps)):
        sim_ss, mc_ss = ss.spawn(2)
        res = sampler.run(model, beta, theta, Intensity.constant(z), n_iters=n_iters,
                          seed=sim_ss, check=False)
        v = innovation(res.points, model, beta, theta, z, window, mc_samples, mc_ss,
                       {"half": half})
        vals.append((v["window"], v["half"]))
        if progress is not None:
            progress(r + 1, n_reps, v)
    vals = np.array(vals)
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(n_reps)
    return {"values": vals, "mean": mean, "se": se, "window": window}


# ---------------------------------------------------------------------------
# misspecification

@dataclass
class QQStudy:
    name: str
    fit: object
    envelope: object
    grid: object
    pvalue: float = math.nan
    extra: dict = field(default_factory=dict)


def misspecification(points, n_boot=100, side=Rz.DEFAULT_SIDE, seed=0,
                     mc_per_square=Rz.DEFAULT_MC_PER_SQUARE, iters_per_boot=None,
                     z_known=100.0, fits=("poisson", "model3"), progress=None):
    """QQ diagnostics of several fits to one sample."""
    out = {}
    seeds = dict(zip(("poisson", "model2", "model3"), child_seeds(seed, 3)))
    for name in fits:
        fit_ss, qq_ss = seeds[name].spawn(2)
        if name == "poisson":
            f = E.fit(points, NullModel(), seed=fit_ss)
        elif name == "model2":
            f = E.fit(points, get_model("model2"), z_known=1000.0, seed=fit_ss,
                      fields=FIT_FIELDS["model2"])
        else:
            f = E.fit(points, get_model("model3"), z_known=z_known, seed=fit_ss,
                      fields=FIT_FIELDS["model3"])
        fitted = Rz.FittedModel.from_fit(f)
        cb = None
        if progress is not None:
            cb = lambda b, n, name=name: progress(name, b, n)
        env, grid = Rz.qq_diagnostic(points, fitted, side, n_boot, iters_per_boot, qq_ss,
                                     mc_per_square, psi="raw", progress=cb)
        out[name] = QQStudy(name, f, env, grid, env.global_pvalue())
    return out
