"""Command-line interface: simulate, estimate, residuals, qqplot, reproduce.

Exit codes: 0 success, 2 configuration / input error, 3 geometric
degeneracy, 4 inestimable (no removable point, or no root of the score).
"""

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time

import numpy as np

from . import _jit
from . import estimation as E
from . import residuals as Rz
from . import sampler
from . import studies as S
from . import svg
from .config import ConfigError, describe, parse_config
from .energy import HardcoreParams, Intensity, LocalEvaluator, get_model
from .geometry import build_tessellation, read_points, write_edges, write_points
from .mesh import DegeneracyError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_INESTIMABLE = 4


def _versions():
    import scipy

    out = {"python": platform.python_version(), "numpy": np.__version__,
           "scipy": scipy.__version__, "backend": _jit.backend()}
    if _jit.numba is not None:
        out["numba"] = _jit.numba.__version__
    try:
        from importlib.metadata import version

        out["package"] = version("artifact")
    except Exception:
        out["package"] = "unknown"
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Collects the outputs of one command and writes its manifest."""

    def __init__(self, command, args, config=None, seed=None):
        self.command = command
        self.args = {k: v for k, v in vars(args).items() if k != "func"}
        self.config = config
        self.seed = seed
        self.outputs = []

    def path(self, directory, name):
        os.makedirs(directory, exist_ok=True)
        p = os.path.join(directory, name)
        self.outputs.append(p)
        return p

    def add(self, p):
        d = os.path.dirname(os.path.abspath(p))
        os.makedirs(d, exist_ok=True)
        self.outputs.append(p)
        return p

    def manifest(self, directory=None, extra=None):
        files = [p for p in self.outputs if os.path.exists(p)]
        if not files:
            return None
        directory = directory or os.path.dirname(os.path.abspath(files[0]))
        m = {
            "command": self.command,
            "argv": sys.argv[1:],
            "args": self.args,
            "seed": self.seed,
            "config_sha256": self.config.digest() if self.config is not None else None,
            "config": self.config.source if self.config is not None else None,
            "versions": _versions(),
            "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "outputs": {os.path.relpath(p, directory): _sha256(p) for p in files},
        }
        if extra:
            m.update(extra)
        path = os.path.join(directory, "%s.manifest.json" % self.command)
        with open(path, "w") as fh:
            json.dump(m, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        return path


def _log(msg, quiet=False):
    if not quiet:
        print(msg, file=sys.stderr, flush=True)


def _load_model_arg(value):
    """``--model`` accepts a config file or a bare model name."""
    if os.path.exists(value):
        return parse_config(value)
    try:
        get_model(value)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    text = "[model]\nkind = %s\nz = 1\n" % value
    from .config import parse_config_text

    return parse_config_text(text, "<--model %s>" % value)


def _read_points_arg(path):
    if not os.path.exists(path):
        raise ConfigError("points file not found: %s" % path)
    try:
        return read_points(path)
    except ValueError as e:
        raise ConfigError(str(e)) from None


# ---------------------------------------------------------------------------
# simulate

def _suffixed(path, r, many):
    if not many:
        return path
    root, ext = os.path.splitext(path)
    return "%s_rep%03d%s" % (root, r, ext)


def cmd_simulate(args):
    cfg = parse_config(args.config)
    if args.iters is not None:
        cfg.iters = args.iters
    if args.seed is not None:
        cfg.seed = args.seed
    if args.replications is not None:
        cfg.replications = args.replications
    if args.monitor_every is not None:
        cfg.monitor_every = args.monitor_every
    if args.sigma is not None:
        cfg.proposal = sampler.ProposalParams(args.sigma, cfg.proposal.p_birth, cfg.proposal.p_death)
    if cfg.replications < 1 or (cfg.iters is not None and cfg.iters < 0) or cfg.monitor_every < 1:
        raise ConfigError("replications and monitor-every must be >= 1, iters >= 0")
    run = Run("simulate", args, cfg, cfg.seed)
    model = cfg.model
    init = sampler.initial_lattice(model, cfg.beta, cfg.target or sampler.default_target(cfg.intensity))
    _log("simulate: %s, %d iterations x %d" % (describe(cfg), cfg.n_iters, cfg.replications), args.quiet)
    many = cfg.replications > 1
    d = args.out_dir
    for r in range(cfg.replications):
        seed = cfg.seed + r
        stem = "rep%03d" % r if many else "sim"
        p_pts = _suffixed(args.out_points, r, many) if args.out_points else os.path.join(d, stem + "_points.csv")
        p_tr = _suffixed(args.out_trace, r, many) if args.out_trace else os.path.join(d, stem + "_trace.csv")
        p_svg = _suffixed(args.out_svg, r, many) if args.out_svg else os.path.join(d, stem + "_tessellation.svg")
        res = sampler.run(model, cfg.beta, cfg.theta, cfg.intensity, n_iters=cfg.n_iters,
                          proposal=cfg.proposal, monitor_every=cfg.monitor_every, seed=seed,
                          initial=init, trace_path=run.add(p_tr), check=not args.no_check)
        write_points(run.add(p_pts), res.points)
        if not args.no_svg:
            tess = build_tessellation(res.points)
            write_edges(run.add(os.path.splitext(p_pts)[0] + "_edges.csv"), tess)
            mode = "voronoi" if model.kind == "voronoi" else "delaunay"
            svg.tessellation(tess, mode).save(run.add(p_svg))
            svg.trace(res.trace).save(run.add(os.path.splitext(p_tr)[0] + ".svg"))
        _log("  %s: %d points, seed %d" % (stem, len(res.points), seed), args.quiet)
    if args.initial or not many:
        write_points(run.add(os.path.join(d, "initial_points.csv")), init)
    run.manifest(d)
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimate

def _fit_one(points, cfg, args):
    model = cfg.model
    z_known = args.z_known if args.z_known is not None else cfg.z_known
    mc = args.mc_samples if args.mc_samples is not None else cfg.mc_samples
    seed = args.seed if args.seed is not None else cfg.seed
    erosion = args.erosion if args.erosion is not None else cfg.erosion
    fields = cfg.fields if cfg.fields is not None else S.FIT_FIELDS.get(model.name)
    f = E.fit(points, model, z_known=z_known, mc_samples=mc, seed=seed, erosion=erosion,
              fields=fields)
    if f.beta_hat.B is not None and f.beta_hat.B > cfg.b_inactive_above:
        f.extra["B_note"] = "effectively inactive (above %g)" % cfg.b_inactive_above
    return f, seed


def cmd_estimate(args):
    cfg = _load_model_arg(args.model)
    if args.batch:
        return _estimate_batch(args, cfg)
    if not args.points:
        raise ConfigError("estimate needs --points or --batch")
    pts = _read_points_arg(args.points)
    f, seed = _fit_one(pts, cfg, args)
    run = Run("estimate", args, cfg, seed)
    text = f.to_text()
    if args.out:
        with open(run.add(args.out), "w") as fh:
            fh.write(text)
        run.manifest()
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _estimate_batch(args, cfg):
    files = sorted(p for p in os.listdir(args.batch) if p.endswith("_points.csv")
                   or (p.endswith(".csv") and not p.endswith("_trace.csv")
                       and not p.endswith("_edges.csv") and p != "summary.csv"
                       and p != "fits.csv"))
    if not files:
        raise ConfigError("no point files in %s" % args.batch)
    out_dir = args.out or args.batch
    run = Run("estimate", args, cfg, args.seed)
    recs = []
    model = cfg.model
    z_known = args.z_known if args.z_known is not None else cfg.z_known
    mc = args.mc_samples if args.mc_samples is not None else cfg.mc_samples
    seed = args.seed if args.seed is not None else cfg.seed
    for k, name in enumerate(files):
        pts = _read_points_arg(os.path.join(args.batch, name))
        rec = S.fit_replication(pts, model, z_known, mc, seed, cfg.fields, args.erosion)
        rec["rep"] = k
        rec["seed"] = seed
        recs.append(rec)
        _log("  %s: theta(z known)=%s theta(z est)=%s z=%s [%s]"
             % (name, _g(rec["theta_zknown"]), _g(rec["theta_zest"]), _g(rec["z_est"]),
                rec["status"]), args.quiet)
    S.write_records(run.path(out_dir, "fits.csv"), recs)
    _write_summary(run.path(out_dir, "summary.csv"), S.summarize(recs))
    run.manifest(out_dir)
    return EXIT_OK


def _g(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else "%.4g" % v


def _write_summary(path, summ):
    with open(path, "w") as fh:
        fh.write("parameter,mean,sd,count\n")
        for k, v in summ.items():
            if isinstance(v, dict):
                fh.write("%s,%.17g,%.17g,%d\n" % (k, v["mean"], v["sd"], v["count"]))
        fh.write("inestimable,%d,,\n" % summ["inestimable"])
        fh.write("noroot,%d,,\n" % summ["noroot"])


# ---------------------------------------------------------------------------
# residuals / qqplot

def _load_fit(path):
    if not os.path.exists(path):
        raise ConfigError("fit file not found: %s" % path)
    with open(path) as fh:
        try:
            return E.FitResult.from_text(fh.read())
        except (KeyError, ValueError) as e:
            raise ConfigError("%s: %s" % (path, e)) from None


def cmd_residuals(args):
    pts = _read_points_arg(args.points)
    fit = _load_fit(args.fit)
    fitted = Rz.FittedModel.from_fit(fit)
    run = Run("residuals", args, None, args.seed)
    grid = Rz.residual_grid(pts, fitted, args.grid_side, args.mc_per_square, args.seed,
                            psi=args.psi)
    grid.write_csv(run.add(args.out_grid))
    if args.out_svg:
        svg.heatmap(grid.values, grid.window).save(run.add(args.out_svg))
    if args.out_smooth_svg:
        svg.heatmap(grid.smoothed(args.bandwidth), grid.window,
                    title="smoothed, bandwidth %g" % args.bandwidth).save(run.add(args.out_smooth_svg))
    run.manifest(extra={"total_residual": grid.total()})
    _log("residuals: %dx%d squares, total %.6g" % (grid.shape[1], grid.shape[0], grid.total()),
         args.quiet)
    return EXIT_OK


def cmd_qqplot(args):
    pts = _read_points_arg(args.points)
    fit = _load_fit(args.fit)
    fitted = Rz.FittedModel.from_fit(fit)
    run = Run("qqplot", args, None, args.seed)
    prog = None if args.quiet else (lambda b, n: _log("  bootstrap %d/%d" % (b, n)))
    env, grid = Rz.qq_diagnostic(pts, fitted, args.grid_side, args.n_boot, args.iters_per_boot,
                                 args.seed, args.mc_per_square, psi=args.psi, progress=prog)
    env.write_csv(run.add(args.out_qq))
    if args.out_svg:
        svg.qq(env).save(run.add(args.out_svg))
    p = env.global_pvalue()
    run.manifest(extra={"fraction_outside": env.fraction_outside, "global_pvalue": p})
    _log("qqplot: %.2f%% of quantiles outside the band, global p-value %.3f"
         % (100 * env.fraction_outside, p), args.quiet)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reproduce

PRESETS = {
    "fig1": "Model 1 simulation (angle pi/6, inhomogeneous g, 5e5 iterations)",
    "fig2": "Model 2 simulations, theta = -5 and 5",
    "fig3": "Model 3 tessellations, theta in {-0.8, -0.5, 0.5, 0.8}",
    "fig4": "monitoring controls of the fig3 runs",
    "fig5": "Model 3 with B = inf and B = 1, theta = -0.5 and 0.5",
    "fig6": "monitoring controls of the fig5 runs",
    "fig7": "removable points (Model 2 theta=5, Model 3 theta=-0.5)",
    "fig8": "estimation study, Model 2 theta = -5",
    "fig9": "estimation study, Model 2 theta = 5",
    "fig10": "estimation study, Model 3 theta = -0.5",
    "fig11": "estimation study, Model 3 theta = 0.5",
    "table1": "sd of theta-hat by number of removable points, Model 3 theta = 0.5",
    "fig12": "sample used for the residual analysis (Voronoi, points, Delaunay)",
    "fig13": "residuals and QQ plots for misspecified fits (Poisson, Model 2)",
    "fig14": "residuals and QQ plot for the correct Model 3 fit",
}

M3 = dict(alpha=0.05, B=0.625)


def _sim_panel(run, out, stem, model, beta, theta, intensity, iters, seed, mode, marked=False,
               trace=True, tess_svg=True, check=True):
    res = sampler.run(model, beta, theta, intensity, n_iters=iters, seed=seed,
                      trace_path=run.path(out, stem + "_trace.csv"), check=check)
    write_points(run.path(out, stem + "_points.csv"), res.points)
    tess = build_tessellation(res.points)
    mk = None
    if marked:
        ev = LocalEvaluator(res.points, model, beta)
        mk = np.where(ev.death()[0])[0]
    if tess_svg:
        svg.tessellation(tess, mode, marked=mk).save(run.path(out, stem + "_tessellation.svg"))
    if trace:
        svg.trace(res.trace).save(run.path(out, stem + "_trace.svg"))
    return res


def _estimation_figure(run, out, name, model, beta, theta, z, reps, seed, quiet):
    prog = None if quiet else (lambda r, n, rec: _log("  replication %d/%d: n=%d theta=%s [%s]"
                                                        % (r, n, rec["n_points"],
                                                           _g(rec["theta_zknown"]), rec["status"])))
    recs = S.replicate(model, HardcoreParams(**beta), theta, z, reps, seed=seed, progress=prog)
    S.write_records(run.path(out, name + "_fits.csv"), recs)
    summ = S.summarize(recs)
    _write_summary(run.path(out, name + "_summary.csv"), summ)
    col = lambda k: np.array([r[k] for r in recs], dtype=float)
    svg.histogram(col("alpha_hat"), xlabel="alpha-hat", truth=beta.get("alpha")).save(
        run.path(out, name + "_alpha.svg"))
    if model.name == "model3":
        svg.histogram(col("B_hat"), xlabel="B-hat", truth=beta.get("B")).save(
            run.path(out, name + "_B.svg"))
    svg.histogram(col("theta_zknown"), xlabel="theta-hat (z known)", truth=theta).save(
        run.path(out, name + "_theta_zknown.svg"))
    svg.histogram(col("theta_zest"), xlabel="theta-hat (z estimated)", truth=theta).save(
        run.path(out, name + "_theta_zest.svg"))
    svg.histogram(col("z_est"), xlabel="z-hat", truth=z).save(run.path(out, name + "_z.svg"))
    svg.scatter(col("theta_zest"), col("z_est"), "theta-hat", "z-hat").save(
        run.path(out, name + "_scatter.svg"))
    svg.scatter(col("removable_window"), col("theta_zknown"), "removable points",
                "theta-hat (z known)").save(run.path(out, name + "_removable.svg"))
    return recs, summ


def _table1(run, out, recs):
    rows = []
    k = np.array([r["removable_window"] for r in recs], dtype=float)
    th = np.array([r["theta_zknown"] for r in recs], dtype=float)
    with open(run.path(out, "table1.csv"), "w") as fh:
        fh.write("removable,sd_theta,replications\n")
        for lo, hi, label in [(c, c, str(c)) for c in range(1, 8)] + [(8, 10 ** 9, ">7")]:
            sel = (k >= lo) & (k <= hi) & np.isfinite(th)
            sd = float(np.std(th[sel], ddof=1)) if sel.sum() > 1 else math.nan
            rows.append((label, sd, int(sel.sum())))
            fh.write("%s,%.17g,%d\n" % (label, sd, int(sel.sum())))
    return rows


def _residual_sample(seed, iters=None):
    return sampler.run(get_model("model3"), HardcoreParams(alpha=0.05), -0.5,
                       Intensity.constant(100), n_iters=iters or 150000, seed=seed)


def _qq_figure(run, out, studies):
    for name, st in studies.items():
        st.grid.write_csv(run.path(out, name + "_residuals.csv"))
        svg.heatmap(st.grid.values, st.grid.window, title="%s fit" % name).save(
            run.path(out, name + "_residuals.svg"))
        svg.heatmap(st.grid.smoothed(), st.grid.window, title="%s fit, smoothed" % name).save(
            run.path(out, name + "_residuals_smoothed.svg"))
        st.envelope.write_csv(run.path(out, name + "_qq.csv"))
        svg.qq(st.envelope, title="%s: p = %.3f" % (name, st.pvalue)).save(
            run.path(out, name + "_qq.svg"))
        with open(run.path(out, name + "_fit.txt"), "w") as fh:
            fh.write(st.fit.to_text())


def cmd_reproduce(args):
    name = args.name
    if name not in PRESETS:
        raise ConfigError("unknown preset %r (choose from %s)" % (name, ", ".join(PRESETS)))
    out = os.path.join(args.out_dir, name)
    run = Run("reproduce", args, None, args.seed)
    seed = args.seed
    reps = args.replications
    _log("reproduce %s: %s" % (name, PRESETS[name]), args.quiet)
    m1, m2, m3 = get_model("model1"), get_model("model2"), get_model("model3")
    summary = {}
    if name == "fig1":
        beta = HardcoreParams(angle=math.pi / 6)
        g = Intensity.model1(100.0, 0.75)
        init = sampler.initial_lattice(m1, beta, 200)
        write_points(run.path(out, "initial_points.csv"), init)
        svg.points(init, "initial configuration").save(run.path(out, "initial.svg"))
        _sim_panel(run, out, "model1", m1, beta, 0.0, g, args.iters or 500000, seed, "delaunay")
    elif name == "fig2":
        for th in (-5.0, 5.0):
            _sim_panel(run, out, "model2_theta%+g" % th, m2, HardcoreParams(alpha=0.08), th,
                       Intensity.constant(1000), args.iters or 200000, seed, "delaunay")
    elif name in ("fig3", "fig4"):
        for th in (-0.8, -0.5, 0.5, 0.8):
            it = args.iters or (500000 if abs(th) > 0.6 else 200000)
            _sim_panel(run, out, "model3_theta%+g" % th, m3, HardcoreParams(**M3), th,
                       Intensity.constant(100), it, seed, "voronoi",
                       trace=name == "fig4", tess_svg=name == "fig3")
    elif name in ("fig5", "fig6"):
        for B in (None, 1.0):
            for th in (-0.5, 0.5):
                stem = "model3_B%s_theta%+g" % ("inf" if B is None else "%g" % B, th)
                _sim_panel(run, out, stem, m3, HardcoreParams(alpha=0.05, B=B), th,
                           Intensity.constant(100), args.iters or 150000, seed, "voronoi",
                           trace=name == "fig6", tess_svg=name == "fig5")
    elif name == "fig7":
        _sim_panel(run, out, "model2_theta+5", m2, HardcoreParams(alpha=0.08), 5.0,
                   Intensity.constant(1000), args.iters or 200000, seed, "delaunay",
                   marked=True, trace=False)
        _sim_panel(run, out, "model3_theta-0.5", m3, HardcoreParams(**M3), -0.5,
                   Intensity.constant(100), args.iters or 200000, seed, "voronoi",
                   marked=True, trace=False)
    elif name in ("fig8", "fig9"):
        th = -5.0 if name == "fig8" else 5.0
        _, summary = _estimation_figure(run, out, name, m2, {"alpha": 0.08}, th, 1000.0,
                                        reps, seed, args.quiet)
    elif name in ("fig10", "fig11", "table1"):
        th = -0.5 if name == "fig10" else 0.5
        recs, summary = _estimation_figure(run, out, name, m3, dict(M3), th, 100.0, reps,
                                           seed, args.quiet)
        if name != "fig10":
            _table1(run, out, recs)
    elif name == "fig12":
        res = _residual_sample(seed, args.iters)
        write_points(run.path(out, "sample_points.csv"), res.points)
        tess = build_tessellation(res.points)
        svg.tessellation(tess, "voronoi").save(run.path(out, "voronoi.svg"))
        svg.points(res.points).save(run.path(out, "points.svg"))
        svg.tessellation(tess, "delaunay").save(run.path(out, "delaunay.svg"))
    elif name in ("fig13", "fig14"):
        res = _residual_sample(seed, args.iters)
        write_points(run.path(out, "sample_points.csv"), res.points)
        fits = ("poisson", "model2") if name == "fig13" else ("model3",)
        prog = None if args.quiet else (lambda f, b, n: _log("  %s bootstrap %d/%d" % (f, b, n)))
        studies = S.misspecification(res.points, n_boot=args.n_boot, seed=seed, fits=fits,
                                     iters_per_boot=args.iters_per_boot, progress=prog)
        _qq_figure(run, out, studies)
        summary = {k: {"global_pvalue": v.pvalue,
                       "fraction_outside": v.envelope.fraction_outside} for k, v in studies.items()}
    run.manifest(out, extra={"preset": name, "summary": summary})
    if summary:
        _log(json.dumps(summary, indent=1, default=float), args.quiet)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="gibbstess",
                                description="Gibbs Delaunay-Voronoi tessellations on the torus")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", help="no progress output")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run the birth-death-move sampler")
    s.add_argument("--config", required=True)
    s.add_argument("--iters", type=int)
    s.add_argument("--seed", type=int, help="seed of the first replication")
    s.add_argument("--seed-base", type=int, dest="seed")
    s.add_argument("--replications", type=int)
    s.add_argument("--sigma", type=float, help="move standard deviation")
    s.add_argument("--monitor-every", type=int)
    s.add_argument("--out-dir", default=".")
    s.add_argument("--out-points")
    s.add_argument("--out-trace")
    s.add_argument("--out-svg")
    s.add_argument("--no-svg", action="store_true")
    s.add_argument("--no-check", action="store_true",
                   help="skip the per-block energy recomputation")
    s.add_argument("--initial", action="store_true", help="also write the initial lattice")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", parents=[common], help="two-step fit of a point pattern")
    s.add_argument("--points")
    s.add_argument("--batch", help="directory of point files (summary mode)")
    s.add_argument("--model", required=True, help="config file or model name")
    s.add_argument("--z-known", type=float)
    s.add_argument("--mc-samples", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--erosion", type=float, help="window erosion width (default: model rule)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_estimate)

    for name, fn in (("residuals", cmd_residuals), ("qqplot", cmd_qqplot)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--points", required=True)
        s.add_argument("--fit", required=True)
        s.add_argument("--grid-side", type=float, default=Rz.DEFAULT_SIDE)
        s.add_argument("--mc-per-square", type=int, default=Rz.DEFAULT_MC_PER_SQUARE)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--psi", default="raw", choices=Rz.TEST_FUNCTIONS)
        s.add_argument("--out-svg")
        if name == "residuals":
            s.add_argument("--out-grid", required=True)
            s.add_argument("--out-smooth-svg")
            s.add_argument("--bandwidth", type=float, default=Rz.DEFAULT_BANDWIDTH)
        else:
            s.add_argument("--n-boot", type=int, default=100)
            s.add_argument("--iters-per-boot", type=int)
            s.add_argument("--out-qq", required=True)
        s.set_defaults(func=fn)

    s = sub.add_parser("reproduce", parents=[common], help="named experiment presets")
    s.add_argument("name", help=", ".join(PRESETS))
    s.add_argument("--out-dir", default="reproduce")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--replications", type=int, default=200)
    s.add_argument("--iters", type=int)
    s.add_argument("--n-boot", type=int, default=100)
    s.add_argument("--iters-per-boot", type=int)
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except sampler.InfeasibleStart as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except DegeneracyError as e:
        print("degenerate geometry: %s" % e, file=sys.stderr)
        return EXIT_DEGENERATE
    except E.InestimableError as e:
        print("inestimable: %s" % e, file=sys.stderr)
        return EXIT_INESTIMABLE
    except E.NoRootError as e:
        print("inestimable (no root): %s" % e, file=sys.stderr)
        return EXIT_INESTIMABLE
    except ValueError as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
