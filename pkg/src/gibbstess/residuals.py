"""Innovations, raw residual grids and bootstrap QQ diagnostics."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .energy import HardcoreParams, Intensity, LocalEvaluator, NullModel, get_model
from .estimation import FULL, Window, support_params
from .geometry import wrap_to_torus
from . import sampler

TEST_FUNCTIONS = ("raw", "inverse", "pearson")
DEFAULT_SIDE = 0.01
DEFAULT_MC_PER_SQUARE = 100
DEFAULT_BANDWIDTH = 0.02


@dataclass
class FittedModel:
    """Parameters plugged into the residuals (beta is used as given)."""

    model: object
    beta: HardcoreParams
    theta: float
    z: float
    window: Window = FULL

    @classmethod
    def from_fit(cls, fit, model=None):
        m = model or get_model(fit.model)
        theta = 0.0 if (fit.theta_hat is None or math.isnan(fit.theta_hat)) else fit.theta_hat
        return cls(m, support_params(fit.beta_hat), theta, fit.z_hat, fit.window)

    @property
    def h_scale(self):
        return 0.0 if isinstance(self.model, NullModel) else self.theta


def _psi_terms(psi, h_rem, h_mc, allowed):
    """(values summed over removable points, integrand on MC points)."""
    if psi == "raw":
        return np.ones_like(h_rem), np.where(allowed, np.exp(-h_mc), 0.0)
    if psi == "inverse":
        return np.exp(h_rem), allowed.astype(float)
    if psi == "pearson":
        return np.exp(h_rem / 2.0), np.where(allowed, np.exp(-h_mc / 2.0), 0.0)
    raise ValueError("unknown test function %r (choose from %s)" % (psi, ", ".join(TEST_FUNCTIONS)))


class _Data:
    """Removable points and their local energies for one configuration."""

    def __init__(self, points, fitted, window):
        self.points = wrap_to_torus(np.asarray(points, dtype=float).reshape(-1, 2))
        self.fitted = fitted
        self.ev = LocalEvaluator(self.points, fitted.model, fitted.beta)
        inside = np.where(window.contains(self.points))[0]
        rem, hs = self.ev.death(inside)
        self.rem_points = self.points[inside[rem]]
        self.h_rem = fitted.h_scale * np.where(rem, hs, 0.0)[rem]

    def mc(self, xy):
        allowed, s = self.ev.birth(xy)
        h = self.fitted.h_scale * np.where(allowed, s, 0.0)
        return allowed, h


def residual(box, points, fitted, psi="raw", mc_samples=10000, seed=None, window=None):
    """Residual on the box (x0, y0, x1, y1), which must lie in the window."""
    window = window or fitted.window
    box = Window(*box)
    if not (box.x0 >= window.x0 - 1e-12 and box.y0 >= window.y0 - 1e-12
            and box.x1 <= window.x1 + 1e-12 and box.y1 <= window.y1 + 1e-12):
        raise ValueError("region lies outside the observation window")
    data = _Data(points, fitted, window)
    rng = np.random.Generator(np.random.PCG64(seed))
    xy = box.uniform(mc_samples, rng)
    allowed, h = data.mc(xy)
    sel = box.contains(data.rem_points)
    s_terms, i_terms = _psi_terms(psi, data.h_rem[sel], h, allowed)
    return float(np.sum(s_terms) - fitted.z * box.area * np.mean(i_terms))


@dataclass
class ResidualGrid:
    side: float
    window: Window
    sums: np.ndarray          # (ny, nx) psi summed over removable points
    integrals: np.ndarray     # (ny, nx) Monte Carlo integrals
    fitted: FittedModel
    psi: str = "raw"

    @property
    def values(self):
        return self.sums - self.integrals

    @property
    def shape(self):
        return self.sums.shape

    def region(self, mask):
        """Residual of a union of squares given as a boolean (ny, nx) mask."""
        return float(np.sum(self.values[np.asarray(mask, dtype=bool)]))

    def total(self):
        return float(np.sum(self.values))

    def smoothed(self, bandwidth=DEFAULT_BANDWIDTH):
        return gaussian_filter(self.values, sigma=bandwidth / self.side, mode="constant")

    def write_csv(self, path):
        ny, nx = self.shape
        v = self.values
        with open(path, "w") as fh:
            fh.write("i,j,value\n")
            for i in range(nx):
                for j in range(ny):
                    fh.write("%d,%d,%.17g\n" % (i, j, v[j, i]))


def grid_shape(window, side):
    if not side > 0:
        raise ValueError("grid side must be positive")
    nx = int(math.floor((window.x1 - window.x0) / side + 1e-9))
    ny = int(math.floor((window.y1 - window.y0) / side + 1e-9))
    if nx < 1 or ny < 1:
        raise ValueError("grid side %g larger than the window" % side)
    return nx, ny


def residual_grid(points, fitted, side=DEFAULT_SIDE, mc_per_square=DEFAULT_MC_PER_SQUARE,
                  seed=None, window=None, psi="raw"):
    """Residuals on the squares of side ``side`` tiling the window from its
    lower-left corner.  Monte Carlo points are stratified: ``mc_per_square``
    uniform points in every square."""
    window = window or fitted.window
    nx, ny = grid_shape(window, side)
    if mc_per_square < 1:
        raise ValueError("mc_per_square must be >= 1")
    data = _Data(points, fitted, window)
    rng = np.random.Generator(np.random.PCG64(seed))
    m = int(mc_per_square)
    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    cx = window.x0 + side * ii.ravel()
    cy = window.y0 + side * jj.ravel()
    u = rng.random((nx * ny, m, 2)) * side
    xy = np.stack([cx[:, None] + u[:, :, 0], cy[:, None] + u[:, :, 1]], axis=-1)
    allowed, h = data.mc(xy.reshape(-1, 2))
    rp = data.rem_points
    gi = np.floor((rp[:, 0] - window.x0) / side).astype(np.int64)
    gj = np.floor((rp[:, 1] - window.y0) / side).astype(np.int64)
    keep = (gi >= 0) & (gi < nx) & (gj >= 0) & (gj < ny)
    s_terms, i_terms = _psi_terms(psi, data.h_rem, h, allowed)
    sums = np.zeros((ny, nx))
    np.add.at(sums, (gj[keep], gi[keep]), s_terms[keep])
    integrals = fitted.z * side * side * i_terms.reshape(ny, nx, m).mean(axis=2)
    return ResidualGrid(side, window, sums, integrals, fitted, psi)


# ---------------------------------------------------------------------------
# bootstrap QQ

@dataclass
class QQEnvelope:
    observed: np.ndarray      # sorted observed residuals
    boot: np.ndarray          # (n_boot, K) sorted bootstrap residuals
    level: float = 0.95

    @property
    def probs(self):
        k = self.observed.size
        return (np.arange(k) + 0.5) / k

    @property
    def mean(self):
        return self.boot.mean(axis=0)

    def band(self, boot=None):
        b = self.boot if boot is None else boot
        a = (1.0 - self.level) / 2.0
        return np.quantile(b, a, axis=0), np.quantile(b, 1.0 - a, axis=0)

    @property
    def lo(self):
        return self.band()[0]

    @property
    def hi(self):
        return self.band()[1]

    def outside(self, values=None, boot=None):
        v = self.observed if values is None else values
        lo, hi = self.band(boot)
        tol = 1e-9 * max(1.0, float(np.max(np.abs(self.boot))))
        return (v < lo - tol) | (v > hi + tol)

    @property
    def fraction_outside(self):
        return float(np.mean(self.outside()))

    def global_pvalue(self):
        """Monte Carlo p-value of the number of quantiles outside the band.

        Each bootstrap curve is scored against the band of the others, so
        the observed count is compared with its own null distribution.
        """
        t_obs = int(np.sum(self.outside()))
        nb = self.boot.shape[0]
        t = np.empty(nb, dtype=np.int64)
        for b in range(nb):
            rest = np.delete(self.boot, b, axis=0)
            t[b] = int(np.sum(self.outside(self.boot[b], rest)))
        return (1.0 + np.sum(t >= t_obs)) / (nb + 1.0)

    def write_csv(self, path):
        lo, hi = self.band()
        mean = self.mean
        with open(path, "w") as fh:
            fh.write("quantile,observed,bootMean,lo95,hi95\n")
            for p, o, m, a, b in zip(self.probs, self.observed, mean, lo, hi):
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n" % (p, o, m, a, b))


def simulate_fitted(fitted, iters=None, seed=None):
    """One dataset from the fitted model (exact draw for Poisson)."""
    if isinstance(fitted.model, NullModel):
        rng = np.random.Generator(np.random.PCG64(seed))
        return sampler.sample_poisson(Intensity.constant(fitted.z), rng)
    res = sampler.run(fitted.model, fitted.beta, fitted.theta, Intensity.constant(fitted.z),
                      n_iters=iters, seed=seed, check=False)
    return res.points


def qq_diagnostic(points, fitted, side=DEFAULT_SIDE, n_boot=100, iters_per_boot=None,
                  seed=None, mc_per_square=DEFAULT_MC_PER_SQUARE, window=None,
                  psi="raw", progress=None):
    if n_boot < 2:
        raise ValueError("n_boot must be >= 2")
    window = window or fitted.window
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    obs_seed, *children = ss.spawn(n_boot + 1)
    obs = residual_grid(points, fitted, side, mc_per_square, obs_seed, window, psi)
    boot = []
    for b, child in enumerate(children):
        sim_seed, mc_seed = child.spawn(2)
        pts = simulate_fitted(fitted, iters_per_boot, sim_seed)
        g = residual_grid(pts, fitted, side, mc_per_square, mc_seed, window, psi)
        boot.append(np.sort(g.values.ravel()))
        if progress is not None:
            progress(b + 1, n_boot)
    return QQEnvelope(np.sort(obs.values.ravel()), np.array(boot)), obs
