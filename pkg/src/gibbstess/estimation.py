"""Two-step estimation: extremal hardcore estimators, then
pseudo-likelihood for (z, theta) over the removable points."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .energy import HardcoreParams, LocalEvaluator, NullModel, element_stats
from .geometry import build_tessellation, wrap_to_torus

DEFAULT_MC = 10000
# Extremal estimates sit exactly on the boundary of the support; the
# constraint used afterwards is nudged by this relative amount so the
# observed configuration itself stays allowed.
SUPPORT_SLACK = 1e-9


class InestimableError(RuntimeError):
    """No removable point in the window: the smooth part cannot be fitted."""


class NoRootError(RuntimeError):
    """The score equation does not change sign in the search bracket."""


@dataclass(frozen=True)
class Window:
    """Axis-aligned sub-window [x0, x1) x [y0, y1) of the unit square."""

    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise ValueError("window must be a non-empty box inside the unit square")

    @classmethod
    def eroded(cls, width):
        if not 0.0 <= width < 0.5:
            raise ValueError("erosion width must be in [0, 0.5), got %g" % width)
        return cls(width, width, 1.0 - width, 1.0 - width)

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, xy):
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return ((xy[:, 0] >= self.x0) & (xy[:, 0] < self.x1)
                & (xy[:, 1] >= self.y0) & (xy[:, 1] < self.y1))

    def uniform(self, n, rng):
        u = rng.random((n, 2))
        return np.column_stack([self.x0 + u[:, 0] * (self.x1 - self.x0),
                                self.y0 + u[:, 1] * (self.y1 - self.y0)])


FULL = Window()

MODEL_FIELDS = {
    "null": (),
    "model1": ("angle",),
    "model2": ("eps", "alpha"),
    "model3": ("eps", "alpha", "B"),
}


def default_erosion(model, beta_hat):
    """2 alpha for Delaunay models, 4 alpha for Voronoi; 0 without alpha."""
    a = beta_hat.alpha
    if a is None:
        return 0.0
    w = (2.0 if model.kind == "delaunay" else 4.0) * a
    return min(w, 0.45)


# ---------------------------------------------------------------------------
# step 1

def estimate_hardcore(points, model, window=FULL, fields=None):
    """Extremal estimates of the hardcore parameters over the elements
    (triangle barycenters or cell centers) inside ``window``.

    ``fields`` restricts which parameters are estimated; the others stay
    inactive.  Returns the raw extremes as a :class:`HardcoreParams`.
    """
    if fields is None:
        fields = MODEL_FIELDS.get(model.name, ())
    tess = build_tessellation(points)
    stats = element_stats(tess, model)
    if model.kind == "delaunay":
        inside = window.contains(tess.tri_barycenters - np.floor(tess.tri_barycenters))
    else:
        inside = window.contains(tess.points)
    if not np.any(inside):
        raise ValueError("no interior cells in the window")
    est = {}
    if model.kind == "delaunay":
        if "eps" in fields:
            est["eps"] = float(stats["min_edge"][inside].min())
        if "alpha" in fields:
            est["alpha"] = float(stats["circumradius"][inside].max())
        if "angle" in fields:
            est["angle"] = float(stats["min_angle"][inside].min())
    else:
        if "eps" in fields:
            est["eps"] = float(stats["h_min"][inside].min())
        if "alpha" in fields:
            est["alpha"] = float(stats["h_max"][inside].max())
        if "B" in fields:
            ratio = stats["h_max"] ** 2 / stats["volume"]
            est["B"] = float(ratio[inside].max())
    return HardcoreParams(**est)


def support_params(beta_hat):
    """Constraint actually used for the data: just outside the extremes, so
    the observed configuration is allowed (the estimator is an infimum or
    supremum that is not attained)."""
    d = {}
    for k in ("eps", "angle"):
        v = getattr(beta_hat, k)
        if v is not None:
            d[k] = v * (1.0 - SUPPORT_SLACK)
    for k in ("alpha", "B"):
        v = getattr(beta_hat, k)
        if v is not None:
            d[k] = v * (1.0 + SUPPORT_SLACK)
    return HardcoreParams(**d)


# ---------------------------------------------------------------------------
# step 2

class PLLData:
    """Everything the pseudo-likelihood needs, computed once per fit.

    Monte Carlo locations are shared by every (z, theta) evaluation (common
    random numbers).  For linear models h(x, gamma) = theta * S(x), so only
    the S values are stored.
    """

    def __init__(self, points, model, beta, window=FULL, mc_samples=DEFAULT_MC,
                 seed=None, evaluator=None):
        if mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        self.model = model
        self.beta = beta
        self.window = window
        self.mc_samples = int(mc_samples)
        self.seed = seed
        pts = wrap_to_torus(np.asarray(points, dtype=float).reshape(-1, 2))
        self.points = pts
        ev = evaluator or LocalEvaluator(pts, model, beta)
        self.evaluator = ev
        rng = np.random.Generator(np.random.PCG64(seed))
        self.mc_points = window.uniform(self.mc_samples, rng)
        self.mc_allowed, s = ev.birth(self.mc_points)
        self.mc_S = np.where(self.mc_allowed, s, 0.0)
        inside = np.where(window.contains(pts))[0]
        rem, hs = ev.death(inside)
        self.removable_index = inside[rem]
        self.removable_S = hs[rem]
        self.area = window.area

    @property
    def n_removable(self):
        return len(self.removable_index)

    @property
    def identifiable(self):
        """False when the smooth statistic is identically zero."""
        return bool(np.any(self.mc_S != 0.0) or np.any(self.removable_S != 0.0))

    def _log_terms(self, theta):
        """log of the MC integrand e^{-theta S} on allowed points (or -inf)."""
        return np.where(self.mc_allowed, -theta * self.mc_S, -np.inf)

    def integral(self, theta):
        """Monte Carlo estimate of the integral of exp(-h) over the window."""
        lt = self._log_terms(theta)
        return self.area * float(np.mean(np.exp(lt)))

    def pll(self, z, theta):
        if not z > 0:
            raise ValueError("z must be positive")
        return (z * self.integral(theta)
                + float(np.sum(theta * self.removable_S)) - self.n_removable * math.log(z))

    def z_hat(self, theta):
        I = self.integral(theta)
        if I <= 0:
            return math.inf
        return self.n_removable / I

    def tilted_mean(self, theta):
        """E_theta[S] under weights exp(-theta S) on the allowed MC points."""
        lt = self._log_terms(theta)
        m = np.max(lt)
        if not np.isfinite(m):
            return math.nan
        w = np.exp(lt - m)
        return float(np.sum(w * self.mc_S) / np.sum(w))

    def score(self, theta, z=None):
        """Derivative of the PLL in theta, z profiled out (or fixed),
        scaled by a positive factor so it cannot overflow.  Decreasing."""
        rhs = float(np.sum(self.removable_S))
        if z is None:
            return self.n_removable * self.tilted_mean(theta) - rhs
        lt = self._log_terms(theta)
        m = np.max(lt)
        w = np.exp(lt - m)
        lhs = z * self.area * float(np.mean(w * self.mc_S))
        return lhs - rhs * math.exp(-m) if m < 700 else lhs

    def score_unscaled(self, theta, z=None):
        rhs = float(np.sum(self.removable_S))
        if z is None:
            return self.n_removable * self.tilted_mean(theta) - rhs
        lt = self._log_terms(theta)
        return z * self.area * float(np.mean(np.exp(lt) * self.mc_S)) - rhs


def find_root(f, lo=-10.0, hi=10.0, limit=1000.0, tol=1e-12):
    """Root of a decreasing function by bracketing and Brent's method.

    The bracket grows by a factor 2 on each side until it changes sign or
    exceeds ``limit``.
    """
    flo, fhi = f(lo), f(hi)
    tried = [(lo, flo), (hi, fhi)]
    while flo * fhi > 0:
        if max(abs(lo), abs(hi)) >= limit:
            raise NoRootError("score has no sign change on [%g, %g] (f=%g, %g)"
                              % (lo, hi, flo, fhi))
        lo, hi = max(lo * 2.0, -limit), min(hi * 2.0, limit)
        flo, fhi = f(lo), f(hi)
        tried.append((lo, flo))
        tried.append((hi, fhi))
    if flo == 0:
        return lo, (lo, hi)
    if fhi == 0:
        return hi, (lo, hi)
    root = brentq(f, lo, hi, xtol=tol, rtol=1e-12, maxiter=500)
    return root, (lo, hi)


@dataclass
class FitResult:
    model: str
    beta_hat: HardcoreParams
    theta_hat: float
    z_hat: float
    removable_count: int
    n_points: int
    mc_samples: int
    seed: object
    window: Window
    z_known: float = None
    pll_value: float = math.nan
    bracket: tuple = (math.nan, math.nan)
    score_at_root: float = math.nan
    extra: dict = field(default_factory=dict)

    def beta_used(self):
        return support_params(self.beta_hat)

    def to_text(self):
        b = self.beta_hat
        lines = [
            "model=%s" % self.model,
            "eps=%s" % _fmt(b.eps),
            "alpha=%s" % _fmt(b.alpha),
            "B=%s" % _fmt(b.B),
            "angle=%s" % _fmt(b.angle),
            "theta=%s" % _fmt(self.theta_hat),
            "z=%s" % _fmt(self.z_hat),
            "z_known=%s" % _fmt(self.z_known),
            "removable=%d" % self.removable_count,
            "n_points=%d" % self.n_points,
            "mc_samples=%d" % self.mc_samples,
            "seed=%s" % self.seed,
            "window=%r,%r,%r,%r" % (self.window.x0, self.window.y0,
                                    self.window.x1, self.window.y1),
            "pll=%s" % _fmt(self.pll_value),
            "bracket=%s,%s" % (_fmt(self.bracket[0]), _fmt(self.bracket[1])),
            "score_at_root=%s" % _fmt(self.score_at_root),
        ]
        for k, v in sorted(self.extra.items()):
            lines.append("%s=%s" % (k, v))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        d = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError("line %d: expected key=value" % lineno)
            k, v = line.split("=", 1)
            d[k.strip()] = v.strip()

        def num(key):
            v = d.get(key, "none")
            return None if v in ("none", "inactive", "") else float(v)

        beta = HardcoreParams(eps=num("eps"), alpha=num("alpha"), B=num("B"),
                              angle=num("angle"))
        w = [float(t) for t in d.get("window", "0,0,1,1").split(",")]
        br = d.get("bracket", "nan,nan").split(",")
        theta = num("theta")
        return cls(model=d["model"], beta_hat=beta,
                   theta_hat=math.nan if theta is None else theta,
                   z_hat=num("z"), removable_count=int(d.get("removable", 0)),
                   n_points=int(d.get("n_points", 0)),
                   mc_samples=int(d.get("mc_samples", DEFAULT_MC)),
                   seed=d.get("seed"), window=Window(*w), z_known=num("z_known"),
                   pll_value=num("pll") or math.nan,
                   bracket=tuple(float(t) if t != "none" else math.nan for t in br))


def _fmt(v):
    if v is None:
        return "none"
    return repr(float(v))


def estimate_smooth(data, z_known=None, tol=1e-12):
    """theta and z from a prepared :class:`PLLData`."""
    if data.n_removable == 0:
        raise InestimableError("no removable points in the window")
    if isinstance(data.model, NullModel) or not data.identifiable:
        z = z_known if z_known is not None else data.z_hat(0.0)
        return math.nan, z, math.nan, (math.nan, math.nan)
    f = (lambda t: data.score(t)) if z_known is None else (lambda t: data.score(t, z_known))
    theta, bracket = find_root(f, tol=tol)
    z = z_known if z_known is not None else data.z_hat(theta)
    return theta, z, data.score_unscaled(theta, z_known), bracket


def fit(points, model, z_known=None, mc_samples=DEFAULT_MC, seed=None,
        erosion=None, fields=None, beta=None):
    """Full two-step fit.

    ``erosion`` is the width removed on each side of the unit square
    (``None`` = model default, 0 = whole torus).  Passing ``beta`` skips the
    hardcore step (used when the hardcore part is known).
    """
    pts = wrap_to_torus(np.asarray(points, dtype=float).reshape(-1, 2))
    if beta is None:
        beta_hat = estimate_hardcore(pts, model, FULL, fields)
        beta_used = support_params(beta_hat)
    else:
        beta_hat = beta_used = beta
    width = default_erosion(model, beta_hat) if erosion is None else float(erosion)
    window = Window.eroded(width)
    data = PLLData(pts, model, beta_used, window, mc_samples, seed)
    theta, z, score, bracket = estimate_smooth(data, z_known)
    value = data.pll(z, 0.0 if math.isnan(theta) else theta)
    return FitResult(model=model.name, beta_hat=beta_hat, theta_hat=theta, z_hat=z,
                     removable_count=data.n_removable, n_points=len(pts),
                     mc_samples=data.mc_samples, seed=seed, window=window,
                     z_known=z_known, pll_value=value, bracket=bracket,
                     score_at_root=score)


def grid_search(data, thetas, z_grid):
    """Brute-force minimiser of the PLL over a (theta, z) grid."""
    I = np.array([data.integral(t) for t in thetas])
    sumS = float(np.sum(data.removable_S))
    N = data.n_removable
    z = np.asarray(z_grid, dtype=float)
    vals = (z[None, :] * I[:, None] + np.asarray(thetas)[:, None] * sumS
            - N * np.log(z)[None, :])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    return float(thetas[i]), float(z[j]), vals
