"""Energy models with separate hardcore and smooth parts.

A model is described by two potentials, V1 on single elements (Delaunay
triangles or Voronoi cells) and V2 on pairs of neighbouring cells.  Each is
split into a hardcore verdict that depends on beta only and a smooth value
that depends on theta only, so the support of the energy never moves with
theta.

The built-in models are linear in theta (``h = theta * S``); the jitted
local kernels exploit that.  Any other :class:`EnergyModel` subclass still
works through global energy differences, just slower.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _local as L
from . import _mesh as K
from .geometry import Tessellation, build_tessellation, wrap_to_torus
from .mesh import DegeneracyError, PeriodicMesh, status_message

INF = math.inf


# ---------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class HardcoreParams:
    """beta.  ``None`` means the constraint is inactive."""

    eps: float = None
    alpha: float = None
    B: float = None
    angle: float = None

    @property
    def active(self):
        return any(v is not None for v in (self.eps, self.alpha, self.B, self.angle))

    def validate(self):
        e, a, b, g = self.eps, self.alpha, self.B, self.angle
        for name, v in (("eps", e), ("alpha", a), ("B", b), ("angle", g)):
            if v is not None and not (v > 0 or (name == "angle" and v == 0)):
                raise ValueError("%s must be positive, got %r" % (name, v))
        if e is not None and a is not None and not e < a:
            raise ValueError("requires ε < α (got ε=%g, α=%g)" % (e, a))
        if b is not None and not b > 1.0 / (2.0 * math.sqrt(3.0)):
            raise ValueError("requires B > 1/(2√3) (got B=%g)" % b)
        if g is not None and not 0.0 <= g < math.pi / 3:
            raise ValueError("requires 0 ≤ angle < π/3 (got %g)" % g)
        return self

    def vector(self, power=0.5, smooth=0.0):
        """Packed form for the kernels."""
        return np.array([
            -1.0 if self.eps is None else self.eps,
            INF if self.alpha is None else self.alpha,
            INF if self.B is None else self.B,
            -1.0 if self.angle is None else self.angle,
            power, smooth, 0.0, 0.0])

    def describe(self):
        out = {}
        for k in ("eps", "alpha", "B", "angle"):
            v = getattr(self, k)
            out[k] = "inactive" if v is None else v
        return out


NO_HARDCORE = HardcoreParams()


class Intensity:
    """Intensity measure nu: constant z, or the Model 1 density
    g(x, y) = c * ((x - 1/2)^2 + (y - 1/2)^2)^(-p), 1-periodic."""

    def __init__(self, z=None, kind="constant", c=100.0, p=0.75):
        if kind == "constant":
            if z is None or not z > 0 or not math.isfinite(z):
                raise ValueError("intensity z must be positive and finite")
        elif kind == "model1":
            if not c > 0 or not p > 0:
                raise ValueError("model1 density needs c > 0 and p > 0")
        else:
            raise ValueError("unknown intensity kind %r" % kind)
        self.kind = kind
        self.z = None if z is None else float(z)
        self.c = float(c)
        self.p = float(p)

    @classmethod
    def constant(cls, z):
        return cls(z=z)

    @classmethod
    def model1(cls, c=100.0, p=0.75):
        return cls(kind="model1", c=c, p=p)

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def code(self):
        return 0 if self.is_constant else 1

    def params(self):
        if self.is_constant:
            return np.array([self.z, 0.0])
        return np.array([self.c, self.p])

    def __call__(self, x, y=None):
        if y is None:
            q = np.asarray(x, dtype=float)
            x, y = q[..., 0], q[..., 1]
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.full(np.shape(x), self.z)
        y = np.asarray(y, dtype=float)
        dx = x - np.floor(x) - 0.5
        dy = y - np.floor(y) - 0.5
        with np.errstate(divide="ignore"):
            return self.c * (dx * dx + dy * dy) ** (-self.p)

    def total_mass(self):
        """Integral over the unit square (used for null-model sampling)."""
        if self.is_constant:
            return self.z
        if self.p >= 1.0:
            return INF
        from scipy import integrate

        f = lambda y, x: self.c * ((x - 0.5) ** 2 + (y - 0.5) ** 2) ** (-self.p)
        # integrate over four quadrants around the singularity
        v, _ = integrate.dblquad(f, 0.5, 1.0, 0.5, 1.0)
        return 4.0 * v

    def __repr__(self):
        if self.is_constant:
            return "Intensity(z=%g)" % self.z
        return "Intensity(model1, c=%g, p=%g)" % (self.c, self.p)


# ---------------------------------------------------------------------------
# models

class EnergyModel:
    """Base class.  Subclasses say which structure they live on and supply
    vectorised potentials over per-element statistics.

    ``hardcore_v1(stats, beta)`` returns a boolean array (True = forbidden),
    ``smooth_v1(stats, theta)`` the finite values; the same for V2 with the
    statistics of the two cells of each pair.
    """

    kind = "delaunay"          # or "voronoi"
    name = "custom"
    code = None                # kernel kind, None when only global evaluation works
    linear = False             # smooth part equal to theta * statistic

    def hardcore_v1(self, stats, beta):
        return np.zeros(len(next(iter(stats.values()))), dtype=bool)

    def smooth_v1(self, stats, theta):
        return np.zeros(len(next(iter(stats.values()))))

    def hardcore_v2(self, s1, s2, beta):
        return np.zeros(len(next(iter(s1.values()))), dtype=bool)

    def smooth_v2(self, s1, s2, theta):
        return np.zeros(len(next(iter(s1.values()))))

    def validate(self, beta):
        beta.validate()
        return beta

    def kernel_params(self, beta):
        return beta.vector()

    def __repr__(self):
        return "%s()" % type(self).__name__


class NullModel(EnergyModel):
    """V1 = V2 = 0: the Poisson process."""

    name = "null"
    code = L.KIND_NULL
    linear = True

    def validate(self, beta):
        if beta.active:
            raise ValueError("the null model has no hardcore parameters")
        return beta


class Model1(EnergyModel):
    """Triangles with a minimal angle; no smooth interaction."""

    name = "model1"
    code = L.KIND_DELAUNAY
    linear = True

    def hardcore_v1(self, stats, beta):
        out = np.zeros(len(stats["min_angle"]), dtype=bool)
        if beta.angle is not None:
            out |= stats["min_angle"] <= beta.angle
        return out

    def validate(self, beta):
        beta.validate()
        if any(v is not None for v in (beta.eps, beta.alpha, beta.B)):
            raise ValueError("model1 only takes the angle constraint")
        return beta

    def kernel_params(self, beta):
        return beta.vector(smooth=0.0)


class Model2(EnergyModel):
    """Delaunay triangles with edge/circumradius bounds, theta * perimeter."""

    name = "model2"
    code = L.KIND_DELAUNAY
    linear = True

    def hardcore_v1(self, stats, beta):
        out = np.zeros(len(stats["perimeter"]), dtype=bool)
        if beta.eps is not None:
            out |= stats["min_edge"] <= beta.eps
        if beta.alpha is not None:
            out |= stats["circumradius"] >= beta.alpha
        return out

    def smooth_v1(self, stats, theta):
        return theta * stats["perimeter"]

    def validate(self, beta):
        beta.validate()
        if beta.B is not None or beta.angle is not None:
            raise ValueError("model2 only takes eps and alpha")
        return beta

    def kernel_params(self, beta):
        return beta.vector(smooth=1.0)


class Model3(EnergyModel):
    """Voronoi cells with h_min/h_max/flatness bounds and a volume-ratio
    pair potential theta * (max/min - 1)^power."""

    kind = "voronoi"
    name = "model3"
    code = L.KIND_VORONOI
    linear = True

    def __init__(self, power=0.5):
        if not power > 0:
            raise ValueError("power must be positive")
        self.power = float(power)

    def hardcore_v1(self, stats, beta):
        out = np.zeros(len(stats["volume"]), dtype=bool)
        if beta.eps is not None:
            out |= stats["h_min"] <= beta.eps
        if beta.alpha is not None:
            out |= stats["h_max"] >= beta.alpha
        if beta.B is not None:
            out |= stats["h_max"] ** 2 >= beta.B * stats["volume"]
        return out

    def smooth_v2(self, s1, s2, theta):
        return theta * volume_ratio_potential(s1["volume"], s2["volume"], self.power)

    def validate(self, beta):
        beta.validate()
        if beta.angle is not None:
            raise ValueError("model3 does not take an angle constraint")
        return beta

    def kernel_params(self, beta):
        return beta.vector(power=self.power)

    def __repr__(self):
        return "Model3(power=%g)" % self.power


def volume_ratio_potential(v1, v2, power=0.5):
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    r = np.maximum(v1, v2) / np.minimum(v1, v2) - 1.0
    return np.where(v1 == v2, 0.0, np.abs(r) ** power)


MODELS = {"null": NullModel, "model1": Model1, "model2": Model2, "model3": Model3}


def get_model(name, **kwargs):
    try:
        return MODELS[name](**kwargs)
    except KeyError:
        raise ValueError("unknown model %r (choose from %s)"
                         % (name, ", ".join(sorted(MODELS)))) from None


# ---------------------------------------------------------------------------
# energies

@dataclass
class Violation:
    element: str               # "triangle", "cell" or "pair"
    index: tuple               # vertex ids / cell id / pair of ids
    constraint: str

    def __str__(self):
        return "%s %s violates %s" % (self.element, self.index, self.constraint)


@dataclass
class EnergyValue:
    value: float
    violation: Violation = None
    violations: list = field(default_factory=list)

    @property
    def finite(self):
        return self.violation is None

    def __float__(self):
        return float(self.value)


def _as_tess(config):
    if isinstance(config, Tessellation):
        return config
    return build_tessellation(config)


def _tri_order(tess):
    keys = np.sort(tess.ids[tess.tri_vertices], axis=1)
    return np.lexsort(keys.T[::-1])


def _constraint_names(model, stats, beta, idx):
    names = []
    probe = {k: v[idx:idx + 1] for k, v in stats.items()}
    for field_name in ("eps", "alpha", "B", "angle"):
        v = getattr(beta, field_name)
        if v is None:
            continue
        only = HardcoreParams(**{field_name: v})
        if model.hardcore_v1(probe, only)[0]:
            names.append(_CONSTRAINT_TEXT[model.kind][field_name])
    return ", ".join(names) or "hardcore"


_CONSTRAINT_TEXT = {
    "delaunay": {"eps": "l(T) <= eps", "alpha": "R(T) >= alpha",
                 "B": "B", "angle": "minangle(T) <= angle"},
    "voronoi": {"eps": "h_min <= eps", "alpha": "h_max >= alpha",
                "B": "h_max^2 >= B*Vol", "angle": "angle"},
}


def element_stats(tess, model):
    if model.kind == "delaunay":
        return {"min_edge": tess.min_edge, "circumradius": tess.circumradius,
                "min_angle": tess.min_angle, "perimeter": tess.perimeter}
    cs = tess.cell_stats()
    return {"h_min": cs[:, 0], "h_max": cs[:, 1], "volume": cs[:, 2]}


def periodic_energy(config, model, beta, theta, full_report=False):
    """Energy of a periodic configuration (points, PointConfiguration or
    Tessellation), with +inf and a violation report when a hardcore
    constraint fails."""
    tess = _as_tess(config)
    stats = element_stats(tess, model)
    bad = model.hardcore_v1(stats, beta)
    if model.kind == "delaunay":
        order = _tri_order(tess)
        labels = [tuple(int(i) for i in tess.ids[v]) for v in tess.tri_vertices]
        element = "triangle"
    else:
        order = np.argsort(tess.ids)
        labels = [int(i) for i in tess.ids]
        element = "cell"
    violations = []
    for i in order:
        if bad[i]:
            violations.append(Violation(element, labels[i],
                                        _constraint_names(model, stats, beta, i)))
            if not full_report:
                break
    total = float(np.sum(model.smooth_v1(stats, theta)))
    if model.kind == "voronoi":
        e = tess.edges
        s1 = {k: v[e[:, 0]] for k, v in stats.items()}
        s2 = {k: v[e[:, 1]] for k, v in stats.items()}
        pb = model.hardcore_v2(s1, s2, beta)
        for k in np.where(pb)[0]:
            violations.append(Violation("pair", (int(tess.ids[e[k, 0]]), int(tess.ids[e[k, 1]])),
                                        "V2 hardcore"))
            if not full_report:
                break
        total += float(np.sum(model.smooth_v2(s1, s2, theta)))
    if violations:
        return EnergyValue(INF, violations[0], violations)
    return EnergyValue(total)


def energy_statistic(config, model, beta):
    """(finite, S) with periodic energy theta * S for linear models."""
    e = periodic_energy(config, model, beta, 1.0)
    return e.finite, (e.value if e.finite else INF)


# ---------------------------------------------------------------------------
# local energies

class LocalEvaluator:
    """Local energies against one fixed configuration.

    Built once per configuration; answers many insertion queries
    h(x, gamma) and removal queries h(x, gamma - x) without rebuilding the
    tessellation.  All values are reported as the smooth statistic S
    (h = theta * S) together with an allowed flag, which is what estimation
    and residuals need.
    """

    def __init__(self, points, model, beta):
        self.model = model
        self.beta = model.validate(beta)
        self.points = wrap_to_torus(np.asarray(points, dtype=float).reshape(-1, 2))
        self.mesh = PeriodicMesh.from_points(self.points)
        self.par = model.kernel_params(beta) if model.code is not None else None
        self._spare = None

    def _spare_id(self):
        if self._spare is None:
            self.mesh.reserve(1)
            self._spare = int(K.new_point_id(self.mesh.M))
        return self._spare

    def birth(self, xy):
        """Allowed flags and S-changes for inserting each location."""
        xy = wrap_to_torus(np.asarray(xy, dtype=float).reshape(-1, 2))
        if self.model.code is None:
            return self._birth_global(xy)
        st, forb, dS = L.birth_profile(self.mesh.M, self.model.code, self.par,
                                       self._spare_id(), xy[:, 0].copy(), xy[:, 1].copy())
        allowed = (st == K.OK) & ~forb
        # locations the local path cannot handle (sparse wraps) go global
        for i in np.where((st != K.OK) & (st != K.ERR_DUP))[0]:
            a, s = self._birth_global(xy[i:i + 1])
            allowed[i], dS[i] = a[0], s[0]
        dS = np.where(allowed, dS, np.nan)
        return allowed, dS

    def death(self, index=None):
        """Removable flags and S(gamma) - S(gamma - x) per point index."""
        n = len(self.points)
        idx = np.arange(n) if index is None else np.atleast_1d(np.asarray(index, dtype=np.int64))
        if self.model.code is None:
            return self._death_global(idx)
        st, forb, hS = L.death_profile(self.mesh.M, self.model.code, self.par, idx)
        ok = st == K.OK
        if np.any((st != K.OK) & (st != K.ERR_WRAP)):
            bad = int(st[(st != K.OK) & (st != K.ERR_WRAP)][0])
            raise DegeneracyError(status_message(bad))
        removable = ok & ~forb
        for i in np.where(~ok)[0]:
            r, s = self._death_global(idx[i:i + 1])
            removable[i], hS[i] = r[0], s[0]
        hS = np.where(removable, hS, np.nan)
        return removable, hS

    # slow paths ------------------------------------------------------------
    def _global(self, pts):
        try:
            e = periodic_energy(pts, self.model, self.beta, 1.0)
        except DegeneracyError:
            return False, np.nan
        return e.finite, e.value

    def _base(self):
        if not hasattr(self, "_base_val"):
            ok, s = self._global(self.points)
            if not ok:
                raise ValueError("reference configuration is forbidden")
            self._base_val = s
        return self._base_val

    def _birth_global(self, xy):
        base = self._base()
        allowed = np.zeros(len(xy), dtype=bool)
        dS = np.full(len(xy), np.nan)
        for i, p in enumerate(xy):
            ok, s = self._global(np.vstack([self.points, p]))
            if ok:
                allowed[i], dS[i] = True, s - base
        return allowed, dS

    def _death_global(self, idx):
        base = self._base()
        removable = np.zeros(len(idx), dtype=bool)
        hS = np.full(len(idx), np.nan)
        for k, i in enumerate(idx):
            if len(self.points) <= 4:
                continue
            ok, s = self._global(np.delete(self.points, i, axis=0))
            if ok:
                removable[k], hS[k] = True, base - s
        return removable, hS


def _theta_scale(model, theta, stat):
    if not model.linear:
        raise TypeError("non-linear model: use global differences")
    return theta * stat


def local_energy(x, config, model, beta, theta):
    """h(x, gamma) = E(gamma + x) - E(gamma) for a new location x."""
    pts = _points_of(config)
    xq = wrap_to_torus(np.asarray(x, dtype=float).reshape(2))
    if np.any(np.all(pts == xq, axis=1)):
        raise DegeneracyError("duplicate point (%r, %r)" % tuple(xq))
    if model.code is None or not model.linear:
        e0 = periodic_energy(pts, model, beta, theta)
        e1 = periodic_energy(np.vstack([pts, xq]), model, beta, theta)
        return _difference(e1, e0)
    ev = LocalEvaluator(pts, model, beta)
    allowed, dS = ev.birth(xq[None, :])
    if not allowed[0]:
        full = periodic_energy(np.vstack([pts, xq]), model, beta, theta)
        return EnergyValue(INF, full.violation, full.violations)
    return EnergyValue(_theta_scale(model, theta, dS[0]))


def removal_energy(index, config, model, beta, theta):
    """h(x, gamma - x) = E(gamma) - E(gamma - x) for the point at ``index``."""
    pts = _points_of(config)
    if not 0 <= index < len(pts):
        raise IndexError("point index %d out of range" % index)
    if model.code is None or not model.linear:
        e0 = periodic_energy(pts, model, beta, theta)
        e1 = periodic_energy(np.delete(pts, index, axis=0), model, beta, theta)
        return _difference(e0, e1)
    ev = LocalEvaluator(pts, model, beta)
    rem, hS = ev.death(index)
    if not rem[0]:
        full = periodic_energy(np.delete(pts, index, axis=0), model, beta, theta)
        return EnergyValue(INF, full.violation, full.violations)
    return EnergyValue(_theta_scale(model, theta, hS[0]))


def _difference(e1, e0):
    if not e1.finite:
        return EnergyValue(INF, e1.violation, e1.violations)
    if not e0.finite:
        raise ValueError("reference configuration is forbidden")
    return EnergyValue(e1.value - e0.value)


def _points_of(config):
    if isinstance(config, Tessellation):
        return config.points
    if hasattr(config, "points") and not isinstance(config, np.ndarray):
        return np.asarray(config.points)
    return wrap_to_torus(np.asarray(config, dtype=float).reshape(-1, 2))


def is_removable(index, config, model, beta):
    """True when deleting point ``index`` leaves the configuration allowed."""
    pts = _points_of(config)
    if not 0 <= index < len(pts):
        raise IndexError("point index %d out of range" % index)
    if not beta.active:
        return True
    return bool(removable_mask(pts, model, beta, [index])[0])


def removable_mask(config, model, beta, index=None):
    pts = _points_of(config)
    n = len(pts)
    idx = np.arange(n) if index is None else np.asarray(index)
    if not beta.active:
        return np.ones(len(idx), dtype=bool)
    if model.code is None:
        ev = LocalEvaluator(pts, model, beta)
        return ev.death(idx)[0]
    # removability only depends on beta: evaluate with the hardcore alone
    ev = LocalEvaluator(pts, model, beta)
    return ev.death(idx)[0]


def removable_set(config, model, beta):
    """Indices of the removable points."""
    return np.where(removable_mask(config, model, beta))[0]


def with_beta(beta, **changes):
    return replace(beta, **changes)
