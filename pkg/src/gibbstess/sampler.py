"""Birth-death-move Metropolis-Hastings sampler for periodic Gibbs
tessellations."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _chain as C
from . import _mesh as K
from .energy import Intensity, NullModel, element_stats, periodic_energy
from .geometry import triangle_stats
from .mesh import DegeneracyError, PeriodicMesh, status_message, triangular_lattice

MIN_POPULATION = 4
DEFAULT_ITERS = {"null": 200000, "model1": 500000, "model2": 200000, "model3": 200000}
RESYNC_RTOL = 1e-6


class InfeasibleStart(ValueError):
    """No lattice satisfies the hardcore constraints."""


@dataclass
class ProposalParams:
    sigma: float = 0.015
    p_birth: float = 1.0 / 3.0
    p_death: float = 1.0 / 3.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not (self.p_birth > 0 and self.p_death > 0
                and self.p_birth + self.p_death <= 1.0 + 1e-12):
            raise ValueError("need p_birth, p_death > 0 and p_birth + p_death <= 1")


@dataclass
class MonitoringRecord:
    block: int
    births: int
    deaths: int
    moves: int
    total: int


@dataclass
class MonitoringTrace:
    records: list = field(default_factory=list)
    geometry_rejections: int = 0

    def __len__(self):
        return len(self.records)

    def as_array(self):
        return np.array([[r.block, r.births, r.deaths, r.moves, r.total]
                         for r in self.records], dtype=np.int64).reshape(-1, 5)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["block", "births", "deaths", "moves", "total"])
            for r in self.records:
                w.writerow([r.block, r.births, r.deaths, r.moves, r.total])


# ---------------------------------------------------------------------------
# initial lattice

def _lattice_rows(k):
    m = int(round(2.0 * k / math.sqrt(3.0)))
    if m % 2:
        m += 1
    return max(m, 2)


def _lattice_stats(k):
    """Element statistics of the k-column lattice without building it.

    All triangles are congruent and all cells are translates of one hexagon.
    """
    m = _lattice_rows(k)
    dx, dy = 1.0 / k, 1.0 / m
    tri = np.array([[[0.0, 0.0], [dx, 0.0], [dx / 2, dy]]])
    ts = triangle_stats(tri)
    nb = np.array([[dx, 0], [dx / 2, dy], [-dx / 2, dy], [-dx, 0],
                   [-dx / 2, -dy], [dx / 2, -dy]])
    poly = []
    for i in range(6):
        a, b = nb[i], nb[(i + 1) % 6]
        poly.append(K.circumcenter(0.0, 0.0, a[0], a[1], b[0], b[1]))
    from .geometry import cell_stats

    h0, h1, vol = cell_stats(np.array(poly), (0.0, 0.0))
    cs = {"h_min": np.array([h0]), "h_max": np.array([h1]), "volume": np.array([vol])}
    return ts, cs


def initial_lattice(model, beta, target_count=100, kmax=2000):
    """Near-equilateral lattice with about ``target_count`` points that is
    allowed under (model, beta)."""
    model.validate(beta)
    k0 = int(round(math.sqrt(max(target_count, 4) * math.sqrt(3.0) / 2.0)))
    k0 = min(max(k0, 2), kmax)
    order = [k0]
    for d in range(1, kmax):
        for k in (k0 - d, k0 + d):
            if 2 <= k <= kmax:
                order.append(k)
    for k in order:
        ts, cs = _lattice_stats(k)
        stats = ts if model.kind == "delaunay" else cs
        if np.any(model.hardcore_v1(stats, beta)):
            continue
        pts, _, _ = triangular_lattice(k, _lattice_rows(k))
        if len(pts) < MIN_POPULATION:
            continue
        if periodic_energy(pts, model, beta, 0.0).finite:
            return pts
    raise InfeasibleStart("no lattice with 2 <= k <= %d columns satisfies %r"
                          % (kmax, beta.describe()))


# ---------------------------------------------------------------------------
# chain

class ChainState:
    """Current configuration, cached smooth statistic and RNG."""

    def __init__(self, points, model, beta, theta, intensity, proposal=None,
                 seed=None):
        self.model = model
        self.beta = model.validate(beta)
        self.theta = float(theta)
        self.intensity = intensity
        self.proposal = proposal or ProposalParams()
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.iteration = 0
        self.null = isinstance(model, NullModel)
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.null:
            self._P = np.zeros((max(2 * len(pts), 64), 2))
            self._P[:len(pts)] = pts
            self._n = np.array([len(pts)], dtype=np.int64)
            self.S = 0.0
        else:
            e = periodic_energy(pts, model, beta, 1.0)
            if not e.finite:
                raise ValueError("initial configuration is forbidden: %s" % e.violation)
            self.mesh = PeriodicMesh.from_points(pts, capacity=2 * len(pts))
            self.S = e.value
            self.par = model.kernel_params(beta)
            self.gpar = intensity.params()

    @property
    def n(self):
        return int(self._n[0]) if self.null else self.mesh.n

    @property
    def points(self):
        if self.null:
            return self._P[:self._n[0]].copy()
        return self.mesh.points()

    def draw(self, steps):
        R = np.empty((steps, 6))
        R[:, :4] = self.rng.random((steps, 4))
        R[:, 4:] = self.rng.standard_normal((steps, 2))
        return R

    def advance(self, R):
        """Apply the steps in R; returns the per-type acceptance counts."""
        counts = np.zeros(4, dtype=np.int64)
        prop = self.proposal
        g = self.intensity
        if self.null:
            need = self._n[0] + len(R) + 1
            if need > self._P.shape[0]:
                P = np.zeros((2 * need, 2))
                P[:self._n[0]] = self._P[:self._n[0]]
                self._P = P
            st = C.run_block_null(self._P, self._n, g.code, g.params(), prop.sigma,
                                  prop.p_birth, prop.p_death, R, counts,
                                  MIN_POPULATION)
        else:
            self.mesh.reserve(len(R))
            acc = np.zeros(1)
            st = C.run_block(self.mesh.M, self.model.code, self.par, self.theta,
                             g.code, self.gpar, prop.sigma, prop.p_birth,
                             prop.p_death, R, counts, MIN_POPULATION, acc)
            self.S += acc[0]
        if st != K.OK:
            raise DegeneracyError("chain stopped: %s" % status_message(st))
        self.iteration += len(R)
        return counts

    def resync(self):
        """Recompute the energy from scratch and check the cached value."""
        if self.null:
            return 0.0
        e = periodic_energy(self.points, self.model, self.beta, 1.0)
        if not e.finite:
            raise AssertionError("hardcore violated at iteration %d: %s"
                                 % (self.iteration, e.violation))
        drift = abs(e.value - self.S)
        if drift > RESYNC_RTOL * max(1.0, abs(e.value)):
            raise AssertionError("cached energy drifted by %g at iteration %d"
                                 % (drift, self.iteration))
        self.S = e.value
        return drift


def bdm_step(state):
    """One birth, death or move proposal; returns the step type accepted
    ('birth', 'death', 'move') or None."""
    c = state.advance(state.draw(1))
    for name, i in (("birth", C.C_BIRTH), ("death", C.C_DEATH), ("move", C.C_MOVE)):
        if c[i]:
            return name
    return None


@dataclass
class SimulationResult:
    points: np.ndarray
    trace: MonitoringTrace
    state: ChainState


def default_iterations(model):
    return DEFAULT_ITERS.get(model.name, 200000)


def default_target(intensity):
    if intensity.is_constant:
        return intensity.z
    return 200


def run(model, beta, theta, intensity, n_iters=None, proposal=None,
        monitor_every=1000, seed=None, initial=None, target_count=None,
        trace_path=None, check=True):
    """Run a chain from a lattice (or ``initial``) for ``n_iters`` steps.

    One monitoring record is kept per full block of ``monitor_every``
    steps; when ``trace_path`` is given, records are appended to that CSV
    as they are produced.  With ``check`` the cached energy is compared to
    a full recomputation after every block.
    """
    if not isinstance(intensity, Intensity):
        intensity = Intensity.constant(intensity)
    if n_iters is None:
        n_iters = default_iterations(model)
    if n_iters < 0:
        raise ValueError("n_iters must be >= 0")
    if monitor_every < 1:
        raise ValueError("monitor_every must be >= 1")
    if initial is None:
        initial = initial_lattice(model, beta, target_count or default_target(intensity))
    state = ChainState(initial, model, beta, theta, intensity, proposal, seed)
    trace = MonitoringTrace()
    fh = None
    if trace_path is not None:
        fh = open(trace_path, "w", newline="")
        fh.write("block,births,deaths,moves,total\n")
    try:
        done = 0
        block = 0
        while done < n_iters:
            steps = min(monitor_every, n_iters - done)
            counts = state.advance(state.draw(steps))
            trace.geometry_rejections += int(counts[C.C_GEOM])
            done += steps
            if check:
                state.resync()
            if steps == monitor_every:
                rec = MonitoringRecord(block, int(counts[0]), int(counts[1]),
                                       int(counts[2]), state.n)
                trace.records.append(rec)
                if fh is not None:
                    fh.write("%d,%d,%d,%d,%d\n" % (rec.block, rec.births, rec.deaths,
                                                   rec.moves, rec.total))
                    fh.flush()
                block += 1
    finally:
        if fh is not None:
            fh.close()
    return SimulationResult(state.points, trace, state)


def sample_poisson(intensity, rng):
    """Exact draw from the Poisson process with a constant intensity."""
    if not intensity.is_constant:
        raise ValueError("exact sampling only for constant intensity")
    n = rng.poisson(intensity.z)
    from .geometry import wrap_to_torus

    return wrap_to_torus(rng.random((n, 2)))


def birth_death_ratios(points, x, model, beta, theta, intensity):
    """Acceptance ratios of the birth of x in gamma and of its death from
    gamma + x (their product is 1 for allowed pairs)."""
    from .energy import local_energy, removal_energy
    from .geometry import wrap_to_torus

    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    h = local_energy(x, pts, model, beta, theta)
    if not h.finite:
        return 0.0, math.inf
    g = float(intensity(np.asarray(x)[None, :])[0])
    birth = math.exp(-h.value) * g / (n + 1)
    bigger = np.vstack([pts, wrap_to_torus(x)])
    h_rem = removal_energy(n, bigger, model, beta, theta)
    death = (n + 1) * math.exp(h_rem.value) / g
    return birth, death
