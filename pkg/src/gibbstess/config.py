"""Experiment configuration files (INI).

Example::

    [model]
    kind = model3
    alpha = 0.05
    B = 0.625
    theta = 0.5
    z = 100

Unknown sections or keys are errors; every error names the line.
"""

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

from .energy import HardcoreParams, Intensity, get_model
from .sampler import ProposalParams, default_iterations


class ConfigError(ValueError):
    pass


SCHEMA = {
    "model": {"kind", "eps", "alpha", "b", "angle", "theta", "z", "intensity",
              "c", "p", "power"},
    "sampler": {"iters", "sigma", "p_birth", "p_death", "seed", "monitor_every",
                "replications", "target"},
    "estimation": {"z_known", "mc_samples", "erosion", "fields"},
    "residuals": {"grid_side", "n_boot", "iters_per_boot", "mc_per_square",
                  "bandwidth", "b_inactive_above", "psi"},
}
NONE_WORDS = {"none", "inactive", "inf", "+inf", "auto", ""}


@dataclass
class ExperimentConfig:
    model_kind: str
    beta: HardcoreParams
    theta: float
    intensity: Intensity
    power: float = 0.5
    iters: int = None
    proposal: ProposalParams = field(default_factory=ProposalParams)
    seed: int = 1
    monitor_every: int = 1000
    replications: int = 1
    target: int = None
    z_known: float = None
    mc_samples: int = 10000
    erosion: float = None
    fields: tuple = None
    grid_side: float = 0.01
    n_boot: int = 100
    iters_per_boot: int = None
    mc_per_square: int = 100
    bandwidth: float = 0.02
    b_inactive_above: float = 50.0
    psi: str = "raw"
    source: str = ""

    @property
    def model(self):
        if self.model_kind == "model3":
            return get_model("model3", power=self.power)
        return get_model(self.model_kind)

    @property
    def n_iters(self):
        return self.iters if self.iters is not None else default_iterations(self.model)

    def digest(self):
        return hashlib.sha256(self.source.encode()).hexdigest()


def _line_numbers(text):
    """(section, key) -> line number, section -> line number."""
    out = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            out.setdefault(section, n)
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), n)
    return out


def parse_config_text(text, name="<config>"):
    if not text.strip():
        raise ConfigError("%s: empty configuration file" % name)
    lines = _line_numbers(text)
    cp = configparser.ConfigParser(strict=True, interpolation=None,
                                   inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=name)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("%s: line %d: key outside any section" % (name, e.lineno)) from None
    except configparser.DuplicateOptionError as e:
        raise ConfigError("%s: line %d: duplicate key %r in [%s]"
                          % (name, e.lineno, e.option, e.section)) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError("%s: line %d: duplicate section [%s]"
                          % (name, e.lineno, e.section)) from None
    except configparser.Error as e:
        raise ConfigError("%s: %s" % (name, e)) from None

    def where(sec, key=None):
        n = lines.get((sec, key) if key else sec)
        return "%s: line %s" % (name, n if n is not None else "?")

    for sec in cp.sections():
        if sec.lower() not in SCHEMA:
            raise ConfigError("%s: unknown section [%s]" % (where(sec.lower()), sec))
        for key in cp[sec]:
            if key not in SCHEMA[sec.lower()]:
                raise ConfigError("%s: unknown key %r in [%s]" % (where(sec.lower(), key), key, sec))
    if not cp.has_section("model"):
        raise ConfigError("%s: missing [model] section" % name)

    def get(sec, key, conv, default=None):
        if not cp.has_section(sec) or key not in cp[sec]:
            return default
        raw = cp[sec][key].strip()
        if raw.lower() in NONE_WORDS:
            return None
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError("%s: field %s.%s: cannot parse %r"
                              % (where(sec, key), sec, key, raw)) from None

    def number(s):
        v = float(s)
        if not math.isfinite(v):
            raise ValueError(s)
        return v

    def integer(s):
        v = float(s)
        if v != int(v):
            raise ValueError(s)
        return int(v)

    kind = get("model", "kind", str)
    if kind is None:
        raise ConfigError("%s: field model.kind is required" % where("model"))
    kind = kind.lower()
    try:
        model = get_model(kind)
    except (KeyError, ValueError):
        raise ConfigError("%s: field model.kind: unknown model %r"
                          % (where("model", "kind"), kind)) from None

    beta_kw = {k: get("model", k.lower(), number) for k in ("eps", "alpha", "B", "angle")}
    beta = HardcoreParams(**beta_kw)
    try:
        if kind == "model3":
            model = get_model("model3", power=get("model", "power", number, 0.5))
        model.validate(beta)
    except ValueError as e:
        msg = str(e)
        hints = {"eps": ("eps", "ε"), "b": ("B",), "angle": ("angle",), "alpha": ("alpha", "α")}
        present = [k for k in ("eps", "b", "angle", "alpha") if cp.has_option("model", k)]
        bad = [k for k in present if any(h in msg for h in hints[k])] or present
        at = where("model", bad[0]) if bad else where("model")
        raise ConfigError("%s: %s" % (at, e)) from None

    theta = get("model", "theta", number, 0.0)
    ikind = (get("model", "intensity", str, "constant") or "constant").lower()
    try:
        if ikind == "constant":
            z = get("model", "z", number)
            if z is None:
                raise ConfigError("%s: field model.z is required for a constant intensity"
                                  % where("model"))
            intensity = Intensity.constant(z)
        else:
            intensity = Intensity(kind=ikind, c=get("model", "c", number, 100.0),
                                  p=get("model", "p", number, 0.75))
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError("%s: %s" % (where("model", "intensity"), e)) from None

    try:
        proposal = ProposalParams(sigma=get("sampler", "sigma", number, 0.015),
                                  p_birth=get("sampler", "p_birth", number, 1.0 / 3.0),
                                  p_death=get("sampler", "p_death", number, 1.0 / 3.0))
    except ValueError as e:
        raise ConfigError("%s: %s" % (where("sampler"), e)) from None

    fields = get("estimation", "fields", lambda s: tuple(
        {"b": "B"}.get(t.strip().lower(), t.strip().lower()) for t in s.split(",") if t.strip()))

    cfg = ExperimentConfig(
        model_kind=kind, beta=beta, theta=theta, intensity=intensity,
        power=get("model", "power", number, 0.5),
        iters=get("sampler", "iters", integer), proposal=proposal,
        seed=get("sampler", "seed", integer, 1),
        monitor_every=get("sampler", "monitor_every", integer, 1000),
        replications=get("sampler", "replications", integer, 1),
        target=get("sampler", "target", integer),
        z_known=get("estimation", "z_known", number),
        mc_samples=get("estimation", "mc_samples", integer, 10000),
        erosion=get("estimation", "erosion", number),
        fields=fields,
        grid_side=get("residuals", "grid_side", number, 0.01),
        n_boot=get("residuals", "n_boot", integer, 100),
        iters_per_boot=get("residuals", "iters_per_boot", integer),
        mc_per_square=get("residuals", "mc_per_square", integer, 100),
        bandwidth=get("residuals", "bandwidth", number, 0.02),
        b_inactive_above=get("residuals", "b_inactive_above", number, 50.0),
        psi=get("residuals", "psi", str, "raw"),
        source=text,
    )
    checks = [
        ("sampler", "iters", cfg.iters is None or cfg.iters >= 0, "iters must be >= 0"),
        ("sampler", "monitor_every", cfg.monitor_every >= 1, "monitor_every must be >= 1"),
        ("sampler", "replications", cfg.replications >= 1, "replications must be >= 1"),
        ("estimation", "mc_samples", cfg.mc_samples >= 1, "mc_samples must be >= 1"),
        ("estimation", "z_known", cfg.z_known is None or cfg.z_known > 0, "z_known must be > 0"),
        ("estimation", "erosion", cfg.erosion is None or 0 <= cfg.erosion < 0.5,
         "erosion must be in [0, 0.5)"),
        ("residuals", "grid_side", 0 < cfg.grid_side <= 1, "grid_side must be in (0, 1]"),
        ("residuals", "n_boot", cfg.n_boot >= 2, "n_boot must be >= 2"),
        ("residuals", "mc_per_square", cfg.mc_per_square >= 1, "mc_per_square must be >= 1"),
        ("residuals", "bandwidth", cfg.bandwidth > 0, "bandwidth must be > 0"),
        ("residuals", "psi", cfg.psi in ("raw", "inverse", "pearson"),
         "psi must be raw, inverse or pearson"),
    ]
    for sec, key, ok, msg in checks:
        if not ok:
            raise ConfigError("%s: field %s.%s: %s" % (where(sec, key), sec, key, msg))
    if fields is not None:
        for f in fields:
            if f not in ("eps", "alpha", "B", "angle"):
                raise ConfigError("%s: field estimation.fields: unknown parameter %r"
                                  % (where("estimation", "fields"), f))
    return cfg


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("cannot read %s: %s" % (path, e.strerror)) from None
    return parse_config_text(text, str(path))


def describe(cfg):
    """Human-readable summary (inactive parameters spelled out)."""
    b = cfg.beta.describe()
    parts = ["model=%s" % cfg.model_kind]
    parts += ["%s=%s" % (k, v) for k, v in b.items()]
    parts.append("theta=%g" % cfg.theta)
    parts.append("intensity=%r" % cfg.intensity)
    return " ".join(parts)
