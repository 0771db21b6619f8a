"""Flat ``key = value`` run configuration with validation."""

import math
import warnings
from dataclasses import dataclass, field, fields, replace

from .external import UniformB, UniformE, ZeroPotential

SCENARIOS = ("free_top", "euler_top", "static_charge", "moving_spinning_charge",
             "uniform_B_trap", "transport_check")
TOP_SCENARIOS = ("free_top", "euler_top")
FIELD_SCENARIOS = ("static_charge", "moving_spinning_charge", "uniform_B_trap")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the 1-based source line or 0 for a default."""

    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class WrapWindowWarning(UserWarning):
    """Run is longer than the time for radiation to re-enter through the periodic faces."""


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "free_top"
    grid_n: int = 32
    box_length: float = 16.0
    sigma: float = 1.0
    dt: float = None
    cfl: float = 0.5
    T: float = 10.0
    external: object = ZeroPotential()
    q0: tuple = (0.0, 0.0, 0.0)
    qdot0: tuple = (0.0, 0.0, 0.0)
    omega0: tuple = (0.0, 0.0, 1.0)
    inertia: object = None
    sample_every: int = 1
    drift_tol: float = None
    dump_every: int = 0
    seed: int = 0
    neutralize_current: bool = True
    n_families: int = 20
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def is_top(self):
        return self.scenario in TOP_SCENARIOS

    @property
    def is_field(self):
        return self.scenario in FIELD_SCENARIOS

    @property
    def nsteps(self):
        return int(round(self.T / self.dt))


PRESETS = {
    "free_top": dict(dt=1e-3, T=10.0, omega0=(0.3, -0.5, 1.0), sample_every=100, drift_tol=1e-12),
    "euler_top": dict(dt=1e-3, T=100.0, inertia=((1.0, 0.0, 0.0), (0.0, 2.0, 0.0), (0.0, 0.0, 3.0)),
                      omega0=(5.0, 8.0, 3.0), sample_every=100, drift_tol=1e-8),
    "static_charge": dict(grid_n=32, box_length=16.0, T=2.0, omega0=(0.0, 0.0, 0.0),
                          sample_every=4, drift_tol=1e-2),
    "moving_spinning_charge": dict(grid_n=48, box_length=16.0, T=4.0, qdot0=(0.1, 0.0, 0.0),
                                   omega0=(0.0, 0.0, 1.0), sample_every=4, drift_tol=1e-2),
    "uniform_B_trap": dict(grid_n=48, box_length=16.0, T=4.0, qdot0=(0.1, 0.0, 0.0),
                           omega0=(0.6, 0.0, 0.8), external=UniformB((0.0, 0.0, 0.5)),
                           sample_every=4, drift_tol=1e-2),
    "transport_check": dict(n_families=20, drift_tol=1e-6),
}


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(text):
    return int(text, 10)


def _bool(text):
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected a boolean")


def _vec3(text):
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise ValueError("expected three numbers")
    return tuple(_float(p) for p in parts)


def _inertia(text):
    parts = text.replace(",", " ").split()
    if len(parts) == 1:
        return _float(parts[0])
    if len(parts) == 4 and parts[0] == "diag":
        d = [_float(p) for p in parts[1:]]
        return tuple(tuple(d[i] if i == j else 0.0 for j in range(3)) for i in range(3))
    if len(parts) == 9:
        v = [_float(p) for p in parts]
        return tuple(tuple(v[3 * i:3 * i + 3]) for i in range(3))
    raise ValueError("expected a scalar, 'diag a b c' or nine numbers")


def parse_external(text):
    """``none``, ``uniform_E ex ey ez`` or ``uniform_B bx by bz``."""
    parts = text.split(None, 1)
    if not parts:
        raise ValueError("empty external specification")
    kind = parts[0]
    if kind in ("none", "zero"):
        if len(parts) > 1:
            raise ValueError(f"'{kind}' takes no parameters")
        return ZeroPotential()
    if kind == "uniform_E":
        return UniformE(_vec3(parts[1] if len(parts) > 1 else ""))
    if kind == "uniform_B":
        return UniformB(_vec3(parts[1] if len(parts) > 1 else ""))
    raise ValueError(f"unknown external potential '{kind}'")


def _scenario(text):
    if text not in SCENARIOS:
        raise ValueError(f"unknown scenario '{text}' (choose from {', '.join(SCENARIOS)})")
    return text


PARSERS = {
    "scenario": _scenario,
    "grid_n": _int,
    "box_length": _float,
    "sigma": _float,
    "dt": _float,
    "cfl": _float,
    "T": _float,
    "external": parse_external,
    "q0": _vec3,
    "qdot0": _vec3,
    "omega0": _vec3,
    "inertia": _inertia,
    "sample_every": _int,
    "drift_tol": _float,
    "dump_every": _int,
    "seed": _int,
    "neutralize_current": _bool,
    "n_families": _int,
}


def parse_config(text):
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"unknown key '{key}'", lineno)
        if key in values:
            raise ConfigError(f"duplicate key '{key}'", lineno)
        try:
            values[key] = PARSERS[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for '{key}': {exc}", lineno) from None
        lines[key] = lineno
    scenario = values.get("scenario", RunConfig.scenario)
    merged = dict(PRESETS[scenario])
    merged.update(values)
    cfg = RunConfig(**merged, lines=lines)
    return validate(cfg)


def with_overrides(cfg, **kw):
    """Copy of ``cfg`` with fields replaced, re-validated."""
    return validate(replace(cfg, **kw))


def validate(cfg):
    """Fill derived defaults and check guards."""
    def fail(key, msg):
        raise ConfigError(msg, cfg.lines.get(key, 0))

    if cfg.grid_n < 16 or cfg.grid_n % 2:
        fail("grid_n", f"grid_n must be even and >= 16, got {cfg.grid_n}")
    for key in ("box_length", "sigma", "cfl", "T"):
        if not getattr(cfg, key) > 0:
            fail(key, f"{key} must be positive")
    if cfg.dt is not None and not cfg.dt > 0:
        fail("dt", "dt must be positive")
    if cfg.sample_every < 1:
        fail("sample_every", "sample_every must be >= 1")
    if cfg.dump_every < 0:
        fail("dump_every", "dump_every must be >= 0")
    if cfg.seed < 0:
        fail("seed", "seed must be non-negative")
    if cfg.n_families < 1:
        fail("n_families", "n_families must be >= 1")
    if cfg.drift_tol is not None and not cfg.drift_tol > 0:
        fail("drift_tol", "drift_tol must be positive")

    updates = {}
    if cfg.is_field:
        dx = cfg.box_length / cfg.grid_n
        if 12.0 * cfg.sigma > cfg.box_length:
            fail("box_length", f"box_length {cfg.box_length:g} cannot hold the particle support "
                               f"(needs >= 12 sigma = {12 * cfg.sigma:g})")
        dt = cfg.dt if cfg.dt is not None else cfg.cfl * dx
        if dt > cfg.cfl * dx * (1 + 1e-12):
            fail("dt", f"dt = {dt:g} violates the CFL limit {cfg.cfl * dx:g}")
        updates["dt"] = dt
        if cfg.inertia is not None:
            fail("inertia", "inertia is derived from the profile in field scenarios")
        window = 0.5 * (cfg.box_length - 12.0 * cfg.sigma)
        if cfg.T > window:
            warnings.warn(f"T = {cfg.T:g} exceeds the wrap window {window:g}; periodic images "
                          "may affect whole-space invariants", WrapWindowWarning, stacklevel=3)
    elif cfg.is_top:
        if cfg.dt is None:
            updates["dt"] = 1e-3
        if cfg.scenario == "free_top" and cfg.inertia is not None:
            fail("inertia", "free_top uses the inertia of the profile")
        if cfg.scenario == "euler_top" and cfg.inertia is None:
            fail("inertia", "euler_top needs an inertia")
    if cfg.drift_tol is None:
        updates["drift_tol"] = 1e-2
    if cfg.external is None:
        updates["external"] = ZeroPotential()
    if not cfg.is_field and not isinstance(cfg.external, ZeroPotential) and "external" in cfg.lines:
        fail("external", f"scenario '{cfg.scenario}' has no field coupling")
    cfg = replace(cfg, **updates)
    if cfg.dt is not None and cfg.scenario != "transport_check":
        steps = cfg.T / cfg.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            fail("T", f"T = {cfg.T:g} is not a whole number of steps of dt = {cfg.dt:g}")
    return cfg


def config_items(cfg):
    """Config as a JSON-friendly dict."""
    out = {}
    for f in fields(cfg):
        if f.name == "lines":
            continue
        v = getattr(cfg, f.name)
        if f.name == "external":
            v = describe_external(v)
        out[f.name] = v
    return out


def describe_external(pot):
    if isinstance(pot, UniformE):
        return "uniform_E " + " ".join(repr(x) for x in pot.E0)
    if isinstance(pot, UniformB):
        return "uniform_B " + " ".join(repr(x) for x in pot.B0)
    return "none"
