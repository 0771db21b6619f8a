"""Scenario execution, CSV rows and the run summary."""

import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import coupled, so3
from . import grid as gf
from .config import config_items
from .external import AXIS_NAMES, symmetry_report
from .poincare import so3_chart, transport_residual
from .rigid_body import BodySpec, ChargeProfile, integrate_top, top_symmetry_report

log = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "energy", "Px", "Py", "Pz", "Mx", "My", "Mz", "gauss_res", "divB_res",
               "ortho_res")
TRANSPORT_COLUMNS = ("family", "h", "residual")
TRANSPORT_STEPS = (1e-3, 1e-4)
DISCRIMINATION_FACTOR = 10.0
TINY = 1e-300


@dataclass
class RunSummary:
    scenario: str
    drifts: dict
    expected: list
    passed: dict
    wall_time: float
    discrimination: dict = field(default_factory=dict)
    aborted: bool = False
    last_good_t: float = None
    message: str = ""

    @property
    def ok(self):
        checks = list(self.passed.values())
        if self.discrimination:
            checks.append(self.discrimination["passed"])
        return not self.aborted and bool(checks) and all(checks)


def format_row(values):
    return ",".join(format(float(v), ".17g") for v in values) + "\n"


def record_row(rec):
    return (rec.t, rec.energy, *rec.P, *rec.M, rec.gauss_res, rec.divB_res, rec.ortho_res)


def _relative_drift(series, scale):
    """``max_t |x(t) - x(0)| / scale``."""
    series = np.asarray(series, dtype=float)
    return float(np.max(np.abs(series - series[0]))) / scale


def drift_table(rows):
    """Per-invariant relative drift from CSV rows.

    Energy is normalized by ``|E(0)|``; each momentum component by the norm
    of the whole vector at ``t = 0``, falling back to absolute drift when
    that vector vanishes. ``Mnorm`` is the drift of ``|M|``.
    """
    a = np.asarray(rows, dtype=float)
    E, P, M = a[:, 1], a[:, 2:5], a[:, 5:8]
    out = {"energy": _relative_drift(E, abs(E[0]) if E[0] else 1.0)}
    p0 = float(np.linalg.norm(P[0])) or 1.0
    m0 = float(np.linalg.norm(M[0])) or 1.0
    for k, name in enumerate(AXIS_NAMES):
        out[f"P{name}"] = _relative_drift(P[:, k], p0)
        out[f"M{name}"] = _relative_drift(M[:, k], m0)
    out["Mnorm"] = _relative_drift(np.linalg.norm(M, axis=1), m0)
    out["gauss_res_growth"] = float(np.max(a[:, 8]) - a[0, 8])
    out["divB_res_growth"] = float(np.max(a[:, 9]) - a[0, 9])
    out["ortho_res_max"] = float(np.max(a[:, 10]))
    return out


def absolute_changes(rows):
    """``max_t |x(t) - x(0)|`` for each momentum component."""
    a = np.asarray(rows, dtype=float)
    out = {}
    for k, name in enumerate(AXIS_NAMES):
        out[f"P{name}"] = float(np.max(np.abs(a[:, 2 + k] - a[0, 2 + k])))
        out[f"M{name}"] = float(np.max(np.abs(a[:, 5 + k] - a[0, 5 + k])))
    return out


def discrimination_check(report, rows, factor=DISCRIMINATION_FACTOR):
    """Largest change of a non-conserved ``M`` component against the conserved ones.

    Only defined when ``report`` splits the axes into conserved and broken
    sets; passes when the largest broken change exceeds ``factor`` times
    the largest conserved change.
    """
    conserved = sorted(report.conserved_M)
    broken = [k for k in range(3) if k not in report.conserved_M]
    if not conserved or not broken:
        return {}
    d = absolute_changes(rows)
    kept = max(d[f"M{AXIS_NAMES[k]}"] for k in conserved)
    lost = max(d[f"M{AXIS_NAMES[k]}"] for k in broken)
    return {
        "conserved": [f"M{AXIS_NAMES[k]}" for k in conserved],
        "broken": [f"M{AXIS_NAMES[k]}" for k in broken],
        "max_conserved_change": kept,
        "max_broken_change": lost,
        "factor": factor,
        "passed": bool(lost > factor * max(kept, TINY)),
    }


def _top_rows(cfg):
    profile = ChargeProfile(cfg.sigma)
    if cfg.scenario == "free_top":
        body = BodySpec(coupled.inertia_of(profile))
    else:
        body = BodySpec(np.asarray(cfg.inertia, dtype=float))
    J = body.matrix
    _, _, samples = integrate_top(body, np.eye(3), np.asarray(cfg.omega0, dtype=float), cfg.dt,
                                  cfg.nsteps, cfg.sample_every)
    rows = []
    for step, w, R in samples:
        m = J @ w
        rows.append((step * cfg.dt, 0.5 * float(w @ m), 0.0, 0.0, 0.0, *m, 0.0, 0.0,
                     so3.orthogonality_residual(R)))
    return rows, top_symmetry_report(body)


def _field_rows(cfg, out_dir, dump_every, on_row):
    profile = ChargeProfile(cfg.sigma)
    grid = gf.GridSpec(cfg.grid_n, cfg.box_length)
    pot = cfg.external
    state = coupled.initial_state(profile, grid, cfg.q0, cfg.qdot0, cfg.omega0)
    rows = []

    def sample(s):
        row = record_row(coupled.invariants(s, pot, profile, grid))
        rows.append(row)
        on_row(row)

    def dump(s, step):
        path = os.path.join(out_dir, f"fields_{step:06d}.bin")
        gf.write_field_dump(path, s.fields, grid, s.t)

    sample(state)
    if dump_every:
        dump(state, 0)
    error = None
    for step in range(1, cfg.nsteps + 1):
        try:
            state = coupled.rk4_step(state, pot, profile, grid, cfg.dt, cfg.cfl,
                                     cfg.neutralize_current)
        except FloatingPointError as exc:
            error = (str(exc), state.t)
            break
        if step % cfg.sample_every == 0 or step == cfg.nsteps:
            sample(state)
        if dump_every and (step % dump_every == 0 or step == cfg.nsteps):
            dump(state, step)
    return rows, symmetry_report(pot), error


def smooth_rotation_family(rng):
    """Random smooth two-parameter path ``(s, t) -> R`` in SO(3)."""
    a, b, c, d, e = rng.normal(size=(5, 3))
    R0 = so3.so3_exp(rng.normal(size=3))

    def family(s, t):
        return so3.so3_exp(a * t + b * s + c * s * t + 0.5 * d * t * t) @ so3.so3_exp(e * s * s) @ R0

    return family


def transport_sweep(n_families, seed, steps=TRANSPORT_STEPS):
    """Rows ``(family, h, residual)`` for random smooth families."""
    rng = np.random.default_rng(seed)
    frame = so3_chart()
    rows = []
    for i in range(n_families):
        fam = smooth_rotation_family(rng)
        for h in steps:
            rows.append((i, h, transport_residual(fam, frame, h)))
    return rows


def _transport_summary(rows, tol):
    by_h = {}
    for i, h, r in rows:
        by_h.setdefault(h, {})[i] = r
    coarse, fine = max(by_h), min(by_h)
    worst = max(by_h[fine].values())
    orders = [np.log(by_h[coarse][i] / by_h[fine][i]) / np.log(coarse / fine) for i in by_h[fine]]
    drifts = {"transport_residual": worst, "transport_order_min": float(min(orders))}
    passed = {"transport_residual": bool(worst < tol),
              "transport_order_min": bool(min(orders) >= 1.8)}
    return drifts, passed


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(format_row(row))


def run(cfg, out_dir, dump_every=None, seed=None):
    """Run ``cfg``, writing ``invariants.csv`` (or ``transport.csv``) and ``summary.json``."""
    os.makedirs(out_dir, exist_ok=True)
    dump_every = cfg.dump_every if dump_every is None else dump_every
    seed = cfg.seed if seed is None else seed
    start = time.perf_counter()
    error = None

    if cfg.scenario == "transport_check":
        rows = transport_sweep(cfg.n_families, seed)
        path = os.path.join(out_dir, "transport.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(TRANSPORT_COLUMNS) + "\n")
            for i, h, r in rows:
                fh.write(f"{i},{h:.17g},{r:.17g}\n")
        drifts, passed = _transport_summary(rows, cfg.drift_tol)
        summary = RunSummary(cfg.scenario, drifts, list(passed), passed,
                             time.perf_counter() - start)
    else:
        path = os.path.join(out_dir, "invariants.csv")
        if cfg.is_top:
            rows, report = _top_rows(cfg)
            _write_csv(path, CSV_COLUMNS, rows)
        else:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(",".join(CSV_COLUMNS) + "\n")

                def on_row(row):
                    fh.write(format_row(row))
                    fh.flush()

                rows, report, error = _field_rows(cfg, out_dir, dump_every, on_row)
        drifts = drift_table(rows)
        expected = report.expected()
        passed = {name: bool(drifts[name] < cfg.drift_tol) for name in expected}
        if cfg.is_field:
            passed["gauss_res_growth"] = bool(drifts["gauss_res_growth"] < 1e-8)
            passed["divB_res_growth"] = bool(drifts["divB_res_growth"] < 1e-8)
        passed["ortho_res_max"] = bool(drifts["ortho_res_max"] < 1e-9)
        summary = RunSummary(cfg.scenario, drifts, expected, passed,
                             time.perf_counter() - start,
                             discrimination=discrimination_check(report, rows))
        if error is not None:
            summary.aborted = True
            summary.message, summary.last_good_t = error
            log.error("aborted: %s (last good t = %g)", *error)

    payload = asdict(summary)
    payload["ok"] = summary.ok
    payload["config"] = config_items(cfg)
    payload["seed"] = seed
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
