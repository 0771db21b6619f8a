"""Acceptance criteria; each test records one PASS/FAIL line (see the terminal summary)."""

import time

import numpy as np
import pytest

from poincare_invariants import coupled as cp
from poincare_invariants import grid as gf
from poincare_invariants import so3
from poincare_invariants.cli import main
from poincare_invariants.config import parse_config
from poincare_invariants.external import UniformB, ZeroPotential, symmetry_report
from poincare_invariants.poincare import (
    integrate_poincare, poincare_invariant, so3_chart, transport_residual)
from poincare_invariants.rigid_body import BodySpec, ChargeProfile, integrate_top
from poincare_invariants.runner import run, smooth_rotation_family
from test_poincare import heavy_top

# tolerances pinned from the acceptance criteria
FREE_TOP_TOL = 1e-12
FREE_TOP_SECONDS = 1.0
EULER_DRIFT_TOL = 1e-8
HALVING_FACTOR = 8.0
EULER_SECONDS = 5.0
TRANSPORT_TOL = 1e-6
TRANSPORT_MIN_ORDER = 1.8
INVARIANT_FLOOR = 1e-12
COUPLED_DRIFT_TOL = 1e-2
GAUSS_GROWTH_TOL = 1e-8
COUPLED_SECONDS = 120.0
DISCRIMINATION = 10.0
TORQUE_TOL = 1e-6
CROSSCHECK_TOL = 1e-4

# acceptance-run conventions for the coupled checks
ROUNDOFF_DRIFT = 1e-10     # relative drifts below this are at round-off
FLOOR_DOMINATED = 0.1      # dt-dependent part below this share of the drift


def top_drifts(body, omega0, dt, T):
    J = body.matrix
    _, _, samples = integrate_top(body, np.eye(3), omega0, dt, int(round(T / dt)), sample_every=10)
    W = np.array([s[1] for s in samples])
    E = 0.5 * np.einsum("ni,ij,nj->n", W, J, W)
    m = np.linalg.norm(W @ J, axis=1)
    return np.max(np.abs(E - E[0])) / E[0], np.max(np.abs(m - m[0])) / m[0]


def test_criterion_1_spherical_top(acceptance_line):
    profile = ChargeProfile(1.0)
    body = BodySpec(cp.inertia_of(profile))
    omega0 = np.array([0.3, -0.5, 1.0])
    start = time.perf_counter()
    _, _, samples = integrate_top(body, np.eye(3), omega0, 1e-3, 10_000)
    elapsed = time.perf_counter() - start
    dev = max(float(np.max(np.abs(s[1] - omega0))) for s in samples)
    ok = acceptance_line(1, np.isclose(body.inertia, 2.0, rtol=1e-12) and dev < FREE_TOP_TOL
                         and elapsed < FREE_TOP_SECONDS,
                         f"I = {body.inertia:.12g}, max|w - w0| = {dev:.2e}, {elapsed:.2f} s")
    assert ok


def test_criterion_2_euler_top(acceptance_line):
    body = BodySpec(np.diag([1.0, 2.0, 3.0]))
    omega0 = np.array([5.0, 8.0, 3.0])
    start = time.perf_counter()
    e1, m1 = top_drifts(body, omega0, 1e-3, 100.0)
    elapsed = time.perf_counter() - start
    e2, m2 = top_drifts(body, omega0, 5e-4, 100.0)
    ok = (e1 < EULER_DRIFT_TOL and m1 < EULER_DRIFT_TOL and e1 / e2 >= HALVING_FACTOR
          and m1 / m2 >= HALVING_FACTOR and elapsed < EULER_SECONDS)
    ok = acceptance_line(2, ok, f"dE = {e1:.2e}, d|L| = {m1:.2e}, halving ratios "
                                f"{e1 / e2:.1f} / {m1 / m2:.1f}, {elapsed:.2f} s")
    assert ok


def test_criterion_3_transport_relation(acceptance_line):
    rng = np.random.default_rng(2024)
    frame = so3_chart()
    worst, lowest_order = 0.0, np.inf
    for _ in range(20):
        fam = smooth_rotation_family(rng)
        coarse = transport_residual(fam, frame, 1e-3)
        fine = transport_residual(fam, frame, 1e-4)
        worst = max(worst, fine)
        lowest_order = min(lowest_order, np.log10(coarse / fine))
    ok = acceptance_line(3, worst < TRANSPORT_TOL and lowest_order >= TRANSPORT_MIN_ORDER,
                         f"max residual {worst:.2e} at h = 1e-4, lowest order {lowest_order:.2f}")
    assert ok


def test_criterion_4_poincare_invariant(acceptance_line):
    L = heavy_top()
    e3 = np.array([0.0, 0.0, 1.0])
    R0 = so3.so3_exp([0.3, -0.2, 0.4])
    w0 = 0.5 * np.array([0.5, -0.4, 1.0])
    drifts = []
    for dt in (0.01, 0.005, 0.0025):
        _, _, s = integrate_poincare(L, so3_chart(), R0, w0, dt, int(round(5.0 / dt)),
                                     monitor=lambda R, w: poincare_invariant(L, R, w, e3))
        drifts.append(float(np.max(np.abs(np.array(s) - s[0]))))
    ratios = [a / b for a, b in zip(drifts, drifts[1:])]
    converging = all(r >= HALVING_FACTOR or b < INVARIANT_FLOOR
                     for r, b in zip(ratios, drifts[1:]))
    ok = acceptance_line(4, converging and drifts[-1] < INVARIANT_FLOOR,
                         "drifts " + ", ".join(f"{d:.2e}" for d in drifts)
                         + ", ratios " + ", ".join(f"{r:.1f}" for r in ratios))
    assert ok


def coupled_series(pot, omega0, dt, n=48, L=16.0, T=4.0):
    profile = ChargeProfile(1.0)
    grid = gf.GridSpec(n, L)
    state = cp.initial_state(profile, grid, qdot=(0.1, 0.0, 0.0), omega=omega0)
    rows = []
    start = time.perf_counter()
    nsteps = int(round(T / dt))
    stride = max(1, nsteps // 24)
    for step in range(nsteps + 1):
        if step % stride == 0 or step == nsteps:
            r = cp.invariants(state, pot, profile, grid)
            rows.append((r.t, r.energy, *r.P, *r.M, r.gauss_res, r.divB_res))
        if step < nsteps:
            state = cp.rk4_step(state, pot, profile, grid, dt)
    return np.array(rows), time.perf_counter() - start


def relative_drifts(a):
    out = {"energy": np.max(np.abs(a[:, 1] - a[0, 1])) / abs(a[0, 1])}
    p0, m0 = np.linalg.norm(a[0, 2:5]), np.linalg.norm(a[0, 5:8])
    for k, name in enumerate("xyz"):
        out["P" + name] = np.max(np.abs(a[:, 2 + k] - a[0, 2 + k])) / p0
        out["M" + name] = np.max(np.abs(a[:, 5 + k] - a[0, 5 + k])) / m0
    return out


@pytest.fixture(scope="module")
def free_runs():
    dx = 16.0 / 48
    a, t1 = coupled_series(ZeroPotential(), (0.0, 0.0, 1.0), 0.5 * dx)
    b, _ = coupled_series(ZeroPotential(), (0.0, 0.0, 1.0), 0.25 * dx)
    return a, b, t1


def test_criterion_5_coupled_free(acceptance_line, free_runs):
    a, b, elapsed = free_runs
    d1, d2 = relative_drifts(a), relative_drifts(b)
    # both runs are sampled at the same times; their difference is the dt-dependent part
    scale = {"energy": abs(a[0, 1]), **{f"P{c}": np.linalg.norm(a[0, 2:5]) for c in "xyz"},
             **{f"M{c}": np.linalg.norm(a[0, 5:8]) for c in "xyz"}}
    cols = {"energy": 1, "Px": 2, "Py": 3, "Pz": 4, "Mx": 5, "My": 6, "Mz": 7}
    verdicts = []
    for name, col in cols.items():
        dt_part = np.max(np.abs(a[:, col] - b[:, col])) / scale[name]
        if d2[name] <= ROUNDOFF_DRIFT:
            verdicts.append((name, True, "round-off"))
        elif dt_part <= FLOOR_DOMINATED * d2[name]:
            verdicts.append((name, True, "floor"))
        else:
            ratio = d1[name] / d2[name]
            verdicts.append((name, ratio >= HALVING_FACTOR, f"x{ratio:.0f}"))
    within = max(d1.values()) < COUPLED_DRIFT_TOL
    gauss = max(np.max(a[:, 8]) - a[0, 8], np.max(b[:, 8]) - b[0, 8])
    ok = (within and all(v[1] for v in verdicts) and gauss < GAUSS_GROWTH_TOL
          and elapsed < COUPLED_SECONDS)
    detail = (f"max drift {max(d1.values()):.2e} ({max(d1, key=d1.get)}), halving: "
              + " ".join(f"{n}:{v}" for n, _, v in verdicts)
              + f", Gauss growth {gauss:.1e}, {elapsed:.1f} s")
    ok = acceptance_line(5, ok, detail)
    assert ok


@pytest.mark.filterwarnings("ignore::poincare_invariants.config.WrapWindowWarning")
def test_criterion_6_symmetry_discrimination(acceptance_line, tmp_path):
    cfg = parse_config("scenario = uniform_B_trap\nexternal = uniform_B 0 0 0.5\n"
                       "grid_n = 48\nbox_length = 16\nT = 4\n")
    summary = run(cfg, str(tmp_path))
    expected = symmetry_report(UniformB((0.0, 0.0, 0.5))).expected()
    d = summary.discrimination
    ok = (summary.expected == expected == ["energy", "Pz", "Mz"]
          and all(summary.passed[name] for name in expected)
          and max(summary.drifts[n] for n in ("Pz", "Mz")) < COUPLED_DRIFT_TOL
          and d and d["passed"] and d["factor"] == DISCRIMINATION and summary.ok)
    ok = acceptance_line(6, ok, f"Pz {summary.drifts['Pz']:.1e}, Mz {summary.drifts['Mz']:.1e}, "
                                f"max |dMx|,|dMy| {d['max_broken_change']:.2e} vs |dMz| "
                                f"{d['max_conserved_change']:.2e}")
    assert ok


def test_criterion_7_torque_oracle(acceptance_line):
    profile = ChargeProfile(1.0)
    grid = gf.GridSpec(32, 16.0)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        B = rng.normal(size=3)
        omega = rng.normal(size=3)
        particle = cp.ParticleState.make(q=rng.uniform(-1, 1, 3), qdot=0.3 * rng.normal(size=3),
                                         omega=omega)
        state = cp.SystemState(particle, gf.FieldState.zeros(grid))
        torque = cp.lorentz_torque(state, UniformB(B), profile, grid)
        expected = 0.5 * cp.inertia_of(profile) * np.cross(omega, B)
        worst = max(worst, float(np.max(np.abs(torque - expected))))
    ok = acceptance_line(7, worst < TORQUE_TOL, f"max |torque - (I/2) w x B| = {worst:.2e}")
    assert ok


def test_criterion_8_variational_crosscheck(acceptance_line):
    profile = ChargeProfile(1.0)
    pot = UniformB((0.0, 0.3, 0.5))
    gaps = []
    for n in (16, 24, 32):
        grid = gf.GridSpec(n, 16.0)
        s = cp.initial_state(profile, grid, (0.3, -0.2, 0.1), (0.1, 0.05, 0.0), (0.3, 0.0, 1.0))
        for _ in range(8):
            s = cp.rk4_step(s, pot, profile, grid, 0.25)
        gaps.append(cp.variational_crosscheck(s, pot, profile, grid))
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = acceptance_line(8, gaps[-1] < CROSSCHECK_TOL and decreasing,
                         "discrepancy n=16/24/32: " + ", ".join(f"{g:.1e}" for g in gaps))
    assert ok


def test_criterion_9_determinism(acceptance_line, tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("scenario = uniform_B_trap\ngrid_n = 32\nT = 2\nsample_every = 1\n")
    codes = [main(["--config", str(path), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    a = (tmp_path / "a" / "invariants.csv").read_bytes()
    b = (tmp_path / "b" / "invariants.csv").read_bytes()
    rows = a.count(b"\n") - 1
    ok = acceptance_line(9, a == b and rows > 1 and codes[0] == codes[1],
                         f"{rows} rows, {len(a)} bytes, identical = {a == b}")
    assert ok
