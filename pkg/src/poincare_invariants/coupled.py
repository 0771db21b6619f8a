"""Maxwell fields coupled to a rotating extended charge.

Units ``c = m = e = 1``. The particle carries position ``q``, velocity
``qdot``, orientation ``R`` and spatial angular velocity ``omega``; its
charge and mass both follow the radial profile ``rho``. Self fields live on
a periodic grid (see :mod:`.grid`); external fields are analytic.
"""

import logging
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import grid as gf
from . import so3
from .external import ZeroPotential
from .poincare import poincare_bracket_term
from .rigid_body import moment_of_inertia, rotation_step

log = logging.getLogger(__name__)

CFL_DEFAULT = 0.5


class CFLWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ParticleState:
    q: np.ndarray
    qdot: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def make(cls, q=(0, 0, 0), qdot=(0, 0, 0), omega=(0, 0, 0), R=None):
        R = np.eye(3) if R is None else so3.check_rotation(R)
        p = cls(np.array(q, dtype=float), np.array(qdot, dtype=float), np.array(R, dtype=float),
                np.array(omega, dtype=float))
        if np.linalg.norm(p.qdot) >= 1.0:
            warnings.warn("particle speed >= c; the model is non-relativistic", RuntimeWarning,
                          stacklevel=2)
        return p


@dataclass(frozen=True)
class SystemState:
    particle: ParticleState
    fields: gf.FieldState
    t: float = 0.0


@dataclass(frozen=True)
class SystemDerivative:
    fields: gf.FieldState
    q: np.ndarray
    qdot: np.ndarray
    omega: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class InvariantRecord:
    t: float
    energy: float
    P: np.ndarray
    M: np.ndarray
    gauss_res: float
    divB_res: float
    ortho_res: float


@lru_cache(maxsize=16)
def inertia_of(profile):
    return moment_of_inertia(profile)


@lru_cache(maxsize=8)
def _external_on_grid(pot, grid):
    x = grid.positions
    A0, A = pot.potentials(x)
    E, B = pot.fields(x)
    return A0, A, E, B


def _external(pot, grid):
    return _external_on_grid(ZeroPotential() if pot is None else pot, grid)


def _particle_kernels(particle, profile, grid):
    grid.check_support(profile.cutoff_radius)
    r = grid.min_image(particle.q)
    rho = profile.radial(np.sqrt(np.sum(r * r, axis=0)))
    v = particle.qdot.reshape(3, 1, 1, 1) + gf.cross(particle.omega.reshape(3, 1, 1, 1), r)
    return r, rho, v


def _force_density(state, pot, profile, grid):
    r, rho, v = _particle_kernels(state.particle, profile, grid)
    _, _, Ee, Be = _external(pot, grid)
    f = (state.fields.E + Ee + gf.cross(v, state.fields.B + Be)) * rho
    return r, f


def lorentz_force(state, pot, profile, grid):
    """``int [E + E_ext + v x (B + B_ext)] rho(x - q) dx`` with ``v = qdot + omega x (x - q)``."""
    _, f = _force_density(state, pot, profile, grid)
    return grid.integrate(f)


def lorentz_torque(state, pot, profile, grid):
    """``int (x - q) x [E + E_ext + v x (B + B_ext)] rho(x - q) dx``."""
    r, f = _force_density(state, pot, profile, grid)
    return grid.integrate(gf.cross(r, f))


def coupled_rhs(state, pot, profile, grid, neutralize_current=True):
    """Time derivative of every component of ``state``.

    With ``neutralize_current`` the mean of the current is removed before
    it drives ``E``: the uniform mode has no counterpart on a torus once the
    charge is neutralized, and left in it would let ``mean(E)`` grow
    linearly in time. The divergence of the current is unaffected.
    """
    p = state.particle
    r, rho, v = _particle_kernels(p, profile, grid)
    j = v * rho
    if neutralize_current:
        j = j - j.mean(axis=(1, 2, 3), keepdims=True)
    dfields = gf.maxwell_rhs(state.fields, j, grid)
    _, _, Ee, Be = _external(pot, grid)
    f = (state.fields.E + Ee + gf.cross(v, state.fields.B + Be)) * rho
    force = grid.integrate(f)
    torque = grid.integrate(gf.cross(r, f))
    return SystemDerivative(dfields, p.qdot.copy(), force, torque / inertia_of(profile),
                            so3.hat(p.omega) @ p.R)


def _advance(state, d, a):
    p = state.particle
    particle = ParticleState(p.q + a * d.q, p.qdot + a * d.qdot, p.R, p.omega + a * d.omega)
    return SystemState(particle, state.fields + a * d.fields, state.t + a)


def max_stable_dt(grid, cfl=CFL_DEFAULT):
    return cfl * grid.dx


def rk4_step(state, pot, profile, grid, dt, cfl=CFL_DEFAULT, neutralize_current=True):
    """Classical RK4 on ``(E, B, q, qdot, omega)``.

    ``R`` is advanced by the exponential map with the RK-weighted average of
    the stage angular velocities and then projected back onto SO(3).
    """
    if dt > max_stable_dt(grid, cfl) * (1 + 1e-12):
        warnings.warn(f"dt = {dt:g} exceeds CFL limit {max_stable_dt(grid, cfl):g}", CFLWarning,
                      stacklevel=2)

    def f(s):
        return coupled_rhs(s, pot, profile, grid, neutralize_current)

    k1 = f(state)
    s2 = _advance(state, k1, 0.5 * dt)
    k2 = f(s2)
    s3 = _advance(state, k2, 0.5 * dt)
    k3 = f(s3)
    s4 = _advance(state, k3, dt)
    k4 = f(s4)

    p = state.particle
    w = dt / 6.0
    fields = state.fields + (k1.fields + 2.0 * k2.fields + 2.0 * k3.fields + k4.fields) * w
    q = p.q + w * (k1.q + 2 * k2.q + 2 * k3.q + k4.q)
    qdot = p.qdot + w * (k1.qdot + 2 * k2.qdot + 2 * k3.qdot + k4.qdot)
    omega = p.omega + w * (k1.omega + 2 * k2.omega + 2 * k3.omega + k4.omega)
    for name, arr in (("q", q), ("qdot", qdot), ("omega", omega), ("E", fields.E), ("B", fields.B)):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite {name} after step from t = {state.t:g}")
    omega_avg = (p.omega + 2 * s2.particle.omega + 2 * s3.particle.omega + s4.particle.omega) / 6.0
    R = so3.reorthonormalize(rotation_step(p.R, omega_avg, dt))
    return SystemState(ParticleState(q, qdot, R, omega), fields, state.t + dt)


def initial_state(profile, grid, q=(0, 0, 0), qdot=(0, 0, 0), omega=(0, 0, 0), R=None):
    """Particle with its Coulomb field and ``B = 0``."""
    particle = ParticleState.make(q, qdot, omega, R)
    return SystemState(particle, gf.coulomb_init(profile, particle.q, grid), 0.0)


def _external_integrals(state, pot, profile, grid):
    A0e, Ae, _, _ = _external(pot, grid)
    rho = gf.sample_density(profile, state.particle.q, grid)
    return A0e, Ae, rho


def energy_total(state, pot, profile, grid):
    """``1/2 int (E^2 + B^2) + 1/2 qdot^2 + 1/2 I omega^2 + int A0_ext rho``."""
    p = state.particle
    A0e, _, rho = _external_integrals(state, pot, profile, grid)
    return (gf.field_energy(state.fields, grid) + 0.5 * float(p.qdot @ p.qdot)
            + 0.5 * inertia_of(profile) * float(p.omega @ p.omega)
            + float(grid.integrate(A0e * rho)))


def momentum_total(state, pot, profile, grid):
    """``qdot + int E x B + int A_ext rho``."""
    _, Ae, rho = _external_integrals(state, pot, profile, grid)
    return state.particle.qdot + gf.field_momentum(state.fields, grid) + grid.integrate(Ae * rho)


def angular_momentum_total(state, pot, profile, grid, warn=False):
    """``q x qdot + I omega + int x x (E x B) + int x x A_ext rho``, ``x`` from the box centre."""
    p = state.particle
    _, Ae, rho = _external_integrals(state, pot, profile, grid)
    return (np.cross(p.q, p.qdot) + inertia_of(profile) * p.omega
            + gf.field_angular_momentum(state.fields, grid, warn=warn)
            + grid.integrate(gf.cross(grid.positions, Ae) * rho))


def invariants(state, pot, profile, grid):
    return InvariantRecord(
        t=state.t,
        energy=energy_total(state, pot, profile, grid),
        P=momentum_total(state, pot, profile, grid),
        M=angular_momentum_total(state, pot, profile, grid),
        gauss_res=gf.gauss_residual(state.fields, profile, state.particle.q, grid),
        divB_res=gf.div_b_residual(state.fields, grid),
        ortho_res=so3.orthogonality_residual(state.particle.R),
    )


def _lagrangian(particle, fields, gauge, pot, profile, grid):
    A0e, Ae, _, _ = _external(pot, grid)
    r, rho, v = _particle_kernels(particle, profile, grid)
    field_part = 0.5 * grid.integrate(np.sum(fields.E ** 2 - fields.B ** 2, axis=0))
    coupling = grid.integrate((-(gauge.A0 + A0e) + np.sum(v * (gauge.A + Ae), axis=0)) * rho)
    return float(field_part + 0.5 * particle.qdot @ particle.qdot
                 + 0.5 * inertia_of(profile) * particle.omega @ particle.omega + coupling)


def lagrangian_value(state, pot, profile, grid, gauge=None):
    """The field-particle Lagrangian evaluated with Coulomb-gauge potentials.

    ``1/2 int (E^2 - B^2) + 1/2 qdot^2 + 1/2 I omega^2
    - int (A0 + A0_ext) rho + int (qdot + omega x (x - q)) . (A + A_ext) rho``.
    """
    if gauge is None:
        gauge = gf.gauge_reconstruct(state.fields, grid)
    return _lagrangian(state.particle, state.fields, gauge, pot, profile, grid)


def omega_momentum(state, pot, profile, grid, gauge=None, h=1e-3):
    """``dL/domega`` by central differences of :func:`lagrangian_value`."""
    if gauge is None:
        gauge = gf.gauge_reconstruct(state.fields, grid)
    p = state.particle
    out = np.empty(3)
    for k in range(3):
        dw = np.zeros(3)
        dw[k] = h
        lp = _lagrangian(replace(p, omega=p.omega + dw), state.fields, gauge, pot, profile, grid)
        lm = _lagrangian(replace(p, omega=p.omega - dw), state.fields, gauge, pot, profile, grid)
        out[k] = (lp - lm) / (2 * h)
    return out


def variational_crosscheck(state, pot, profile, grid, h=1e-3):
    """Max-norm gap between the Poincare form of the spin equation and the torque law.

    The left side ``d/dt dL/domega`` is split as ``I omega_dot + D`` where
    ``I omega_dot`` is the Lorentz torque and ``D`` is the rate of change of
    ``int (x - q) x (A + A_ext) rho(x - q) dx`` along the flow (``Adot``
    from the gauge reconstruction, ``q`` moving with ``qdot``). The right
    side ``sum c[i, k, j] omega_i dL/domega_j`` uses the SO(3) structure
    constants and ``dL/domega`` differenced from the Lagrangian; ``L`` has
    no explicit ``R`` dependence, so the frame-derivative term vanishes.
    """
    gauge = gf.gauge_reconstruct(state.fields, grid)
    p = state.particle
    p_omega = omega_momentum(state, pot, profile, grid, gauge, h)
    rhs = poincare_bracket_term(so3.so3_structure_constants(), p.omega, p_omega)

    _, Ae, _, _ = _external(pot, grid)
    r, rho, _ = _particle_kernels(p, profile, grid)
    A = gauge.A + Ae
    qd = p.qdot.reshape(3, 1, 1, 1)
    # d/dt rho(x - q) = -qdot . grad rho = (qdot . r) rho / sigma^2 for the Gaussian
    rho_dot = np.sum(qd * r, axis=0) * rho / profile.sigma ** 2
    D = grid.integrate(gf.cross(r, gauge.Adot) * rho - gf.cross(qd, A) * rho
                       + gf.cross(r, A) * rho_dot)
    lhs = lorentz_torque(state, pot, profile, grid) + D
    return float(np.max(np.abs(lhs - rhs)))


def momentum_from_symmetry(state, pot, profile, grid):
    """Momentum as the Noether quantity of spatial translations.

    ``P_j = L_Adot . (-d_j A) + L_qdot . e_j`` with ``L_Adot = -E`` and
    ``L_qdot = qdot + int (A + A_ext) rho``; equal to
    :func:`momentum_total` once Gauss' law holds.
    """
    gauge = gf.gauge_reconstruct(state.fields, grid)
    _, Ae, _, _ = _external(pot, grid)
    rho = gf.sample_density(profile, state.particle.q, grid)
    p_qdot = state.particle.qdot + grid.integrate((gauge.A + Ae) * rho)
    dA = np.stack([gf.grad(gauge.A[i], grid) for i in range(3)])  # dA[i, j] = d_j A_i
    field = np.array([grid.integrate(np.sum(state.fields.E * dA[:, j], axis=0)) for j in range(3)])
    return p_qdot + field


def angular_momentum_from_symmetry(state, pot, profile, grid, axis):
    """Angular momentum about ``axis`` from the rotation symmetry of the Lagrangian.

    The rotation ``exp(s hat(e_k))`` acts on the Lagrange variables
    ``(A, q)`` and on ``R``. The Lagrange part is
    ``L_Adot . (hat(e_k) A - (hat(e_k) x . grad) A) + L_qdot . (e_k x q)``;
    the Poincare part is ``sum_j dL/domega_j w_j`` with ``w`` the frame
    coordinates of ``hat(e_k) R``.
    """
    from .poincare import current_from_flow, so3_chart

    gauge = gf.gauge_reconstruct(state.fields, grid)
    _, Ae, _, _ = _external(pot, grid)
    p = state.particle
    rho = gf.sample_density(profile, p.q, grid)
    e = np.zeros(3)
    e[axis] = 1.0
    ek = e.reshape(3, 1, 1, 1)
    u = gf.cross(ek, grid.positions)
    dA = np.stack([gf.grad(gauge.A[i], grid) for i in range(3)])
    transport = np.einsum("jxyz,ijxyz->ixyz", u, dA)
    dA_ds = gf.cross(ek, gauge.A) - transport
    p_qdot = p.qdot + grid.integrate((gauge.A + Ae) * rho)
    lagrange_part = (-float(grid.integrate(np.sum(state.fields.E * dA_ds, axis=0)))
                     + float(p_qdot @ np.cross(e, p.q)))
    w = current_from_flow(so3.hat(e) @ p.R, p.R, so3_chart())
    return lagrange_part + float(omega_momentum(state, pot, profile, grid, gauge) @ w)
