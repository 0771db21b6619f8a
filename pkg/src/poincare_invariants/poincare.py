"""Poincare and Lagrange-Poincare equations on a frame-equipped manifold.

A point ``g`` is stored as an array of ambient coordinates (an ``n``-vector
for a chart of R^n, a 3x3 matrix for SO(3)); tangent vectors have the same
shape. A :class:`FrameChart` supplies ``n`` pointwise independent fields
``v_k(g)`` and their structure functions ``c[i, j, k]`` defined by
``[v_i, v_j] = sum_k c[i, j, k] v_k``.

Velocities are written in frame coordinates ``omega`` with
``g_dot = sum_k omega_k v_k(g)``, and the equations of motion are

    d/dt dL/domega_k = sum_ij c[i, k, j] omega_i dL/domega_j + v_k(L).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import so3

FRAME_COND_MAX = 1e8


@dataclass
class FrameChart:
    """Frame fields on an ``n``-dimensional manifold.

    ``frame(g)`` returns an array of shape ``(n,) + g.shape`` holding the
    vectors ``v_k(g)``. ``structure(g)`` returns ``c`` with shape
    ``(n, n, n)``. ``flow(g, k, s)`` moves ``g`` a parameter ``s`` along
    ``v_k``; the default is the straight line ``g + s v_k(g)``, adequate
    when the chart is an open set of R^n. ``project`` maps a point that has
    drifted off the constraint set back onto it.
    """

    n: int
    frame: Callable
    structure: Callable
    flow: Optional[Callable] = None
    project: Optional[Callable] = None
    group_invariant: bool = False
    _c_cache: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def vectors(self, g):
        return np.asarray(self.frame(g), dtype=float)

    def structure_at(self, g):
        if self.group_invariant:
            if self._c_cache is None:
                self._c_cache = np.asarray(self.structure(g), dtype=float)
            return self._c_cache
        return np.asarray(self.structure(g), dtype=float)

    def move(self, g, k, s):
        if self.flow is not None:
            return self.flow(g, k, s)
        return g + s * self.vectors(g)[k]

    def to_manifold(self, g):
        return g if self.project is None else self.project(g)

    def matrix(self, g):
        """Frame vectors as the columns of an (ambient, n) matrix."""
        v = self.vectors(g)
        return v.reshape(self.n, -1).T

    def coordinates(self, g, tangent):
        """Least-squares frame coordinates of ``tangent`` and the residual norm."""
        a = self.matrix(g)
        b = np.asarray(tangent, dtype=float).reshape(-1)
        sv = np.linalg.svd(a, compute_uv=False)
        if sv[-1] == 0.0 or sv[0] / sv[-1] > FRAME_COND_MAX:
            raise np.linalg.LinAlgError("frame is degenerate at this point")
        coords, *_ = np.linalg.lstsq(a, b, rcond=None)
        return coords, float(np.linalg.norm(a @ coords - b))


def so3_chart():
    """Right-invariant frame ``v_k(R) = hat(e_k) R`` on SO(3)."""
    c = so3.so3_structure_constants()

    def frame(R):
        return np.stack([so3.right_field(k, R) for k in range(3)])

    def flow(R, k, s):
        v = np.zeros(3)
        v[k] = s
        return so3.so3_exp(v) @ R

    return FrameChart(3, frame, lambda R: c, flow=flow,
                      project=so3.reorthonormalize, group_invariant=True)


def coordinate_chart(n):
    """Coordinate fields ``d/dg_k`` on R^n; every structure constant is zero."""
    eye = np.eye(n)
    zeros = np.zeros((n, n, n))
    return FrameChart(n, lambda g: eye.copy(), lambda g: zeros, group_invariant=True)


def frame_bracket_residual(frame, g, h=1e-5):
    """Max deviation between finite-difference brackets and ``structure``.

    The bracket ``[v_i, v_j] = Dv_j[v_i] - Dv_i[v_j]`` is formed from
    central differences in ambient coordinates, so the frame must be
    defined in a neighbourhood of the constraint set.
    """
    g = np.asarray(g, dtype=float)
    v = frame.vectors(g)
    c = frame.structure_at(g)
    worst = 0.0
    for i in range(frame.n):
        for j in range(frame.n):
            dvj = (frame.vectors(g + h * v[i])[j] - frame.vectors(g - h * v[i])[j]) / (2 * h)
            dvi = (frame.vectors(g + h * v[j])[i] - frame.vectors(g - h * v[j])[i]) / (2 * h)
            expected = np.tensordot(c[i, j], v, axes=1)
            worst = max(worst, float(np.max(np.abs(dvj - dvi - expected))))
    return worst


def current_from_flow(flow_derivative, g, frame, tol=1e-10):
    """Frame coordinates ``w`` of a symmetry flow's generator at ``g``."""
    w, res = frame.coordinates(g, flow_derivative)
    scale = max(1.0, float(np.linalg.norm(flow_derivative)))
    if res > tol * scale:
        raise ValueError(f"flow derivative is not tangent to the frame (residual {res:.3e})")
    return w


def _fd_step(x):
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def _fd_gradient(f, x):
    x = np.asarray(x, dtype=float)
    h = _fd_step(x)
    out = np.empty(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def _fd_jacobian(f, x):
    x = np.asarray(x, dtype=float)
    h = _fd_step(x)
    cols = []
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    jac = np.stack(cols, axis=-1)
    return 0.5 * (jac + jac.T) if jac.shape[0] == jac.shape[1] else jac


@dataclass
class PoincareLagrangian:
    """A Lagrangian written in Poincare variables ``(g, omega)``.

    Only ``value`` is required. Missing derivatives fall back to central
    differences with step ``1e-5 * (1 + |omega|)``. ``frame_derivative``
    (``v_k(L)``) and ``momentum_frame_derivative`` (``v_k(dL/domega)``, a
    vector) are taken as zero unless ``depends_on_g`` is set.
    """

    value: Callable
    d_omega: Optional[Callable] = None
    frame_derivative: Optional[Callable] = None
    omega_hessian_solve: Optional[Callable] = None
    depends_on_g: bool = False
    momentum_frame_derivative: Optional[Callable] = None

    def __call__(self, g, omega):
        return float(self.value(g, omega))

    def momentum(self, g, omega):
        omega = np.asarray(omega, dtype=float)
        if self.d_omega is not None:
            return np.asarray(self.d_omega(g, omega), dtype=float)
        return _fd_gradient(lambda w: self.value(g, w), omega)

    def v_derivative(self, g, omega, k, frame):
        if self.frame_derivative is not None:
            return float(self.frame_derivative(g, omega, k))
        if not self.depends_on_g:
            return 0.0
        h = 1e-5
        return (self.value(frame.move(g, k, h), omega)
                - self.value(frame.move(g, k, -h), omega)) / (2 * h)

    def momentum_v_derivative(self, g, omega, k, frame):
        """``v_k(dL/domega)`` at fixed ``omega``."""
        if self.momentum_frame_derivative is not None:
            return np.asarray(self.momentum_frame_derivative(g, omega, k), dtype=float)
        if not self.depends_on_g:
            return np.zeros(frame.n)
        h = 1e-5
        return (self.momentum(frame.move(g, k, h), omega)
                - self.momentum(frame.move(g, k, -h), omega)) / (2 * h)

    def solve_hessian(self, g, omega, rhs):
        omega = np.asarray(omega, dtype=float)
        if self.omega_hessian_solve is not None:
            return np.asarray(self.omega_hessian_solve(g, omega, rhs), dtype=float)
        hess = _fd_jacobian(lambda w: self.momentum(g, w), omega)
        return np.linalg.solve(hess, rhs)


def poincare_energy(L, g, omega):
    """``L_omega . omega - L``."""
    omega = np.asarray(omega, dtype=float)
    return float(L.momentum(g, omega) @ omega - L(g, omega))


def poincare_invariant(L, g, omega, current):
    """``sum_k L_omega_k w_k(g)`` for a current given as a callable or array."""
    w = current(g) if callable(current) else current
    return float(L.momentum(g, omega) @ np.asarray(w, dtype=float))


def poincare_bracket_term(c, omega, p):
    """``sum_ij c[i, k, j] omega_i p_j`` for every k."""
    return np.einsum("ikj,i,j->k", c, omega, p)


def poincare_rhs(L, g, omega, frame):
    """Right-hand side ``(g_dot, omega_dot)`` of the Poincare equations."""
    g = np.asarray(g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    v = frame.vectors(g)
    g_dot = np.tensordot(omega, v, axes=1)
    p = L.momentum(g, omega)
    p_dot = poincare_bracket_term(frame.structure_at(g), omega, p)
    if L.depends_on_g:
        p_dot = p_dot + np.array([L.v_derivative(g, omega, k, frame) for k in range(frame.n)])
        for k in range(frame.n):
            if omega[k] != 0.0:
                p_dot = p_dot - omega[k] * L.momentum_v_derivative(g, omega, k, frame)
    return g_dot, L.solve_hessian(g, omega, p_dot)


def poincare_rk4_step(L, frame, g, omega, dt):
    """One classical RK4 step, then projection of ``g`` onto the manifold."""
    def f(gg, ww):
        return poincare_rhs(L, gg, ww, frame)

    k1g, k1w = f(g, omega)
    k2g, k2w = f(g + 0.5 * dt * k1g, omega + 0.5 * dt * k1w)
    k3g, k3w = f(g + 0.5 * dt * k2g, omega + 0.5 * dt * k2w)
    k4g, k4w = f(g + dt * k3g, omega + dt * k3w)
    g_new = g + dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g)
    w_new = omega + dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    return frame.to_manifold(g_new), w_new


def integrate_poincare(L, frame, g0, omega0, dt, nsteps, monitor=None):
    """Run ``nsteps`` RK4 steps; ``monitor(g, omega)`` is sampled at every step.

    Returns the final state and the list of monitor values (including the
    initial one).
    """
    g = np.asarray(g0, dtype=float)
    omega = np.asarray(omega0, dtype=float)
    samples = [] if monitor is None else [monitor(g, omega)]
    for _ in range(nsteps):
        g, omega = poincare_rk4_step(L, frame, g, omega, dt)
        if monitor is not None:
            samples.append(monitor(g, omega))
    return g, omega, samples


def transport_residual(family, frame, h, s0=0.0, t0=0.0):
    """Residual of ``omega'_k = sum_ij c[i, j, k] omega_i w_j + w_dot_k``.

    ``family(s, t)`` is a smooth two-parameter path of points. ``omega`` and
    ``w`` are the frame coordinates of ``dg/dt`` and ``dg/ds``; every
    derivative is a central difference with step ``h``.
    """
    if not 0.0 < h <= 1e-2:
        raise ValueError("step must lie in (0, 1e-2]")

    def omega_at(s, t):
        d = (family(s, t + h) - family(s, t - h)) / (2 * h)
        return frame.coordinates(family(s, t), d)[0]

    def w_at(s, t):
        d = (family(s + h, t) - family(s - h, t)) / (2 * h)
        return frame.coordinates(family(s, t), d)[0]

    omega = omega_at(s0, t0)
    w = w_at(s0, t0)
    omega_s = (omega_at(s0 + h, t0) - omega_at(s0 - h, t0)) / (2 * h)
    w_t = (w_at(s0, t0 + h) - w_at(s0, t0 - h)) / (2 * h)
    c = frame.structure_at(family(s0, t0))
    predicted = np.einsum("ijk,i,j->k", c, omega, w) + w_t
    return float(np.max(np.abs(omega_s - predicted)))


@dataclass
class LagrangePoincareLagrangian:
    """Lagrangian ``L(X, V, g, omega)`` on a linear space times a framed manifold.

    ``velocity_hessian(X, V, g, omega)`` should return the joint Hessian in
    ``(V, omega)``; by default it is built from central differences of the
    momenta. Missing first derivatives are likewise differenced.
    """

    value: Callable
    d_V: Optional[Callable] = None
    d_X: Optional[Callable] = None
    d_omega: Optional[Callable] = None
    velocity_hessian: Optional[Callable] = None
    depends_on_g: bool = False

    def __call__(self, X, V, g, omega):
        return float(self.value(X, V, g, omega))

    def p_V(self, X, V, g, omega):
        if self.d_V is not None:
            return np.asarray(self.d_V(X, V, g, omega), dtype=float)
        return _fd_gradient(lambda y: self.value(X, y, g, omega), V)

    def p_omega(self, X, V, g, omega):
        if self.d_omega is not None:
            return np.asarray(self.d_omega(X, V, g, omega), dtype=float)
        return _fd_gradient(lambda y: self.value(X, V, g, y), omega)

    def force(self, X, V, g, omega):
        if self.d_X is not None:
            return np.asarray(self.d_X(X, V, g, omega), dtype=float)
        return _fd_gradient(lambda y: self.value(y, V, g, omega), X)

    def momenta(self, X, V, g, omega):
        return np.concatenate([self.p_V(X, V, g, omega), self.p_omega(X, V, g, omega)])

    def hessian(self, X, V, g, omega):
        if self.velocity_hessian is not None:
            return np.asarray(self.velocity_hessian(X, V, g, omega), dtype=float)
        m = np.asarray(V).size

        def p(y):
            return self.momenta(X, y[:m], g, y[m:])

        return _fd_jacobian(p, np.concatenate([V, omega]))


def lagrange_poincare_rhs(L, X, V, g, omega, frame):
    """Right-hand side ``(X_dot, V_dot, g_dot, omega_dot)`` of the mixed system.

    The velocity block is solved jointly, so Lagrangians that couple ``V``
    and ``omega`` are handled; cross terms in ``X`` and ``g`` are moved to
    the right-hand side by directional differences.
    """
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    g = np.asarray(g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    m = V.size
    g_dot = np.tensordot(omega, frame.vectors(g), axes=1)

    rhs_V = L.force(X, V, g, omega)
    p_w = L.p_omega(X, V, g, omega)
    rhs_w = poincare_bracket_term(frame.structure_at(g), omega, p_w)

    # d/dt of the momenta along X_dot = V at fixed velocities
    if np.any(V):
        hx = _fd_step(X) / float(np.linalg.norm(V))
        dp = (L.momenta(X + hx * V, V, g, omega) - L.momenta(X - hx * V, V, g, omega)) / (2 * hx)
        rhs_V = rhs_V - dp[:m]
        rhs_w = rhs_w - dp[m:]
    if L.depends_on_g:
        hg = 1e-5

        def value_at(gg):
            return L.value(X, V, gg, omega)

        for k in range(frame.n):
            rhs_w[k] += (value_at(frame.move(g, k, hg)) - value_at(frame.move(g, k, -hg))) / (2 * hg)
            if omega[k] != 0.0:
                dp = (L.momenta(X, V, frame.move(g, k, hg), omega)
                      - L.momenta(X, V, frame.move(g, k, -hg), omega)) / (2 * hg)
                rhs_V = rhs_V - omega[k] * dp[:m]
                rhs_w = rhs_w - omega[k] * dp[m:]

    acc = np.linalg.solve(L.hessian(X, V, g, omega), np.concatenate([rhs_V, rhs_w]))
    return V.copy(), acc[:m], g_dot, acc[m:]


def lagrange_poincare_rk4_step(L, frame, X, V, g, omega, dt):
    def f(state):
        return lagrange_poincare_rhs(L, *state, frame)

    y0 = (np.asarray(X, float), np.asarray(V, float), np.asarray(g, float), np.asarray(omega, float))
    k1 = f(y0)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y0, k3)))
    X1, V1, g1, w1 = (a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
                      for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4))
    return X1, V1, frame.to_manifold(g1), w1


def combined_energy(L, X, V, g, omega):
    """``L_V . V + L_omega . omega - L``."""
    V = np.asarray(V, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return float(L.p_V(X, V, g, omega) @ V + L.p_omega(X, V, g, omega) @ omega
                 - L(X, V, g, omega))


def combined_invariant(L, X, V, g, omega, frame, dX_ds=None, dg_ds=None):
    """Noether part ``L_V . dX/ds`` plus Poincare part ``sum_k L_omega_k w_k``.

    Either flow derivative may be omitted when that factor of the flow is
    trivial.
    """
    total = 0.0
    if dX_ds is not None:
        total += float(L.p_V(X, V, g, omega) @ np.asarray(dX_ds, dtype=float))
    if dg_ds is not None:
        w = current_from_flow(dg_ds, g, frame)
        total += float(L.p_omega(X, V, g, omega) @ w)
    return total
