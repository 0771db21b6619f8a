"""Static external potentials and the symmetries they leave intact.

Points are arrays whose first axis has length 3 (a single point or a whole
grid of positions); all potentials here are time independent, so
``E = -grad A0`` and ``B = curl A``.
"""

from dataclasses import dataclass

import numpy as np

from . import so3

AXIS_NAMES = "xyz"


def _vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("expected a 3-vector")
    return v


def _bcast(v, x):
    return v.reshape((3,) + (1,) * (np.ndim(x) - 1))


def _cross(a, b):
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


class ExternalPotential:
    """Base class; subclasses implement :meth:`potentials` and may override :meth:`fields`."""

    def potentials(self, x):
        raise NotImplementedError

    def fields(self, x, h=1e-5):
        """``E`` and ``B`` from central differences of the potentials."""
        x = np.asarray(x, dtype=float)
        dA0 = []
        dA = []
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            e = _bcast(e, x)
            a0p, ap = self.potentials(x + e)
            a0m, am = self.potentials(x - e)
            dA0.append((a0p - a0m) / (2 * h))
            dA.append((ap - am) / (2 * h))
        E = -np.stack(dA0)
        # dA[k][i] = d A_i / d x_k
        B = np.stack([dA[1][2] - dA[2][1], dA[2][0] - dA[0][2], dA[0][1] - dA[1][0]])
        return E, B


@dataclass(frozen=True)
class ZeroPotential(ExternalPotential):
    def potentials(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[1:]), np.zeros_like(x)

    def fields(self, x, h=None):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x), np.zeros_like(x)


@dataclass(frozen=True)
class UniformE(ExternalPotential):
    """``A0 = -E0 . x``, ``A = 0``."""

    E0: tuple

    def __post_init__(self):
        object.__setattr__(self, "E0", tuple(_vec(self.E0)))

    def potentials(self, x):
        x = np.asarray(x, dtype=float)
        return -np.tensordot(np.array(self.E0), x, axes=1), np.zeros_like(x)

    def fields(self, x, h=None):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(_bcast(np.array(self.E0), x), x.shape).copy(), np.zeros_like(x)


@dataclass(frozen=True)
class UniformB(ExternalPotential):
    """``A = 1/2 B0 x x``, ``A0 = 0``."""

    B0: tuple

    def __post_init__(self):
        object.__setattr__(self, "B0", tuple(_vec(self.B0)))

    def potentials(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[1:]), 0.5 * _cross(_bcast(np.array(self.B0), x), x)

    def fields(self, x, h=None):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x), np.broadcast_to(_bcast(np.array(self.B0), x), x.shape).copy()


@dataclass(frozen=True)
class CustomPotential(ExternalPotential):
    """User potentials ``A0(x)`` and ``A(x)``, vectorized over the trailing axes of ``x``."""

    A0_fn: object
    A_fn: object

    def potentials(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.A0_fn(x), dtype=float), np.asarray(self.A_fn(x), dtype=float)


def eval_external(pot, x):
    """``(A0, A, E, B)`` at ``x``."""
    A0, A = pot.potentials(x)
    E, B = pot.fields(x)
    return A0, A, E, B


@dataclass(frozen=True)
class SymmetryReport:
    """Axes (0-based) whose momentum / angular momentum is conserved."""

    conserved_P: frozenset
    conserved_M: frozenset
    energy_conserved: bool
    norm_M_conserved: bool = False

    def expected(self):
        """Names of the invariants expected to be conserved."""
        names = ["energy"] if self.energy_conserved else []
        names += [f"P{AXIS_NAMES[k]}" for k in sorted(self.conserved_P)]
        names += [f"M{AXIS_NAMES[k]}" for k in sorted(self.conserved_M)]
        if self.norm_M_conserved:
            names.append("Mnorm")
        return names


def _parallel_axes(v):
    """Axes ``k`` with ``v`` parallel to ``e_k``; every axis when ``v == 0``."""
    v = np.asarray(v, dtype=float)
    nz = np.flatnonzero(v)
    if nz.size == 0:
        return frozenset(range(3))
    if nz.size == 1:
        return frozenset(nz.tolist())
    return frozenset()


def _axis_rotation(k, angle):
    e = np.zeros(3)
    e[k] = angle
    return so3.so3_exp(e)


def _sampled_report(pot, n_points=64, tol=1e-8, radius=4.0, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-radius, radius, size=(3, n_points))
    A0, A = pot.potentials(x)
    scale = max(1.0, float(np.max(np.abs(A0))), float(np.max(np.abs(A))))
    P = set()
    M = set()
    for k in range(3):
        shift = np.zeros((3, n_points))
        shift[k] = rng.uniform(-radius, radius, size=n_points)
        B0, Bv = pot.potentials(x + shift)
        if np.max(np.abs(B0 - A0)) <= tol * scale and np.max(np.abs(Bv - A)) <= tol * scale:
            P.add(k)
        ok = True
        for angle in rng.uniform(-np.pi, np.pi, size=4):
            U = _axis_rotation(k, angle)
            R0, Rv = pot.potentials(U @ x)
            if (np.max(np.abs(R0 - A0)) > tol * scale
                    or np.max(np.abs(Rv - U @ A)) > tol * scale):
                ok = False
                break
        if ok:
            M.add(k)
    return SymmetryReport(frozenset(P), frozenset(M), True)


def symmetry_report(pot, **sampling):
    """Which of energy, ``P_k`` and ``M_k`` the external potential conserves.

    ``P_k`` requires the potentials to be independent of ``x_k``; ``M_k``
    requires ``A0(U x) = A0(x)`` and ``A(U x) = U A(x)`` for every rotation
    ``U`` about the axis through the origin along ``e_k``. Built-in variants
    are classified exactly; custom ones by sampling, which cannot prove a
    symmetry.
    """
    if isinstance(pot, ZeroPotential):
        every = frozenset(range(3))
        return SymmetryReport(every, every, True)
    if isinstance(pot, UniformE):
        E0 = np.array(pot.E0)
        return SymmetryReport(frozenset(k for k in range(3) if E0[k] == 0.0),
                              _parallel_axes(E0), True)
    if isinstance(pot, UniformB):
        axes = _parallel_axes(pot.B0)
        return SymmetryReport(axes, axes, True)
    return _sampled_report(pot, **sampling)
