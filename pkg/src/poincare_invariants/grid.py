"""Pseudo-spectral Maxwell fields on a periodic cube.

Scalar fields have shape ``(n, n, n)`` indexed ``[ix, iy, iz]``; vector
fields have shape ``(3, n, n, n)``. Grid points are ``x_i = -L/2 + i*dx``,
so positions are measured from the box centre. Derivatives are Fourier
multipliers with the Nyquist wavenumber removed, which keeps ``div curl``
and ``curl grad`` at round-off and makes the discrete curl skew-adjoint.

Total charge on a torus must vanish, so Gauss' law is imposed with a
uniform neutralizing background: ``div E = rho - mean(rho)``.
"""

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

_AXES = (-3, -2, -1)


class UnreliableQuadratureWarning(UserWarning):
    """Fields have not decayed at the box boundary."""


@dataclass(frozen=True)
class GridSpec:
    n: int
    box_length: float
    dealias: bool = False

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n!r}")
        if not self.box_length > 0:
            raise ValueError("box length must be positive")

    @property
    def dx(self):
        return self.box_length / self.n

    @property
    def cell_volume(self):
        return self.dx ** 3

    @cached_property
    def axis(self):
        return -0.5 * self.box_length + self.dx * np.arange(self.n)

    @cached_property
    def positions(self):
        """Grid point coordinates, shape ``(3, n, n, n)``."""
        return np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))

    @cached_property
    def _k(self):
        n, dx = self.n, self.dx
        kf = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        kr = 2.0 * np.pi * np.fft.rfftfreq(n, d=dx)
        kf[n // 2] = 0.0
        kr[-1] = 0.0
        if self.dealias:
            kmax = np.pi / dx
            kf[np.abs(kf) > 2.0 / 3.0 * kmax] = 0.0
            kr[np.abs(kr) > 2.0 / 3.0 * kmax] = 0.0
        kx = kf[:, None, None]
        ky = kf[None, :, None]
        kz = kr[None, None, :]
        shape = (n, n, n // 2 + 1)
        return tuple(np.broadcast_to(k, shape) for k in (kx, ky, kz))

    @cached_property
    def _k2(self):
        kx, ky, kz = self._k
        k2 = kx * kx + ky * ky + kz * kz
        inv = np.zeros_like(k2)
        np.divide(1.0, k2, out=inv, where=k2 > 0)
        return k2, inv

    @property
    def max_wavenumber(self):
        return np.pi / self.dx

    def check_support(self, radius):
        if radius > 0.5 * self.box_length:
            raise ValueError(f"support radius {radius:g} does not fit in box of length {self.box_length:g}")

    def min_image(self, q):
        """Displacements ``x - q`` under the minimum-image convention, shape ``(3, n, n, n)``."""
        L = self.box_length
        q = np.asarray(q, dtype=float).reshape(3, 1, 1, 1)
        return (self.positions - q + 0.5 * L) % L - 0.5 * L

    def integrate(self, f):
        """Grid quadrature ``sum f dx^3`` over the last three axes."""
        return np.sum(f, axis=_AXES) * self.cell_volume


def _fwd(f):
    return fft.rfftn(f, axes=_AXES)


def _inv(fk, n):
    return fft.irfftn(fk, s=(n, n, n), axes=_AXES)


def grad(f, grid):
    fk = _fwd(f)
    return np.stack([_inv(1j * k * fk, grid.n) for k in grid._k])


def div(F, grid):
    Fk = _fwd(F)
    kx, ky, kz = grid._k
    return _inv(1j * (kx * Fk[0] + ky * Fk[1] + kz * Fk[2]), grid.n)


def curl(F, grid):
    Fk = _fwd(F)
    kx, ky, kz = grid._k
    return np.stack([
        _inv(1j * (ky * Fk[2] - kz * Fk[1]), grid.n),
        _inv(1j * (kz * Fk[0] - kx * Fk[2]), grid.n),
        _inv(1j * (kx * Fk[1] - ky * Fk[0]), grid.n),
    ])


def inverse_laplacian(f, grid):
    """Mean-zero solution ``u`` of ``-Laplacian(u) = f - mean(f)``."""
    _, inv = grid._k2
    return _inv(_fwd(f) * inv, grid.n)


@dataclass(frozen=True)
class FieldState:
    E: np.ndarray
    B: np.ndarray

    def __add__(self, other):
        return FieldState(self.E + other.E, self.B + other.B)

    def __mul__(self, a):
        return FieldState(a * self.E, a * self.B)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid):
        shape = (3, grid.n, grid.n, grid.n)
        return cls(np.zeros(shape), np.zeros(shape))


@dataclass(frozen=True)
class GaugeFields:
    A0: np.ndarray
    A: np.ndarray
    Adot: np.ndarray


def sample_density(profile, q, grid):
    """Samples of ``rho(x - q)`` on the grid."""
    grid.check_support(profile.cutoff_radius)
    r = grid.min_image(q)
    return profile.radial(np.sqrt(np.sum(r * r, axis=0)))


def current_density(profile, q, qdot, omega, grid):
    """``(qdot + omega x (x - q)) rho(x - q)``."""
    grid.check_support(profile.cutoff_radius)
    r = grid.min_image(q)
    rho = profile.radial(np.sqrt(np.sum(r * r, axis=0)))
    w = np.asarray(omega, dtype=float)
    v = np.asarray(qdot, dtype=float).reshape(3, 1, 1, 1) + np.stack([
        w[1] * r[2] - w[2] * r[1],
        w[2] * r[0] - w[0] * r[2],
        w[0] * r[1] - w[1] * r[0],
    ])
    return v * rho


def coulomb_init(profile, q, grid):
    """Electrostatic field of the charge at ``q`` with neutralizing background; ``B = 0``."""
    rho = sample_density(profile, q, grid)
    phi = inverse_laplacian(rho, grid)
    return FieldState(-grad(phi, grid), np.zeros((3, grid.n, grid.n, grid.n)))


def maxwell_rhs(fields, j, grid):
    """``(curl B - j, -curl E)``."""
    return FieldState(curl(fields.B, grid) - j, -curl(fields.E, grid))


def gauss_residual(fields, profile, q, grid):
    """Max norm of ``div E - (rho(x - q) - mean(rho))``."""
    rho = sample_density(profile, q, grid)
    return float(np.max(np.abs(div(fields.E, grid) - (rho - rho.mean()))))


def div_b_residual(fields, grid):
    return float(np.max(np.abs(div(fields.B, grid))))


def gauge_reconstruct(fields, grid, tol=1e-8):
    """Coulomb-gauge potentials with ``B = curl A``, ``E = -grad A0 - Adot``.

    ``A`` is the divergence-free, mean-zero solution of ``curl A = B`` and
    ``A0`` solves ``-Laplacian(A0) = div E``.
    """
    residual = div_b_residual(fields, grid)
    if residual > tol:
        raise ValueError(f"B is not solenoidal (max |div B| = {residual:.3e})")
    A = inverse_laplacian(curl(fields.B, grid), grid)
    A0 = inverse_laplacian(div(fields.E, grid), grid)
    Adot = -fields.E - grad(A0, grid)
    return GaugeFields(A0, A, Adot)


def fields_from_gauge(gauge, grid):
    return FieldState(-grad(gauge.A0, grid) - gauge.Adot, curl(gauge.A, grid))


def cross(a, b):
    """Pointwise cross product of two vector fields (component axis first)."""
    return np.stack([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def field_energy(fields, grid):
    return 0.5 * float(grid.integrate(np.sum(fields.E ** 2 + fields.B ** 2, axis=0)))


def field_momentum(fields, grid):
    return grid.integrate(cross(fields.E, fields.B))


def boundary_ratio(fields):
    """Largest field magnitude on the box faces relative to the global maximum."""
    mag = np.sqrt(np.sum(fields.E ** 2, axis=0) + np.sum(fields.B ** 2, axis=0))
    peak = float(mag.max())
    if peak == 0.0:
        return 0.0
    faces = max(float(np.abs(mag[0]).max()), float(np.abs(mag[:, 0]).max()),
                float(np.abs(mag[:, :, 0]).max()))
    return faces / peak


def field_angular_momentum(fields, grid, warn=False, tol=1e-6):
    """``sum x x (E x B) dx^3`` with ``x`` measured from the box centre.

    The integrand is not periodic, so the value is only meaningful when the
    fields have decayed at the faces; with ``warn=True`` an
    :class:`UnreliableQuadratureWarning` is issued when they have not.
    """
    if warn and boundary_ratio(fields) > tol:
        warnings.warn("field magnitude at the box boundary exceeds "
                      f"{tol:g} of its maximum", UnreliableQuadratureWarning, stacklevel=2)
    return grid.integrate(cross(grid.positions, cross(fields.E, fields.B)))


def write_field_dump(path, fields, grid, t):
    """Header line ``n L t`` then little-endian float64 data ordered (component, z, y, x)."""
    data = np.concatenate([fields.E, fields.B]).transpose(0, 3, 2, 1)
    with open(path, "wb") as fh:
        fh.write(f"{grid.n} {grid.box_length!r} {t!r}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def read_field_dump(path):
    """Inverse of :func:`write_field_dump`; returns ``(fields, n, L, t)``."""
    with open(path, "rb") as fh:
        n, L, t = fh.readline().decode("ascii").split()
        n = int(n)
        raw = np.frombuffer(fh.read(), dtype="<f8")
    data = raw.reshape(6, n, n, n).transpose(0, 3, 2, 1)
    return FieldState(np.array(data[:3]), np.array(data[3:])), n, float(L), float(t)
