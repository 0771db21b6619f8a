"""Linear algebra of so(3) and the right-invariant frame on SO(3).

Vectors are length-3 numpy arrays, matrices are 3x3 arrays. Rotations are
plain 3x3 arrays that satisfy ``R.T @ R == I`` and ``det(R) == 1`` to
``ROTATION_TOL``; :func:`check_rotation` enforces this where it matters.

Axis indices are zero based throughout (``0, 1, 2`` for ``e1, e2, e3``).
"""

import numpy as np

SKEW_TOL = 1e-9
ROTATION_TOL = 1e-9
SMALL_ANGLE = 1e-6

# [v_i, v_j] = -eps_ijk v_k for the right-invariant fields v_k(R) = hat(e_k) R.
_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_j, _i, _k] = -1.0


def hat(v):
    """Skew matrix of ``v``, so that ``hat(v) @ u == cross(v, u)``."""
    x, y, z = np.asarray(v, dtype=float)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(m, tol=SKEW_TOL):
    """Inverse of :func:`hat`.

    The input is antisymmetrized before extraction; a symmetric part whose
    Frobenius norm exceeds ``tol`` is rejected.
    """
    m = np.asarray(m, dtype=float)
    sym = 0.5 * (m + m.T)
    if np.linalg.norm(sym) > tol:
        raise ValueError(f"matrix is not skew-symmetric (|sym| = {np.linalg.norm(sym):.3e})")
    a = 0.5 * (m - m.T)
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def so3_exp(v):
    """Rotation ``exp(hat(v))`` by the Rodrigues formula."""
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    theta = np.sqrt(theta2)
    if theta < SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    k = hat(v)
    return np.eye(3) + a * k + b * (k @ k)


def orthogonality_residual(R):
    """Frobenius norm of ``R.T R - I``."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def is_rotation(R, tol=ROTATION_TOL):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return orthogonality_residual(R) <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def check_rotation(R, tol=ROTATION_TOL):
    R = np.asarray(R, dtype=float)
    if not is_rotation(R, tol):
        raise ValueError("matrix is not a proper rotation")
    return R


def right_field(k, R):
    """Right-invariant frame field ``v_k(R) = hat(e_k) @ R``."""
    if k not in (0, 1, 2):
        raise ValueError(f"axis index must be 0, 1 or 2, got {k!r}")
    e = np.zeros(3)
    e[k] = 1.0
    return hat(e) @ np.asarray(R, dtype=float)


def omega_from_rotation_rate(R, Rdot, tol=SKEW_TOL):
    """Spatial angular velocity ``vee(Rdot @ R.T)``."""
    return vee(np.asarray(Rdot, dtype=float) @ np.asarray(R, dtype=float).T, tol=tol)


def so3_structure_constants():
    """Array ``c`` with ``c[i, j, k]`` the coefficient of ``v_k`` in ``[v_i, v_j]``.

    For the right-invariant frame ``[v_1, v_2] = -v_3`` and cyclic, i.e.
    ``c[i, j, k] = -eps_ijk``.
    """
    return -_LEVI_CIVITA.copy()


def reorthonormalize(R, max_defect=0.1):
    """Nearest proper rotation to ``R`` (orthogonal polar factor)."""
    R = np.asarray(R, dtype=float)
    defect = orthogonality_residual(R)
    if not defect < max_defect:
        raise ValueError(f"matrix too far from SO(3) to project (|R^T R - I| = {defect:.3e})")
    u, s, vt = np.linalg.svd(R)
    if s[-1] <= 0.0 or np.linalg.det(u @ vt) < 0.0:
        raise ValueError("polar factor is improper or degenerate")
    return u @ vt
