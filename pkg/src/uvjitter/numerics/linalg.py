"""Dense 4x4 linear algebra: cyclic Jacobi eigensolver, pivoted solve, determinant."""

import math
from typing import NamedTuple

import numpy as np

from ..errors import InputError, SingularMatrixError


class EigenDecomp(NamedTuple):
    values: np.ndarray   # descending
    vectors: np.ndarray  # columns are eigenvectors


def _as_square(m, name="matrix"):
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    return a


def jacobi_eigen(m, tol=1e-14, max_sweeps=60):
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the largest off-diagonal magnitude drops below
    ``tol * ||m||_F``.  Returns eigenvalues sorted in descending order with the
    matching orthonormal eigenvectors as columns.
    """
    a = _as_square(m)
    n = a.shape[0]
    scale = np.linalg.norm(a)
    if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12 * scale):
        raise InputError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    threshold = tol * scale

    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a))).max() if n > 1 else 0.0
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < abs(diff) * 2.0**-60:
                    # |tau| > 2**59: t -> 1/(2 tau), and tau itself may overflow
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J with J the (p, q) Givens rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    values = np.diag(a).copy()
    order = np.argsort(values)[::-1]
    return EigenDecomp(values[order], v[:, order])


def _lu_pivoted(a):
    """In-place style LU with partial pivoting. Returns (lu, perm, sign)."""
    lu = a.copy()
    n = lu.shape[0]
    perm = np.arange(n)
    sign = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        pivot = lu[k, k]
        if pivot == 0.0:
            continue
        lu[k + 1:, k] /= pivot
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, sign


def det4(a):
    """Determinant via pivoted LU."""
    a = _as_square(a)
    lu, _, sign = _lu_pivoted(a)
    return float(sign * np.prod(np.diag(lu)))


def solve4(a, b):
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Raises SingularMatrixError when ``|det(a)|`` is below ``1e-14 * ||a||^n``.
    """
    a = _as_square(a)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if b.shape != (n,):
        raise InputError(f"right-hand side must have shape ({n},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InputError("right-hand side has non-finite entries")

    lu, perm, sign = _lu_pivoted(a)
    det = float(sign * np.prod(np.diag(lu)))
    scale = np.linalg.norm(a)
    if scale == 0.0 or abs(det) < 1e-14 * scale ** n:
        raise SingularMatrixError(f"matrix is numerically singular (det ~ {det:.3e})", det=det)

    y = b[perm].copy()
    for i in range(n):
        y[i] -= lu[i, :i] @ y[:i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x
