"""Cyclic Jacobi eigendecomposition for small dense symmetric matrices.

The patch covariance is at most 64x64 (8x8 patches) and usually 16x16, so a
plain cyclic-by-row Jacobi sweep is accurate and fast enough once jitted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

MAX_SWEEPS = 100
OFF_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12


class AsymmetricMatrixError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, sweeps: int, residual: float):
        super().__init__(
            f"Jacobi iteration did not converge after {sweeps} sweeps "
            f"(off-diagonal norm {residual:.3e})"
        )
        self.sweeps = sweeps
        self.residual = residual


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order; ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


@numba.njit(cache=True)
def _off_norm(a):
    d = a.shape[0]
    s = 0.0
    for i in range(d):
        for j in range(d):
            if i != j:
                s += a[i, j] * a[i, j]
    return np.sqrt(s)


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    d = a.shape[0]
    sweeps = 0
    off = _off_norm(a)
    while off > tol and sweeps < max_sweeps:
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                # smaller root of t^2 + 2 t theta - 1 = 0
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(d):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(d):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                # the rotation annihilates a[p, q] exactly in exact arithmetic
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(d):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = _off_norm(a)
    return sweeps, off


def check_symmetric(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise AsymmetricMatrixError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN or Inf")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.T) > SYMMETRY_TOLERANCE * scale:
        raise AsymmetricMatrixError("matrix is not symmetric")
    return a


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def jacobi_eigen(m, tol: float = OFF_TOLERANCE, max_sweeps: int = MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm drops to ``tol * ||m||_F``.
    Raises :class:`AsymmetricMatrixError` for non-symmetric input and
    :class:`ConvergenceError` if ``max_sweeps`` is exhausted.
    """
    a = check_symmetric(m)
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    limit = tol * np.linalg.norm(a)
    sweeps, off = _jacobi_sweeps(a, v, limit, max_sweeps)
    if off > limit:
        raise ConvergenceError(sweeps, off)
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], fix_signs(v[:, order]), sweeps)
