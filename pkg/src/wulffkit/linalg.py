"""Deterministic linear algebra for small symmetric matrices (n <= 4).

Eigenvalues come from cyclic Jacobi sweeps rather than LAPACK so that runs
are bit-reproducible across BLAS builds and thread counts.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError

_JACOBI_TOL = 1e-13
_MAX_SWEEPS = 64


def jacobi_eigh(a: np.ndarray, tol: float = _JACOBI_TOL):
    """Eigenvalues (ascending) and eigenvectors of a symmetric matrix.

    Cyclic Jacobi rotations; off-diagonal mass is reduced below
    ``tol * frobenius`` before returning.  Columns of the returned matrix
    are the eigenvectors.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise UsageError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(a).max())):
        raise UsageError("matrix must be symmetric")
    w = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = np.sqrt(np.sum(w * w)) or 1.0
    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(2.0 * sum(w[p, q] ** 2
                                for p in range(n) for q in range(p + 1, n)))
        if off <= tol * scale:
            break
        for p in range(n):
            for q in range(p + 1, n):
                if abs(w[p, q]) <= 0.1 * tol * scale / max(n, 1):
                    continue
                phi = 0.5 * np.arctan2(2.0 * w[p, q], w[q, q] - w[p, p])
                c, s = np.cos(phi), np.sin(phi)
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                w = rot.T @ w @ rot
                w[p, q] = w[q, p] = 0.5 * (w[p, q] + w[q, p])
                v = v @ rot
    eig = np.diag(w).copy()
    order = np.argsort(eig, kind="stable")
    return eig[order], v[:, order]


def eigvals_symmetric(a: np.ndarray) -> np.ndarray:
    return jacobi_eigh(a)[0]


def householder_frame(direction: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose last column is `direction` normalized.

    The first n-1 columns form a deterministic orthonormal basis of the
    hyperplane orthogonal to `direction` (Householder reflection mapping
    e_n to the normalized direction).
    """
    d = np.asarray(direction, dtype=float)
    norm = np.sqrt(np.sum(d * d))
    if norm == 0.0:
        raise UsageError("cannot build a frame from the zero vector")
    n = d.size
    unit = d / norm
    en = np.zeros(n)
    en[-1] = 1.0
    w = en - unit
    wn2 = np.sum(w * w)
    if wn2 < 1e-30:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(w, w) / wn2


def householder_frames(directions: np.ndarray) -> np.ndarray:
    """Batched `householder_frame`: (m, n) unit-ish rows -> (m, n, n)."""
    d = np.asarray(directions, dtype=float)
    norms = np.sqrt(np.sum(d * d, axis=-1, keepdims=True))
    if np.any(norms == 0.0):
        raise UsageError("cannot build a frame from the zero vector")
    unit = d / norms
    m, n = unit.shape
    en = np.zeros(n)
    en[-1] = 1.0
    w = en[None, :] - unit
    wn2 = np.sum(w * w, axis=-1)
    frames = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    ok = wn2 >= 1e-30
    scale = np.where(ok, wn2, 1.0)
    frames -= 2.0 * w[:, :, None] * w[:, None, :] / scale[:, None, None]
    frames[~ok] = np.eye(n)
    return frames
