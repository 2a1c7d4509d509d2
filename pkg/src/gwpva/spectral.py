"""Perron-Frobenius analysis of the mean offspring matrix.

The mean matrix M[i, j] of an offspring parameterization drives first-order
population dynamics: E[N(t)] = N(0) M^t. Its dominant eigenvalue lambda,
right eigenvector u (reproductive value, as a row-space object) and left
eigenvector v govern growth, viability, and the survival bounds.
Normalization: sum_i u_i = 1 and sum_i u_i v_i = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ParameterDraw, _is_categorical

__all__ = ["SpectralTriple", "mean_matrix", "perron_triple", "project", "is_primitive"]

_SHIFT = 1e-12


@dataclass(frozen=True)
class SpectralTriple:
    """Dominant eigenvalue with normalized right (u) and left (v) eigenvectors.

    ``primitive_warning`` is set when the nonnegative pattern of M is not
    primitive, in which case power iteration may not converge and the
    dominant eigenvalue may not be simple; results should be read with care.
    """

    lam: float
    u: np.ndarray
    v: np.ndarray
    primitive_warning: bool = False
    iterations: int = 0
    residual: float = 0.0


def mean_matrix(draw: ParameterDraw) -> np.ndarray:
    """Mean offspring matrix M[i, j] = sum_k k p[i, j](k)."""
    K = draw.K
    M = np.zeros((K, K))
    for (i, j), law in draw.p.items():
        if _is_categorical(law):
            v = np.asarray(law, dtype=float)
            M[i - 1, j - 1] = float(np.arange(len(v)) @ v)
        else:
            M[i - 1, j - 1] = float(law.mean())
    return M


def is_primitive(M: np.ndarray) -> bool:
    """Primitivity of the nonnegative pattern of M.

    Uses the Wielandt bound: M is primitive iff the boolean pattern of
    M^(K^2 - 2K + 2) is strictly positive.
    """
    A = (np.asarray(M) > 0)
    K = A.shape[0]
    if K == 1:
        return bool(A[0, 0])
    target = K * K - 2 * K + 2
    P = np.eye(K, dtype=bool)
    B = A.copy()
    e = target
    while e:
        if e & 1:
            P = (P.astype(np.int64) @ B.astype(np.int64)) > 0
        B = (B.astype(np.int64) @ B.astype(np.int64)) > 0
        e >>= 1
    return bool(P.all())


def perron_triple(M: np.ndarray, tol: float = 1e-12, max_iter: int = 1000) -> SpectralTriple:
    """Dominant eigen-triple of a nonnegative matrix by shifted power iteration.

    Works on M + eps*I (eps = 1e-12) to break periodicity, accelerating the
    iteration by normalized repeated squaring (iterating A^(2^m) is power
    iteration with a giant exponent), then removes the shift. Raises
    ValueError for the zero matrix; a non-primitive pattern only sets
    ``primitive_warning``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("M must be square")
    if (M < 0).any():
        raise ValueError("M must be nonnegative")
    K = M.shape[0]
    if not M.any():
        raise ValueError("mean matrix is identically zero; no dominant eigenvalue")
    A = M + _SHIFT * np.eye(K)
    warn = not is_primitive(M)
    norm = float(np.abs(M).sum(axis=1).max())

    B = A / np.abs(A).max()
    for _ in range(60):
        B = B @ B
        B /= np.abs(B).max()
    u = B @ np.ones(K)
    v = np.ones(K) @ B
    if u.sum() <= 0 or v.sum() <= 0:
        raise ValueError("power iteration collapsed; M has a zero row/column structure")
    u /= u.sum()
    v /= v.sum()
    # refine against A itself to wash out squaring round-off
    lam = float(u @ (A @ u)) / float(u @ u)
    it = 0
    for it in range(1, max_iter + 1):
        u = A @ u
        v = v @ A
        u /= u.sum()
        v /= v.sum()
        lam = float(u @ (A @ u)) / float(u @ u)
        res = max(float(np.abs(A @ u - lam * u).max()),
                  float(np.abs(v @ A - lam * v).max()))
        if res <= tol * max(norm, 1e-300):
            break
    lam = max(lam - _SHIFT, 0.0)
    # normalize: sum u = 1 (already), sum u_i v_i = 1
    scale = float(u @ v)
    if scale <= 0:
        raise ValueError("degenerate eigenvectors; matrix may be reducible")
    v = v / scale
    residual = max(float(np.abs(M @ u - lam * u).max()),
                   float(np.abs(v @ M - lam * v).max()))
    return SpectralTriple(lam=lam, u=u, v=v, primitive_warning=warn,
                          iterations=it, residual=residual)


def project(M: np.ndarray, N0, t: int) -> np.ndarray:
    """Expected abundance E[N(t)] = N0 M^t (row vector convention)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    M = np.asarray(M, dtype=float)
    x = np.asarray(N0, dtype=float)
    return x @ np.linalg.matrix_power(M, t)
