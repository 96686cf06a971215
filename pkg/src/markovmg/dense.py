"""Small dense linear-algebra kernels.

These back the coarsest-level solves and the analysis tooling: symmetric,
Hermitian and generalized symmetric eigensolvers, SVD, pseudoinverse
application, and least-squares solves.  Sizes stay small (a few hundred to
~2000 rows), so LAPACK through numpy/scipy is the whole implementation;
the contracts here are about accuracy, input checking and error messages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectrum, eigenvalues ascending, eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def sym_eig(A) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix (ascending eigenvalues)."""
    A = _check_square(np.asarray(A, dtype=np.float64))
    scale = max(np.abs(A).max(), 1.0) if A.size else 1.0
    if np.abs(A - A.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric to 1e-12 relative")
    w, v = np.linalg.eigh(A)
    return EigenDecomposition(w, v)


def herm_eig_max(A) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and unit eigenvector of a Hermitian matrix."""
    A = _check_square(np.asarray(A, dtype=np.complex128))
    scale = max(np.abs(A).max(), 1.0) if A.size else 1.0
    if np.abs(A - A.conj().T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("matrix is not Hermitian to 1e-12 relative")
    w, v = np.linalg.eigh(A)
    return float(w[-1]), v[:, -1]


def cholesky_spd(M) -> np.ndarray:
    """Lower Cholesky factor of an SPD matrix, naming the failing pivot."""
    M = _check_square(np.asarray(M, dtype=np.float64))
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pass
    # Rerun an explicit outer-product factorization to locate the pivot.
    A = M.copy()
    n = A.shape[0]
    for k in range(n):
        pivot = A[k, k]
        if pivot <= 0.0:
            raise ValueError(
                f"matrix is not positive definite: Cholesky pivot {k} is {pivot:.6e}")
        rad = np.sqrt(pivot)
        A[k:, k] /= rad
        A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k + 1:, k])
    raise ValueError("matrix is not positive definite")  # pragma: no cover


def gen_sym_eig(A, M) -> EigenDecomposition:
    """Solve A v = lambda M v for symmetric A and SPD M.

    M is factorized as L L^T and the standard symmetric problem for
    L^-1 A L^-T is solved; eigenvectors are returned M-orthonormal.
    """
    A = _check_square(np.asarray(A, dtype=np.float64))
    M = _check_square(np.asarray(M, dtype=np.float64))
    if A.shape != M.shape:
        raise ValueError("operator and mass matrix sizes differ")
    scale = max(np.abs(A).max(), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > 1e-12 * scale:
        raise ValueError("operator matrix is not symmetric to 1e-12 relative")
    L = cholesky_spd(M)
    T = solve_triangular(L, A, lower=True)
    T = solve_triangular(L, T.T, lower=True).T
    w, y = np.linalg.eigh(0.5 * (T + T.T))
    v = solve_triangular(L, y, lower=True, trans="T")
    return EigenDecomposition(w, v)


def svd(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD A = U diag(s) V^T with singular values descending."""
    A = np.asarray(A, dtype=np.float64)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    return U, s, Vh.T


def pinv_solve(A, b, rank_tol: float = 1e-12) -> np.ndarray:
    """Apply the Moore-Penrose pseudoinverse: return A^+ b.

    Singular values below ``rank_tol`` times the largest are treated as
    zero, so the result is always defined, even for A = 0.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > rank_tol * s[0]
    coeff = (U[:, keep].T @ b) / s[keep]
    return Vt[keep].T @ coeff


class PinvOperator:
    """Precomputed pseudoinverse of a fixed matrix, applied to many vectors."""

    def __init__(self, A, rank_tol: float = 1e-12):
        A = np.asarray(A, dtype=np.float64)
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        keep = s > rank_tol * s[0] if s.size and s[0] > 0.0 else np.zeros(s.shape, bool)
        self._U = U[:, keep]
        self._V = Vt[keep].T
        self._inv_s = 1.0 / s[keep]
        self.shape = (A.shape[1], A.shape[0])

    def apply(self, b) -> np.ndarray:
        return self._V @ ((self._U.T @ b) * self._inv_s)


def qr_solve_ls(A, b) -> np.ndarray:
    """Least-squares minimizer of ||Ax - b|| via Householder QR.

    Falls back to the pseudoinverse when a diagonal entry of R collapses
    below 1e-13 times the largest entry of R (rank deficiency).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if A.shape[0] < A.shape[1]:
        raise ValueError("least-squares solve needs at least as many rows as columns")
    if A.shape[1] == 0:
        return np.zeros(0)
    Q, R = np.linalg.qr(A)
    rmax = np.abs(R).max(initial=0.0)
    if rmax == 0.0 or np.abs(np.diag(R)).min() < 1e-13 * rmax:
        return pinv_solve(A, b)
    return solve_triangular(R, Q.T @ b, lower=False)
