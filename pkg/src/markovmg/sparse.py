"""Sparse CSR building blocks shared by every stage of the solver.

Matrices are ``scipy.sparse.csr_array`` objects kept in canonical form:
row offsets nondecreasing, column indices strictly increasing within each
row, duplicates merged, and no stored entry with magnitude below
``STRUCTURAL_ZERO``.  Vectors are 1-D float64 numpy arrays.  Everything
here is a pure function; inputs are never mutated, and products use a
fixed summation order (ascending column index) so repeated calls are
bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.io import mmread, mmwrite

STRUCTURAL_ZERO = 1e-300


def make_csr(data, shape=None) -> sparse.csr_array:
    """Build a canonical float64 CSR matrix from any scipy-convertible input.

    Duplicate entries are merged, column indices sorted, and stored values
    with magnitude below ``STRUCTURAL_ZERO`` dropped.
    """
    if sparse.issparse(data):
        A = sparse.csr_array(data)
    else:
        A = sparse.csr_array(np.asarray(data, dtype=np.float64), shape=shape)
    if A.dtype != np.float64:
        A = A.astype(np.float64)
    A.sum_duplicates()
    A.sort_indices()
    tiny = np.abs(A.data) < STRUCTURAL_ZERO
    if tiny.any():
        A.data[tiny] = 0.0
        A.eliminate_zeros()
    return A


def csr_from_coo(rows, cols, vals, shape) -> sparse.csr_array:
    """Canonical CSR from coordinate triplets (duplicates are summed)."""
    coo = sparse.coo_array((np.asarray(vals, dtype=np.float64),
                            (np.asarray(rows), np.asarray(cols))), shape=shape)
    return make_csr(coo)


def identity(n: int) -> sparse.csr_array:
    return sparse.eye_array(n, format="csr", dtype=np.float64)


def check_csr(M) -> None:
    """Raise if ``M`` violates the canonical-form invariants."""
    if not sparse.issparse(M) or M.format != "csr":
        raise TypeError("expected a CSR matrix")
    nrows = M.shape[0]
    indptr, indices = M.indptr, M.indices
    if indptr[0] != 0 or indptr[-1] != len(indices):
        raise ValueError("row offsets do not bracket the stored entries")
    if np.any(np.diff(indptr) < 0):
        raise ValueError("row offsets are not nondecreasing")
    for i in range(nrows):
        row = indices[indptr[i]:indptr[i + 1]]
        if row.size and (np.any(np.diff(row) <= 0) or row[-1] >= M.shape[1]):
            raise ValueError(f"row {i} has unsorted or out-of-range column indices")
    if np.any((np.abs(M.data) < STRUCTURAL_ZERO) & (M.data != 0.0)):
        raise ValueError("stored entry below the structural-zero threshold")


def as_vector(x, length: int | None = None) -> np.ndarray:
    """Validate and convert ``x`` to a contiguous 1-D float64 array."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"vector has length {v.shape[0]}, expected {length}")
    return v


def spmv(M, x) -> np.ndarray:
    """Matrix-vector product Mx with deterministic row-wise summation."""
    x = as_vector(x)
    if M.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix is {M.shape}, vector has length {x.shape[0]}")
    return M @ x


def spmv_transpose(M, x) -> np.ndarray:
    """Product M^T x computed from the CSR data without materializing M^T."""
    x = as_vector(x)
    if M.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: matrix is {M.shape}, vector has length {x.shape[0]}")
    return M.T @ x


def transpose(M) -> sparse.csr_array:
    """Explicit transpose in canonical CSR form."""
    return make_csr(M.T.tocsr())


def triple_product(Q, B, P, drop_tol: float = 0.0) -> sparse.csr_array:
    """Coarse-grid product QBP with sorted, merged rows.

    ``drop_tol`` removes computed entries of smaller magnitude; the default
    of 0 keeps everything (sparsity is controlled by the interpolation
    caliber, not by truncating the product).
    """
    if Q.shape[1] != B.shape[0] or B.shape[1] != P.shape[0]:
        raise ValueError(f"dimension mismatch in triple product: {Q.shape} x {B.shape} x {P.shape}")
    C = make_csr((Q @ B) @ P)
    if drop_tol > 0.0:
        keep = np.abs(C.data) >= drop_tol
        if not keep.all():
            C.data[~keep] = 0.0
            C.eliminate_zeros()
    return C


def adjacency_structure(M) -> sparse.csr_array:
    """Undirected pattern of M + M^T with unit weights and no diagonal."""
    pat = M.copy()
    pat.data = np.ones_like(pat.data)
    S = make_csr(pat + pat.T)
    S.setdiag(0.0)
    S.eliminate_zeros()
    S.data[:] = 1.0
    return S


def neighborhood(M, i: int, radius: int = 1, adj=None) -> np.ndarray:
    """Indices reachable from ``i`` within ``radius`` steps of the graph of M + M^T.

    The returned sorted array excludes ``i`` itself.  ``adj`` may carry a
    precomputed :func:`adjacency_structure` to amortize the symmetrization.
    """
    if radius not in (1, 2):
        raise ValueError("radius must be 1 or 2")
    if not 0 <= i < M.shape[0]:
        raise ValueError(f"index {i} out of range")
    S = adjacency_structure(M) if adj is None else adj
    one = S.indices[S.indptr[i]:S.indptr[i + 1]]
    if radius == 1:
        return np.sort(one)
    if one.size == 0:
        return one
    chunks = [S.indices[S.indptr[j]:S.indptr[j + 1]] for j in one]
    two = np.unique(np.concatenate([one] + chunks))
    return two[two != i]


def save_matrix_market(path, M, comment: str = "") -> None:
    """Write a sparse matrix in Matrix Market coordinate format (1-based)."""
    mmwrite(str(path), sparse.coo_matrix(M), comment=comment, field="real",
            precision=17, symmetry="general")


def load_matrix_market(path) -> sparse.csr_array:
    """Read a Matrix Market file into canonical CSR form."""
    return make_csr(mmread(str(path)))


def save_vector(path, x, comment: str = "") -> None:
    """Write a dense vector as a Matrix Market array (n x 1)."""
    mmwrite(str(path), np.asarray(x, dtype=np.float64).reshape(-1, 1),
            comment=comment, field="real", precision=17)


def load_vector(path) -> np.ndarray:
    arr = mmread(str(path))
    if sparse.issparse(arr):
        arr = arr.toarray()
    return np.asarray(arr, dtype=np.float64).ravel()
