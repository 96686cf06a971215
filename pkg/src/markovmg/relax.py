"""Weighted Jacobi smoothing for B and B^T.

One sweep damps the residual through the diagonal: x <- x + omega D^-1 (b - Bx).
The same kernel serves the setup phase (homogeneous and inhomogeneous
right-hand sides) and the pre/post smoothing inside the V-cycle.  Coarse
operators can develop zero diagonal entries; the ``skip`` policy leaves
such rows untouched instead of failing the whole sweep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .sparse import as_vector, spmv, spmv_transpose

logger = logging.getLogger(__name__)

_POLICIES = ("skip", "error")


@dataclass(frozen=True)
class SmootherConfig:
    """Damping weight, sweep counts, and zero-diagonal policy."""

    omega: float = 0.7
    sweeps_pre: int = 3
    sweeps_post: int = 3
    zero_diag_policy: str = "skip"

    def __post_init__(self):
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("omega must lie in (0, 1]")
        if self.sweeps_pre < 0 or self.sweeps_post < 0:
            raise ValueError("sweep counts must be nonnegative")
        if self.zero_diag_policy not in _POLICIES:
            raise ValueError(f"zero_diag_policy must be one of {_POLICIES}")


#: rows whose off-diagonal mass exceeds this multiple of the diagonal are
#: not relaxed (the sweep would amplify there instead of damping)
ROW_DOMINANCE_BOUND = 4.0


def degenerate_rows(B, diag: np.ndarray | None = None,
                    transpose: bool = False) -> np.ndarray:
    """Rows a Jacobi sweep must not relax: nonpositive or dominated diagonals.

    Coarse Petrov-Galerkin operators develop such rows where the
    interpolation resolves the local null space exactly (the product
    column collapses) or where a fit misfires; dividing by those
    diagonals amplifies instead of damping.  The affected unknowns are
    left to the coarse-grid correction, which owns them in a consistent
    hierarchy.  With ``transpose`` the dominance is measured along the
    columns of B (the rows of B^T).
    """
    if diag is None:
        diag = B.diagonal()
    offdiag = np.abs(B).sum(axis=0 if transpose else 1)
    offdiag = np.asarray(offdiag).ravel() - np.abs(diag)
    return (diag <= 0.0) | (offdiag > ROW_DOMINANCE_BOUND * diag)


def _apply_sweep(B, x, b, cfg, diag, transpose, skip=None):
    x = as_vector(x, B.shape[0])
    b = as_vector(b, B.shape[0])
    if diag is None:
        diag = B.diagonal()
    if skip is None:
        skip = degenerate_rows(B, diag, transpose=transpose)
    if skip.any():
        if cfg.zero_diag_policy == "error":
            row = int(np.flatnonzero(skip)[0])
            raise ValueError(f"degenerate diagonal entry {diag[row]:.3e} in row {row}")
        logger.debug("jacobi sweep skipping %d degenerate rows", int(skip.sum()))
    r = b - (spmv_transpose(B, x) if transpose else spmv(B, x))
    safe = np.where(skip, 1.0, diag)
    upd = cfg.omega * r / safe
    if skip.any():
        upd[skip] = 0.0
    return x + upd


def jacobi_sweep(B, x, b, cfg: SmootherConfig, diag=None, skip=None) -> np.ndarray:
    """One weighted Jacobi sweep for Bx = b; returns the new iterate."""
    return _apply_sweep(B, x, b, cfg, diag, transpose=False, skip=skip)


def jacobi_sweep_transpose(B, x, b, cfg: SmootherConfig, diag=None, skip=None) -> np.ndarray:
    """One weighted Jacobi sweep for B^T x = b (diag(B^T) = diag(B))."""
    return _apply_sweep(B, x, b, cfg, diag, transpose=True, skip=skip)


def jacobi_sweeps(B, x, b, cfg: SmootherConfig, count: int, diag=None,
                  transpose: bool = False) -> np.ndarray:
    """Apply ``count`` sweeps in a row."""
    if diag is None:
        diag = B.diagonal()
    skip = degenerate_rows(B, diag)
    for _ in range(count):
        x = _apply_sweep(B, x, b, cfg, diag, transpose, skip)
    return x
