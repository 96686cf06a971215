"""Coarse/fine splittings: geometric halving and compatible relaxation.

Structured chains carry lattice coordinates and are coarsened by keeping
every other grid position per axis.  Unstructured chains are coarsened
algebraically: relaxation restricted to the fine points exposes which
variables it cannot handle, and a maximal independent set of those slow
points is promoted to the coarse grid until fine-point relaxation is fast
everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .sparse import adjacency_structure

MODES = ("geometric1d", "geometric2d", "cr")


@dataclass(frozen=True)
class CfSplitting:
    """Disjoint coarse/fine index sets covering 0..n-1."""

    coarse: np.ndarray
    fine: np.ndarray
    n: int

    def __post_init__(self):
        coarse = np.asarray(self.coarse, dtype=np.int64)
        fine = np.asarray(self.fine, dtype=np.int64)
        object.__setattr__(self, "coarse", coarse)
        object.__setattr__(self, "fine", fine)
        if len(coarse) == 0:
            raise ValueError("coarse set may not be empty")
        merged = np.concatenate([coarse, fine])
        if len(merged) != self.n or len(np.unique(merged)) != self.n:
            raise ValueError("coarse and fine sets must partition 0..n-1")
        rank = np.full(self.n, -1, dtype=np.int64)
        rank[coarse] = np.arange(len(coarse))
        object.__setattr__(self, "coarse_rank", rank)

    @property
    def n_coarse(self) -> int:
        return len(self.coarse)

    def to_json(self) -> str:
        return json.dumps({"n": int(self.n),
                           "coarse": self.coarse.tolist(),
                           "fine": self.fine.tolist()}, sort_keys=True)


def splitting_from_mask(coarse_mask: np.ndarray) -> CfSplitting:
    coarse_mask = np.asarray(coarse_mask, dtype=bool)
    return CfSplitting(coarse=np.flatnonzero(coarse_mask),
                       fine=np.flatnonzero(~coarse_mask),
                       n=coarse_mask.size)


@dataclass(frozen=True)
class CoarseningConfig:
    """Mode plus stop criteria and compatible-relaxation parameters."""

    mode: str = "cr"
    stop_size: int = 500
    cr_sweeps: int = 5
    cr_threshold: float = 0.7
    max_levels: int = 20
    cr_omega: float = 0.7

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.stop_size < 2:
            raise ValueError("stop_size must be at least 2")
        if not 0.0 < self.cr_threshold < 1.0:
            raise ValueError("cr_threshold must lie in (0, 1)")
        if self.max_levels < 1:
            raise ValueError("max_levels must be positive")


def _axis_positions(coords: np.ndarray) -> np.ndarray:
    """Rank of each coordinate among the sorted distinct values of its axis."""
    uniq, inverse = np.unique(coords, return_inverse=True)
    return inverse


def geometric_coarsen(geometry: np.ndarray, mode: str) -> CfSplitting:
    """Keep every other grid position per axis as a coarse point."""
    if geometry is None:
        raise ValueError("geometric coarsening needs coordinates")
    geometry = np.asarray(geometry, dtype=np.float64)
    if geometry.ndim != 2:
        raise ValueError("geometry must be an (n, d) array")
    n = geometry.shape[0]
    if mode == "geometric1d":
        mask = _axis_positions(geometry[:, 0]) % 2 == 0
    elif mode == "geometric2d":
        if geometry.shape[1] < 2:
            raise ValueError("2-D coarsening needs two coordinate columns")
        mask = ((_axis_positions(geometry[:, 0]) % 2 == 0)
                & (_axis_positions(geometry[:, 1]) % 2 == 0))
    else:
        raise ValueError(f"not a geometric mode: {mode!r}")
    if not mask.any():
        raise ValueError("geometric coarsening produced an empty coarse set")
    return splitting_from_mask(mask)


def cr_coarsen(B, cfg: CoarseningConfig, seed) -> CfSplitting:
    """Compatible-relaxation coarsening of the graph of B.

    Repeatedly relax the homogeneous system on the current fine points
    (coarse values frozen at zero) from a seeded random start.  After the
    habituation sweeps, points that still hold a large value relative to
    the largest remaining one are the ones fine-point relaxation cannot
    handle; a maximal independent set of them (largest values first) is
    promoted to the coarse grid.  Stops when no slow fine point remains.
    """
    n = B.shape[0]
    row_nnz = np.diff(B.indptr)
    if (row_nnz == 0).any():
        raise ValueError(f"matrix has an empty row ({int(np.flatnonzero(row_nnz == 0)[0])})")
    rng = np.random.default_rng(seed)
    adj = adjacency_structure(B)
    diag = B.diagonal()
    safe = np.where(diag == 0.0, 1.0, diag)
    dead = diag == 0.0
    coarse = np.zeros(n, dtype=bool)

    for _ in range(100):
        fine = ~coarse
        n_fine = int(fine.sum())
        if n_fine == 0:
            break
        sweeps = max(cfg.cr_sweeps, 1)
        x = np.zeros(n)
        x[fine] = rng.standard_normal(n_fine)
        x /= max(np.sqrt(np.mean(x[fine] ** 2)), 1e-300)
        for _sweep in range(sweeps):
            upd = cfg.cr_omega * (-(B @ x)) / safe
            upd[dead] = 0.0
            x = x + upd
            x[coarse] = 0.0
        # per-sweep decay rate of each point from its unit-scale start;
        # points decaying slower than cr_threshold per sweep are candidates
        mu = np.minimum(np.abs(x), 1e6) ** (1.0 / sweeps)
        mu[coarse] = 0.0
        candidates = np.flatnonzero(fine & (mu > cfg.cr_threshold))
        if candidates.size == 0:
            if not coarse.any():
                fallback = int(np.argmax(np.where(fine, mu, -1.0)))
                coarse[fallback] = True
                continue
            break
        order = candidates[np.lexsort((candidates, -mu[candidates]))]
        blocked = np.zeros(n, dtype=bool)
        picked = []
        for i in order:
            if blocked[i]:
                continue
            picked.append(i)
            blocked[adj.indices[adj.indptr[i]:adj.indptr[i + 1]]] = True
        coarse[np.asarray(picked, dtype=np.int64)] = True
    if not coarse.any():
        coarse[0] = True
    return splitting_from_mask(coarse)


def make_splitting(B, geometry, cfg: CoarseningConfig, seed=None) -> CfSplitting:
    """Dispatch on the configured coarsening mode."""
    if cfg.mode in ("geometric1d", "geometric2d"):
        return geometric_coarsen(geometry, cfg.mode)
    return cr_coarsen(B, cfg, seed)
