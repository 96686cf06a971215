"""Adaptive multilevel setup driven by approximate singular triplets.

A setup cycle smooths a set of left/right test vectors on each level,
builds least-squares transfer operators from them, forms the coarse
operator and the accumulated mass matrices, and recurses.  On the
coarsest level the remaining small problem is solved exactly through a
symmetric eigenvalue problem of twice its size, whose eigenpairs split
into left/right singular-vector approximations.  Walking back up, the
triplets are interpolated, smoothed against inhomogeneous right-hand
sides, and their values refreshed with a generalized Rayleigh quotient.
Each additional cycle rebuilds the hierarchy from the improved vectors,
so the construction keeps lifting itself.

For chain matrices (zero column sums) the leading left vector is the
constant, which is pinned exactly on every level; the restriction is
built under a sum-to-one constraint so this structure survives on all
coarse grids.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .coarsen import CfSplitting, CoarseningConfig, make_splitting
from .dense import gen_sym_eig
from .interp import InterpConfig, build_interpolation, build_restriction, singular_test_weights
from .relax import SmootherConfig, degenerate_rows, jacobi_sweep, jacobi_sweep_transpose
from .sparse import identity, make_csr, save_matrix_market, spmv, spmv_transpose, triple_product


@dataclass
class TripletSet:
    """Approximate singular triplets: values plus left/right vectors as rows."""

    sigmas: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=np.float64)
        self.left = np.atleast_2d(np.asarray(self.left, dtype=np.float64))
        self.right = np.atleast_2d(np.asarray(self.right, dtype=np.float64))
        if not (len(self.sigmas) == self.left.shape[0] == self.right.shape[0]):
            raise ValueError("inconsistent triplet counts")

    @property
    def r(self) -> int:
        return len(self.sigmas)

    @property
    def n(self) -> int:
        return self.right.shape[1]

    def copy(self) -> "TripletSet":
        return TripletSet(self.sigmas.copy(), self.left.copy(), self.right.copy())


@dataclass(frozen=True)
class SetupConfig:
    """Knobs for the whole setup phase."""

    n_tests: int = 8
    setup_cycles: int = 1
    inner_passes: int = 1
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    interp: InterpConfig = field(default_factory=InterpConfig)
    coarsening: CoarseningConfig = field(default_factory=CoarseningConfig)
    seed: int = 1

    def __post_init__(self):
        if self.n_tests < 2:
            raise ValueError("need at least two test vectors")
        if self.setup_cycles < 1:
            raise ValueError("setup_cycles must be at least 1")
        if self.inner_passes < 1:
            raise ValueError("inner_passes must be at least 1")


@dataclass
class Level:
    """One level of the hierarchy; P/Q/split are absent on the coarsest."""

    index: int
    B: object
    diag: np.ndarray
    M: object
    N: object
    split: CfSplitting | None = None
    P: object | None = None
    Q: object | None = None
    geometry: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.B.shape[0]


@dataclass
class Hierarchy:
    levels: list

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def finest(self) -> Level:
        return self.levels[0]

    @property
    def coarsest(self) -> Level:
        return self.levels[-1]


@dataclass
class SetupResult:
    hierarchy: Hierarchy
    triplets: TripletSet
    x0: np.ndarray
    seconds: float = 0.0


def complexities(hierarchy: Hierarchy) -> tuple[float, float, int]:
    """Grid complexity, operator complexity, and level count."""
    levels = hierarchy.levels
    if not levels:
        raise ValueError("empty hierarchy")
    n0 = levels[0].n
    nnz0 = max(levels[0].B.nnz, 1)
    o_g = sum(lev.n for lev in levels) / n0
    o_c = sum(lev.B.nnz for lev in levels) / nnz0
    return float(o_g), float(o_c), len(levels)


def levels_at_least(hierarchy: Hierarchy, floor: int = 100) -> int:
    """Number of levels with at least ``floor`` variables (table reporting)."""
    return sum(1 for lev in hierarchy.levels if lev.n >= floor)


def rayleigh_sigma(u, v, B, M, N, prev: float = 0.0) -> float:
    """Generalized Rayleigh quotient u^T B v / sqrt(u^T M u) sqrt(v^T N v).

    Falls back to ``prev`` when either normalizing factor collapses.
    """
    du = np.sqrt(max(float(u @ (M @ u)), 0.0))
    dv = np.sqrt(max(float(v @ (N @ v)), 0.0))
    if du < 1e-15 or dv < 1e-15:
        return prev
    return float(u @ (B @ v)) / (du * dv)


def _constant_vector(n: int) -> np.ndarray:
    return np.full(n, 1.0 / np.sqrt(n))


def _normalize_rows(V: np.ndarray) -> None:
    norms = np.linalg.norm(V, axis=1)
    norms[norms == 0.0] = 1.0
    V /= norms[:, None]


def _refresh_sigmas(trips: TripletSet, B, M, N) -> None:
    """Recompute sigma per slot; flip the left vector so sigma stays >= 0.

    Values at round-off scale are treated as zero without flipping, so the
    pinned constant left vector keeps its sign.
    """
    for k in range(trips.r):
        s = rayleigh_sigma(trips.left[k], trips.right[k], B, M, N, prev=trips.sigmas[k])
        if s < -1e-13:
            trips.left[k] = -trips.left[k]
            s = -s
        trips.sigmas[k] = abs(s)


def init_test_vectors(B, cfg: SetupConfig, rng=None) -> TripletSet:
    """Smoothed random left/right test vectors; the first left slot is the constant."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    n = B.shape[0]
    r = cfg.n_tests
    diag = B.diagonal()
    right = rng.standard_normal((r, n))
    left = rng.standard_normal((r, n))
    zeros = np.zeros(n)
    sm = cfg.smoother
    for k in range(r):
        for _ in range(sm.sweeps_pre):
            right[k] = jacobi_sweep(B, right[k], zeros, sm, diag)
            left[k] = jacobi_sweep_transpose(B, left[k], zeros, sm, diag)
    left[0] = _constant_vector(n)
    _normalize_rows(right)
    _normalize_rows(left)
    trips = TripletSet(np.zeros(r), left, right)
    eye = identity(n)
    _refresh_sigmas(trips, B, eye, eye)
    order = np.concatenate([[0], 1 + np.argsort(trips.sigmas[1:], kind="stable")])
    return TripletSet(trips.sigmas[order], trips.left[order], trips.right[order])


def coarsest_triplets(B, M, N, r: int) -> TripletSet:
    """Exact generalized singular triplets of the coarsest operator.

    Solves the doubled symmetric eigenproblem pairing B with its transpose
    under the accumulated mass matrices, keeps the ``r`` smallest
    nonnegative eigenvalues (one per +/- pair), splits each eigenvector
    into its left/right halves, and normalizes the halves in the M- and
    N-inner products.
    """
    Bd = B.toarray() if hasattr(B, "toarray") else np.asarray(B, dtype=np.float64)
    Md = M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=np.float64)
    Nd = N.toarray() if hasattr(N, "toarray") else np.asarray(N, dtype=np.float64)
    Md = 0.5 * (Md + Md.T)
    Nd = 0.5 * (Nd + Nd.T)
    n = Bd.shape[0]
    embed = np.zeros((2 * n, 2 * n))
    embed[:n, n:] = Bd
    embed[n:, :n] = Bd.T
    mass = np.zeros((2 * n, 2 * n))
    mass[:n, :n] = Md
    mass[n:, n:] = Nd
    dec = gen_sym_eig(embed, mass)
    w, X = dec.eigenvalues, dec.eigenvectors
    take = min(r, n)
    sigmas = np.empty(take)
    left = np.empty((take, n))
    right = np.empty((take, n))
    for j in range(take):
        idx = n + j
        x = X[:, idx]
        u, v = x[:n].copy(), x[n:].copy()
        total = np.sqrt(max(float(x @ (mass @ x)), 1e-300))
        unorm = np.sqrt(max(float(u @ Md @ u), 0.0))
        vnorm = np.sqrt(max(float(v @ Nd @ v), 0.0))
        partner = n - 1 - j
        if unorm < 1e-8 * total and 0 <= partner < 2 * n:
            u = X[:n, partner].copy()
            unorm = np.sqrt(max(float(u @ Md @ u), 0.0))
        if vnorm < 1e-8 * total and 0 <= partner < 2 * n:
            v = X[n:, partner].copy()
            vnorm = np.sqrt(max(float(v @ Nd @ v), 0.0))
        u /= max(unorm, 1e-300)
        v /= max(vnorm, 1e-300)
        if float(u @ Bd @ v) < 0.0:
            v = -v
        sigmas[j] = max(w[idx], 0.0)
        left[j] = u
        right[j] = v
    # Degenerate operators can carry spurious null directions concentrated on
    # decoupled states (vanishing columns or rows).  Those states hold no
    # stationary mass, so project them out of the numerically-zero slots and
    # lead with the sign-coherent (Perron) direction.
    floor = max(1e-10, 1e-8 * sigmas.max(initial=0.0))
    tiny = np.flatnonzero(sigmas <= floor)
    if tiny.size > 1:
        scale = np.abs(Bd).sum()
        dead_cols = np.abs(Bd).sum(axis=0) <= 1e-12 * scale
        dead_rows = np.abs(Bd).sum(axis=1) <= 1e-12 * scale
        for j in tiny:
            if dead_cols.any():
                right[j, dead_cols] = 0.0
                norm = np.linalg.norm(right[j])
                if norm > 1e-8:
                    right[j] /= norm
            if dead_rows.any():
                left[j, dead_rows] = 0.0
                norm = np.linalg.norm(left[j])
                if norm > 1e-8:
                    left[j] /= norm
        scores = [abs(right[j].sum()) / max(np.abs(right[j]).sum(), 1e-300)
                  for j in tiny]
        lead = tiny[int(np.argmax(scores))]
        if lead != tiny[0]:
            order = np.arange(take)
            order[tiny[0]], order[lead] = lead, tiny[0]
            sigmas, left, right = sigmas[order], left[order], right[order]
    return TripletSet(sigmas, left, right)


def _smooth_block(B, diag, M, N, trips: TripletSet, cfg: SetupConfig,
                  inhomogeneous: bool) -> None:
    """One block of coupled sweeps on all triplets, then renormalization."""
    sm = cfg.smoother
    n = B.shape[0]
    zeros = np.zeros(n)
    skip = degenerate_rows(B, diag)
    skip_t = degenerate_rows(B, diag, transpose=True)
    for _ in range(sm.sweeps_pre):
        for k in range(trips.r):
            u, v, sig = trips.left[k], trips.right[k], trips.sigmas[k]
            if inhomogeneous:
                rhs_v = sig * (M @ u)
                rhs_u = sig * (N @ v)
            else:
                rhs_v = rhs_u = zeros
            new_v = jacobi_sweep(B, v, rhs_v, sm, diag, skip)
            new_u = jacobi_sweep_transpose(B, u, rhs_u, sm, diag, skip_t)
            # rescale runaway iterates so later products cannot overflow
            for vec in (new_v, new_u):
                peak = np.abs(vec).max()
                if peak > 1e100:
                    vec /= peak
            trips.right[k] = new_v
            trips.left[k] = new_u
            if inhomogeneous:
                trips.sigmas[k] = rayleigh_sigma(new_u, new_v, B, M, N, prev=sig)
    _normalize_rows(trips.left)
    _normalize_rows(trips.right)
    trips.left[0] = _constant_vector(n)
    _refresh_sigmas(trips, B, M, N)


class _SeedStream:
    """Deterministic stream of child seeds for per-level randomized steps."""

    def __init__(self, seed_sequence: np.random.SeedSequence):
        self._ss = seed_sequence

    def next(self) -> np.random.SeedSequence:
        return self._ss.spawn(1)[0]


#: a Galerkin product whose share of nonpositive diagonal rows exceeds this
#: marks a degenerating coarsening and truncates the hierarchy
SICK_DIAG_FRACTION = 0.02


def _operator_degenerate(Bc) -> bool:
    diag = Bc.diagonal()
    return (diag <= 0.0).sum() > SICK_DIAG_FRACTION * Bc.shape[0]


def bootstrap_cycle(B, M, N, trips: TripletSet, cfg: SetupConfig,
                    geometry=None, depth: int = 0, first_cycle: bool = True,
                    seed_stream: _SeedStream | None = None):
    """One recursive setup pass; returns (levels below here, refined triplets)."""
    n = B.shape[0]
    diag = B.diagonal()
    if seed_stream is None:
        seed_stream = _SeedStream(np.random.SeedSequence(cfg.seed))

    split = None
    if n >= cfg.coarsening.stop_size and depth + 1 < cfg.coarsening.max_levels:
        split = make_splitting(B, geometry, cfg.coarsening, seed_stream.next())
        if split.n_coarse >= 0.9 * n or split.n_coarse == n:
            split = None  # coarsening stalled; treat this level as coarsest
    if split is None:
        trips = coarsest_triplets(B, M, N, trips.r)
        return [Level(depth, B, diag, M, N, geometry=geometry)], trips

    _smooth_block(B, diag, M, N, trips, cfg, inhomogeneous=not first_cycle)

    levels = None
    for _ in range(cfg.inner_passes):
        v_tests = singular_test_weights(B, trips.right)
        u_tests = singular_test_weights(
            B, trips.left, transpose_side=True,
            infinite_slot=0 if cfg.interp.constrain_constant_in_q else None)
        P = build_interpolation(B, split, v_tests, cfg.interp)
        Q = build_restriction(B, split, u_tests, cfg.interp)
        Bc = triple_product(Q, B, P)
        if _operator_degenerate(Bc):
            # the product lost its diagonal sign structure (the test vectors
            # carry too little information at this depth); truncate here and
            # let the exact coarsest solve own the remaining scales
            trips = coarsest_triplets(B, M, N, trips.r)
            return [Level(depth, B, diag, M, N, geometry=geometry)], trips
        Mc = make_csr(Q @ M @ Q.T)
        Nc = make_csr(P.T @ (N @ P))
        coarse_geometry = geometry[split.coarse] if geometry is not None else None
        coarse = TripletSet(trips.sigmas.copy(),
                            trips.left[:, split.coarse].copy(),
                            trips.right[:, split.coarse].copy())
        _normalize_rows(coarse.left)
        _normalize_rows(coarse.right)
        sub_levels, coarse = bootstrap_cycle(Bc, Mc, Nc, coarse, cfg,
                                             coarse_geometry, depth + 1,
                                             first_cycle, seed_stream)
        trips = TripletSet(coarse.sigmas.copy(),
                           (Q.T @ coarse.left.T).T,
                           (P @ coarse.right.T).T)
        _normalize_rows(trips.left)
        _normalize_rows(trips.right)
        trips.left[0] = _constant_vector(n)
        _refresh_sigmas(trips, B, M, N)
        _smooth_block(B, diag, M, N, trips, cfg, inhomogeneous=True)
        levels = [Level(depth, B, diag, M, N, split, P, Q, geometry)] + sub_levels
    return levels, trips


def run_setup(problem, cfg: SetupConfig) -> SetupResult:
    """Full setup: initial vectors, the configured number of cycles, and x0.

    The returned hierarchy is the one built by the last cycle; x0 is the
    right vector of the smallest singular value, sign-fixed positive and
    normalized to unit 1-norm.
    """
    t0 = time.perf_counter()
    B = problem.B
    n = B.shape[0]
    root = np.random.SeedSequence(cfg.seed)
    ss_init, ss_levels = root.spawn(2)
    rng = np.random.default_rng(ss_init)
    trips = init_test_vectors(B, cfg, rng)
    stream = _SeedStream(ss_levels)
    eye = identity(n)
    hierarchy = None
    for cycle in range(cfg.setup_cycles):
        levels, trips = bootstrap_cycle(B, eye, eye, trips, cfg,
                                        geometry=problem.geometry, depth=0,
                                        first_cycle=(cycle == 0),
                                        seed_stream=stream)
        hierarchy = Hierarchy(levels)
        trips.left[0] = _constant_vector(n)
        _refresh_sigmas(trips, B, eye, eye)
    x0 = trips.right[0].copy()
    if not np.isfinite(x0).all() or np.abs(x0).sum() == 0.0:
        x0 = np.full(n, 1.0 / n)  # degenerate setup output; fall back to uniform
    peak = np.argmax(np.abs(x0))
    if x0[peak] < 0.0:
        x0 = -x0
    total = np.abs(x0).sum()
    if total > 0.0:
        x0 = x0 / total
    return SetupResult(hierarchy, trips, x0, seconds=time.perf_counter() - t0)


def triplet_residual(trips: TripletSet, B, M=None, N=None) -> float:
    """Sum of coupled residual norms over all triplets (setup progress metric)."""
    n = B.shape[0]
    if M is None:
        M = identity(n)
    if N is None:
        N = identity(n)
    total = 0.0
    for k in range(trips.r):
        u, v, s = trips.left[k], trips.right[k], trips.sigmas[k]
        total += np.linalg.norm(spmv(B, v) - s * (M @ u))
        total += np.linalg.norm(spmv_transpose(B, u) - s * (N @ v))
    return float(total)


def export_hierarchy(hierarchy: Hierarchy, directory) -> None:
    """Write per-level operators as Matrix Market files plus a JSON manifest."""
    from pathlib import Path

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"levels": []}
    o_g, o_c, depth = complexities(hierarchy)
    manifest["grid_complexity"] = o_g
    manifest["operator_complexity"] = o_c
    manifest["depth"] = depth
    for lev in hierarchy.levels:
        entry = {"index": lev.index, "n": int(lev.n), "nnz": int(lev.B.nnz)}
        save_matrix_market(out / f"B_{lev.index}.mtx", lev.B)
        if lev.P is not None:
            save_matrix_market(out / f"P_{lev.index}.mtx", lev.P)
            save_matrix_market(out / f"Q_{lev.index}.mtx", lev.Q)
            split_file = f"splitting_{lev.index}.json"
            (out / split_file).write_text(lev.split.to_json())
            entry["splitting"] = split_file
            entry["n_coarse"] = int(lev.split.n_coarse)
        manifest["levels"].append(entry)
    (out / "hierarchy.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
