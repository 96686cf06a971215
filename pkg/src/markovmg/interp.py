"""Least-squares interpolation and restriction from weighted test vectors.

Each fine row of the interpolation operator P is fitted to reproduce a set
of test vectors at that point from their values at nearby coarse points,
with per-vector weights that emphasize the vectors relaxation handles
worst.  The restriction Q is built the same way for the transposed
operator; for chain matrices its columns are additionally constrained so
the constant vector is reproduced exactly, which keeps the coarse-grid
column sums at zero on every level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coarsen import CfSplitting
from .dense import qr_solve_ls
from .sparse import adjacency_structure, csr_from_coo, make_csr, transpose

#: weights above this are treated as "huge but finite"
WEIGHT_CAP = 1e16

#: weights are also capped at this multiple of the median weight, so a single
#: nearly-converged test vector cannot blank out the others in the fits
WEIGHT_SPREAD = 1e4

#: Tikhonov damping for every row fit, relative to the level-wide data scale
RIDGE_KAPPA = 0.1

#: greedy additions whose trial coefficients exceed this are rejected
COEF_CAP = 10.0


@dataclass(frozen=True)
class InterpConfig:
    """Caliber bound, candidate search radius, and the constant constraint flag.

    ``nonnegative`` restricts the fitted coefficients to be nonnegative
    (convex combinations for the constrained restriction).  Transfer
    operators for chain matrices move positive steady-state mass around,
    and keeping their entries nonnegative preserves the sign structure of
    the coarse-grid products even where the test vectors carry little
    information.
    """

    caliber: int = 2
    search_radius: int = 1
    constrain_constant_in_q: bool = True
    improvement_tol: float = 1e-3
    nonnegative: bool = True

    def __post_init__(self):
        if self.caliber < 1:
            raise ValueError("caliber must be at least 1")
        if self.search_radius not in (1, 2):
            raise ValueError("search_radius must be 1 or 2")


@dataclass
class WeightedTestSet:
    """Unit-norm test vectors (rows) with positive weights; np.inf marks a constraint."""

    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape[0] != self.vectors.shape[0]:
            raise ValueError("need one weight per test vector")
        finite = self.weights[np.isfinite(self.weights)]
        if finite.size and finite.min() <= 0.0:
            raise ValueError("weights must be positive")

    @property
    def r(self) -> int:
        return self.vectors.shape[0]


def singular_test_weights(B, vectors, transpose_side: bool = False,
                          infinite_slot: int | None = None) -> WeightedTestSet:
    """Weights 1/||Bv||^2 (or 1/||B^T v||^2) for a stack of test vectors.

    Vectors are normalized to unit 2-norm first; nearly converged vectors
    get their weight capped at ``WEIGHT_CAP`` except for ``infinite_slot``,
    which is marked as an exact constraint (infinite weight).
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64)).copy()
    norms = np.linalg.norm(V, axis=1)
    norms[norms == 0.0] = 1.0
    V /= norms[:, None]
    op = B.T if transpose_side else B
    resid = np.linalg.norm((op @ V.T).T, axis=1)
    with np.errstate(divide="ignore", over="ignore"):
        w = 1.0 / resid ** 2
    w = np.minimum(np.nan_to_num(w, nan=WEIGHT_CAP, posinf=WEIGHT_CAP), WEIGHT_CAP)
    w = np.minimum(w, WEIGHT_SPREAD * max(np.median(w), 1.0 / WEIGHT_CAP))
    if infinite_slot is not None:
        w[infinite_slot] = np.inf
    return WeightedTestSet(vectors=V, weights=w)


def _weighted_ls(cols, target, sqrt_w, ridge=0.0):
    """Solve the weighted (ridge) LS problem for one row.

    ``ridge`` adds a Tikhonov term that biases ill-determined fits --
    near-parallel or vanishing data -- toward the minimal-norm coefficient
    choice.  Returns ``(coefficients, data_misfit, total_objective)``; the
    total objective (misfit plus penalty) is what nested model comparisons
    must use, since it never increases when a candidate is added.
    """
    A = sqrt_w[:, None] * cols
    b = sqrt_w * target
    if ridge > 0.0:
        m = cols.shape[1]
        A = np.vstack([A, ridge * np.eye(m)])
        b = np.concatenate([b, np.zeros(m)])
        coef = qr_solve_ls(A, b)
        res = A[:-m] @ coef - b[:-m]
    else:
        coef = qr_solve_ls(A, b)
        res = A @ coef - b
    data = float(res @ res)
    return coef, data, data + ridge ** 2 * float(coef @ coef)


def fit_row(fine_values, candidate_values, weights, caliber: int,
            improvement_tol: float = 1e-3, constrain: bool = False,
            ridge: float = 0.0, nonnegative: bool = True):
    """Greedy caliber-bounded weighted LS fit of one transfer-operator row.

    Parameters
    ----------
    fine_values : (r,) array
        Test-vector values at the fine point being interpolated.
    candidate_values : (r, m) array
        Test-vector values at the m candidate coarse points.
    weights : (r,) array
        Per-test weights; ``np.inf`` entries are dropped from the LS rows
        (they are satisfied exactly by the sum-to-one constraint).
    caliber : int
        Maximum number of coarse points to select.
    improvement_tol : float
        Stop adding points once the relative functional decrease falls
        below this (applies after the first point).
    constrain : bool
        Force the returned coefficients to sum to one.
    ridge : float
        Tikhonov damping passed through to the row solves.
    nonnegative : bool
        Restrict coefficients to be nonnegative (candidates whose optimal
        coefficient comes out negative are dropped from the fit).

    Returns
    -------
    (selected, coefficients, functional)
        Positions into the candidate list, matching coefficients, and the
        final weighted LS value over the finite-weight tests.
    """
    y = np.asarray(fine_values, dtype=np.float64)
    C = np.atleast_2d(np.asarray(candidate_values, dtype=np.float64))
    w = np.asarray(weights, dtype=np.float64)
    m = C.shape[1]
    if m == 0:
        raise ValueError("no candidate coarse points")
    finite = np.isfinite(w)
    if not finite.any():
        raise ValueError("need at least one finite-weight test vector")
    sqrt_w = np.sqrt(w[finite])
    yf = y[finite]
    Cf = C[finite]
    empty_value = float(np.sum(w[finite] * yf ** 2))

    def solve_model(trial):
        """LS fit on a candidate subset, dropping negative coefficients."""
        work = list(trial)
        while work:
            if constrain:
                base, rest = work[0], work[1:]
                if rest:
                    cols = Cf[:, rest] - Cf[:, [base]]
                    coef_rest, data, total = _weighted_ls(cols, yf - Cf[:, base],
                                                          sqrt_w, ridge)
                    coef = np.concatenate([[1.0 - coef_rest.sum()], coef_rest])
                else:
                    res = sqrt_w * (yf - Cf[:, base])
                    coef, data = np.array([1.0]), float(res @ res)
                    total = data
            else:
                coef, data, total = _weighted_ls(Cf[:, work], yf, sqrt_w, ridge)
            if not nonnegative or coef.min(initial=0.0) >= 0.0:
                return work, coef, data, total
            if len(work) == 1:
                # negative single-point fit: an inert row beats a sign flip
                return work, np.zeros(1), empty_value, empty_value
            work.pop(int(np.argmin(coef)))
        return [], np.zeros(0), empty_value, empty_value

    selected: list[int] = []
    coefs = np.zeros(0)
    current_data = empty_value
    current_total = empty_value

    while len(selected) < caliber and len(selected) < m:
        best = None
        for j in range(m):
            if j in selected:
                continue
            model, coef, data, total = solve_model(selected + [j])
            if selected and coef.size and np.abs(coef).max() > COEF_CAP:
                continue  # ballooning coefficients mark a noise-chasing fit
            if best is None or total < best[0]:
                best = (total, model, coef, data)
        if best is None:
            break
        total, model, coef, data = best
        if selected:
            if current_total <= 0.0 or (current_total - total) < improvement_tol * current_total:
                break
        if len(model) <= len(selected):
            break  # the candidate was dropped again; no progress possible
        selected = model
        coefs = coef
        current_data = data
        current_total = total
        if current_total <= 1e-30:
            break

    if not selected:
        # degenerate targets (all fitted values zero): keep a best-effort
        # single-point row so the fine point still receives a correction
        selected = [0]
        coefs = np.array([1.0]) if constrain else np.array([0.0])
        current_data = empty_value
    return (np.asarray(selected, dtype=np.int64),
            np.asarray(coefs, dtype=np.float64), current_data)


def _candidates(adj, coarse_mask, i, radius):
    one = adj.indices[adj.indptr[i]:adj.indptr[i + 1]]
    if radius == 1:
        return np.sort(one[coarse_mask[one]])
    if one.size == 0:
        return one
    chunks = [adj.indices[adj.indptr[j]:adj.indptr[j + 1]] for j in one]
    two = np.unique(np.concatenate([one] + chunks))
    return two[(two != i) & coarse_mask[two]]


def _build_rows(B, split: CfSplitting, tests: WeightedTestSet, cfg: InterpConfig,
                constrain: bool):
    """Shared row builder: returns an (n, n_c) operator acting like P."""
    n = B.shape[0]
    adj = adjacency_structure(B)
    coarse_mask = np.zeros(n, dtype=bool)
    coarse_mask[split.coarse] = True
    V = tests.vectors
    w = tests.weights
    finite = np.isfinite(w)
    # weighted data scale of the whole level; fits whose data sits far below
    # it (dead regions of the test vectors) collapse to near-zero
    # coefficients instead of chasing noise ratios, while regions whose
    # columns carry the level scale are essentially unbiased
    point_scale = np.sqrt(w[finite] @ V[finite] ** 2)
    level_scale = np.sqrt(np.mean(point_scale ** 2))
    ridge = RIDGE_KAPPA * level_scale
    rows, cols, vals = [], [], []
    rows.extend(split.coarse.tolist())
    cols.extend(range(split.n_coarse))
    vals.extend([1.0] * split.n_coarse)
    for i in split.fine:
        cand = _candidates(adj, coarse_mask, int(i), cfg.search_radius)
        if cand.size == 0 and cfg.search_radius == 1:
            cand = _candidates(adj, coarse_mask, int(i), 2)
        if cand.size == 0:
            # a point decoupled from every coarse point within two hops sits
            # in an inert region of the operator; it keeps an empty row and
            # is handled by relaxation alone
            continue
        sel, coef, _ = fit_row(V[:, i], V[:, cand], w, cfg.caliber,
                               cfg.improvement_tol, constrain=constrain,
                               ridge=ridge, nonnegative=cfg.nonnegative)
        chosen = cand[sel]
        rows.extend([int(i)] * len(chosen))
        cols.extend(split.coarse_rank[chosen].tolist())
        vals.extend(coef.tolist())
    return csr_from_coo(rows, cols, vals, (n, split.n_coarse))


def build_interpolation(B, split: CfSplitting, tests: WeightedTestSet,
                        cfg: InterpConfig):
    """Interpolation P: identity on coarse points, LS-fitted rows on fine points.

    Candidates for a fine row are the coarse points within
    ``cfg.search_radius`` hops in the graph of B + B^T (escalating to two
    hops when the direct neighborhood has none).
    """
    return _build_rows(B, split, tests, cfg, constrain=False)


def build_restriction(B, split: CfSplitting, tests: WeightedTestSet,
                      cfg: InterpConfig):
    """Restriction Q, built as an interpolation for B^T and transposed.

    With ``cfg.constrain_constant_in_q`` set, every column solves its LS
    problem subject to coefficients summing to one (the constraint is
    eliminated by substitution), so the operator reproduces the constant
    vector exactly and 1^T Q = 1^T holds to round-off.
    """
    W = _build_rows(transpose(B), split, tests, cfg,
                    constrain=cfg.constrain_constant_in_q)
    return make_csr(transpose(W))
