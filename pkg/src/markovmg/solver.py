"""V-cycle preconditioning and GMRES for the singular steady-state system.

The hierarchy from the setup phase defines a fixed linear operator C (one
V-cycle from a zero initial guess with a pseudoinverse solve on the
coarsest level).  The steady state is then obtained by running GMRES on
the residual equation for the setup approximation, left-preconditioned
with C; convergence is always judged on the true scaled residual
||B x|| / ||x|| of the current iterate, never on the preconditioned one.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .bootstrap import Hierarchy, SetupConfig, complexities, levels_at_least, run_setup
from .dense import PinvOperator
from .relax import SmootherConfig, degenerate_rows, jacobi_sweep
from .sparse import as_vector, spmv

STOPPING_RULES = ("scaled_bx", "relative")


@dataclass(frozen=True)
class GmresConfig:
    """Restart length (None = unrestarted), caps, tolerance, stopping rule."""

    restart: int | None = None
    max_iters: int = 1000
    rtol: float = 1e-7
    stopping: str = "scaled_bx"

    def __post_init__(self):
        if self.rtol <= 0.0:
            raise ValueError("rtol must be positive")
        if self.restart is not None and self.restart < 1:
            raise ValueError("restart must be positive")
        if self.stopping not in STOPPING_RULES:
            raise ValueError(f"stopping must be one of {STOPPING_RULES}")


@dataclass
class SolveReport:
    """Everything a benchmark table needs from one solve."""

    iterations: int
    residual_history: list
    converged: bool
    x: np.ndarray
    o_g: float = 1.0
    o_c: float = 1.0
    levels: int = 1
    levels_reported: int = 1
    setup_cycles_used: int = 0
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0

    def to_json_dict(self, include_timings: bool = False) -> dict:
        doc = {
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "residual_history": [float(v) for v in self.residual_history],
            "grid_complexity": float(self.o_g),
            "operator_complexity": float(self.o_c),
            "levels": int(self.levels),
            "levels_reported": int(self.levels_reported),
            "setup_cycles": int(self.setup_cycles_used),
        }
        if include_timings:
            doc["setup_seconds"] = float(self.setup_seconds)
            doc["solve_seconds"] = float(self.solve_seconds)
        return doc


class VCycleOperator:
    """The implicit preconditioner: one V-cycle on Be = b from a zero guess.

    Applying the operator is linear in b, so it can serve as a fixed
    left preconditioner for GMRES.  The coarsest level applies a
    precomputed pseudoinverse.
    """

    def __init__(self, hierarchy: Hierarchy, smoother: SmootherConfig | None = None,
                 coarsest_rank_tol: float = 1e-12):
        if hierarchy.depth < 1:
            raise ValueError("hierarchy must have at least one level")
        self.hierarchy = hierarchy
        self.smoother = smoother if smoother is not None else SmootherConfig()
        self._coarse_solve = PinvOperator(hierarchy.coarsest.B.toarray(),
                                          rank_tol=coarsest_rank_tol)
        self._skip = [degenerate_rows(lev.B, lev.diag) for lev in hierarchy.levels]
        self.n = hierarchy.finest.n

    def apply(self, b) -> np.ndarray:
        b = as_vector(b, self.n)
        return self._descend(0, b)

    __call__ = apply

    def _descend(self, idx: int, b: np.ndarray) -> np.ndarray:
        levels = self.hierarchy.levels
        lev = levels[idx]
        if idx == len(levels) - 1:
            return self._coarse_solve.apply(b)
        sm = self.smoother
        skip = self._skip[idx]
        x = np.zeros_like(b)
        for _ in range(sm.sweeps_pre):
            x = jacobi_sweep(lev.B, x, b, sm, lev.diag, skip)
        residual = b - lev.B @ x
        xc = self._descend(idx + 1, lev.Q @ residual)
        x = x + lev.P @ xc
        for _ in range(sm.sweeps_post):
            x = jacobi_sweep(lev.B, x, b, sm, lev.diag, skip)
        return x

    def as_dense(self) -> np.ndarray:
        """Materialize C by applying it to the identity columns (analysis only)."""
        cols = [self.apply(col) for col in np.eye(self.n)]
        return np.column_stack(cols)


def _metric(stopping, B, x, b, denom0):
    if stopping == "scaled_bx":
        nx = np.linalg.norm(x)
        if nx == 0.0:
            return np.inf
        return float(np.linalg.norm(spmv(B, x)) / nx)
    return float(np.linalg.norm(b - spmv(B, x)) / denom0)


def gmres(B, b, x_init, cfg: GmresConfig, precond: VCycleOperator | None = None) -> SolveReport:
    """Restarted GMRES on Bx = b via the residual equation for ``x_init``.

    Arnoldi with modified Gram-Schmidt and Givens rotations.  With a
    preconditioner the Krylov space is built for v -> C(Bv) against the
    preconditioned residual (left preconditioning); the stopping rule is
    still evaluated on the unpreconditioned iterate.  Hitting the
    iteration cap reports ``converged=False`` instead of raising.
    """
    n = B.shape[0]
    b = as_vector(b, n)
    x0 = as_vector(x_init, n).copy()

    if precond is None:
        def op(v):
            return spmv(B, v)
        rhs = b - spmv(B, x0)
    else:
        def op(v):
            return precond.apply(spmv(B, v))
        rhs = precond.apply(b - spmv(B, x0))

    denom0 = max(np.linalg.norm(b - spmv(B, x0)), 1e-300)
    history = [_metric(cfg.stopping, B, x0, b, denom0)]
    if history[0] <= cfg.rtol:
        return SolveReport(0, history, True, x0)

    e = np.zeros(n)
    x = x0.copy()
    iters = 0
    converged = False
    breakdown_tol = 1e-14

    while iters < cfg.max_iters and not converged:
        r = rhs - op(e)
        beta = np.linalg.norm(r)
        if beta == 0.0:
            break
        m = min(cfg.restart or cfg.max_iters, cfg.max_iters - iters)
        V = np.empty((m + 1, n))
        V[0] = r / beta
        R = np.zeros((m, m))
        g = np.zeros(m + 1)
        g[0] = beta
        cos = np.zeros(m)
        sin = np.zeros(m)
        j_used = 0
        for j in range(m):
            w = op(V[j])
            h = np.empty(j + 2)
            for i in range(j + 1):
                h[i] = V[i] @ w
                w -= h[i] * V[i]
            h[j + 1] = np.linalg.norm(w)
            happy = h[j + 1] <= breakdown_tol * beta
            if not happy:
                V[j + 1] = w / h[j + 1]
            for i in range(j):
                t = cos[i] * h[i] + sin[i] * h[i + 1]
                h[i + 1] = -sin[i] * h[i] + cos[i] * h[i + 1]
                h[i] = t
            rad = np.hypot(h[j], h[j + 1])
            if rad == 0.0:
                cos[j], sin[j] = 1.0, 0.0
            else:
                cos[j], sin[j] = h[j] / rad, h[j + 1] / rad
            R[: j + 1, j] = h[: j + 1]
            R[j, j] = rad
            g[j + 1] = -sin[j] * g[j]
            g[j] = cos[j] * g[j]

            iters += 1
            j_used = j + 1
            y = solve_triangular(R[:j_used, :j_used], g[:j_used], lower=False)
            e_try = e + V[:j_used].T @ y
            x = x0 + e_try
            history.append(_metric(cfg.stopping, B, x, b, denom0))
            if history[-1] <= cfg.rtol:
                converged = True
            if converged or happy or iters >= cfg.max_iters:
                if happy:
                    # the Krylov space now contains the exact solution of the
                    # (preconditioned) residual equation
                    converged = True
                e = e_try
                break
        else:
            y = solve_triangular(R[:j_used, :j_used], g[:j_used], lower=False)
            e = e + V[:j_used].T @ y
            x = x0 + e
    return SolveReport(iters, history, converged, x)


def _sign_fix_l1(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    peak = int(np.argmax(np.abs(x)))
    if x[peak] < 0.0:
        x = -x
    total = np.abs(x).sum()
    return x / total if total > 0.0 else x


def solve_steady_state(problem, setup_cfg: SetupConfig | None,
                       gmres_cfg: GmresConfig) -> SolveReport:
    """Two-phase solve: adaptive setup, then preconditioned GMRES.

    With ``setup_cfg=None`` (or zero cycles) the setup phase is skipped
    and plain restarted GMRES runs from the uniform vector, which is the
    unpreconditioned baseline of the benchmark tables.  The returned
    steady state is sign-fixed and normalized to unit 1-norm.
    """
    B = problem.B
    n = problem.n
    if setup_cfg is None or setup_cfg.setup_cycles == 0:
        x0 = np.full(n, 1.0 / n)
        t0 = time.perf_counter()
        report = gmres(B, np.zeros(n), x0, gmres_cfg, precond=None)
        report.solve_seconds = time.perf_counter() - t0
        report.x = _sign_fix_l1(report.x)
        return report

    setup = run_setup(problem, setup_cfg)
    vop = VCycleOperator(setup.hierarchy, setup_cfg.smoother)
    t0 = time.perf_counter()
    report = gmres(B, np.zeros(n), setup.x0, gmres_cfg, precond=vop)
    report.solve_seconds = time.perf_counter() - t0
    report.setup_seconds = setup.seconds
    report.x = _sign_fix_l1(report.x)
    o_g, o_c, depth = complexities(setup.hierarchy)
    report.o_g, report.o_c, report.levels = o_g, o_c, depth
    report.levels_reported = levels_at_least(setup.hierarchy)
    report.setup_cycles_used = setup_cfg.setup_cycles
    return report


def power_iteration_oracle(B, iters: int) -> np.ndarray:
    """Independent steady-state oracle: iterate the lazy chain (I + A)/2.

    The half-step damping handles periodic chains (the plain walk need
    not converge on bipartite graphs); the fixed point is unchanged.
    Intended for cross-validation in tests at small sizes.
    """
    n = B.shape[0]
    x = np.full(n, 1.0 / n)
    for _ in range(iters):
        x = x - 0.5 * spmv(B, x)  # (I+A)/2 x = x - B x / 2
        total = np.abs(x).sum()
        if total > 0.0:
            x = x / total
    return x


def report_to_json(report: SolveReport, include_timings: bool = False) -> str:
    return json.dumps(report.to_json_dict(include_timings), indent=2, sort_keys=True)


def residuals_to_csv(report: SolveReport) -> str:
    lines = ["iteration,scaled_residual"]
    for k, v in enumerate(report.residual_history):
        lines.append(f"{k},{v!r}")
    return "\n".join(lines) + "\n"
