"""Field-of-values boundaries, range projections, and GMRES residual bounds.

The field of values of a matrix is traced by sweeping a rotation angle:
for each angle the top eigenvector of the Hermitian part of the rotated
matrix marks a supporting point of the boundary.  The convex hull of the
supporting points gives the boundary polygon, the spectrum is overlaid as
dots, and the distance of the hull to the origin feeds the residual
reduction bound for GMRES.  Projecting a singular matrix onto its range
relates the singular solve to a nonsingular one of dimension n-1, which
is where the bound actually applies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .dense import svd

DENSE_CAP = 1200


@dataclass
class FovResult:
    """Convex boundary polygon, eigenvalue dots, and the distance to the origin."""

    boundary: np.ndarray
    eigenvalues: np.ndarray
    nu: float
    contains_origin: bool


@dataclass
class ProjectedSystem:
    """Orthonormal range basis and the projected operator."""

    basis: np.ndarray
    projected: np.ndarray


def _as_dense(M, n: int | None = None) -> np.ndarray:
    if hasattr(M, "toarray"):
        M = M.toarray()
    if callable(M) and not isinstance(M, np.ndarray):
        if n is None:
            raise ValueError("matrix-free operators need an explicit dimension")
        cols = [np.asarray(M(col)) for col in np.eye(n)]
        return np.column_stack(cols)
    return np.asarray(M)


def _check_cap(n: int, cap: int):
    if n > cap:
        raise ValueError(f"dense analysis is capped at n = {cap}; "
                         f"got {n} (use a smaller instance)")


def eigenvalue_dots(M) -> np.ndarray:
    """Full spectrum of a dense matrix, sorted by (real, imag) for stable output."""
    M = _as_dense(M)
    _check_cap(M.shape[0], DENSE_CAP)
    vals = np.linalg.eigvals(M)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def _top_hermitian_eigvec(H, v0):
    """Unit top eigenvector of a dense Hermitian matrix, warm-started."""
    n = H.shape[0]
    if n <= 128:
        w, V = np.linalg.eigh(H)
        return V[:, -1]
    op = LinearOperator((n, n), matvec=lambda x: H @ x, dtype=complex)
    try:
        _, vec = eigsh(op, k=1, which="LA", v0=v0, tol=1e-10, maxiter=5000)
        return vec[:, 0]
    except Exception:
        w, V = np.linalg.eigh(H)
        return V[:, -1]


def fov_boundary(M, n_angles: int = 256, n: int | None = None,
                 dense_cap: int = DENSE_CAP) -> FovResult:
    """Trace the field-of-values boundary with an angle sweep.

    For each angle theta the top eigenpair of the Hermitian part of
    e^{i theta} M supplies one supporting point <Mx, x>.  The boundary is
    the convex hull of the supporting points; ``nu`` is the distance of
    the hull to the origin (zero when the origin lies inside).
    """
    if n_angles < 16:
        raise ValueError("need at least 16 angles")
    A = _as_dense(M, n)
    _check_cap(A.shape[0], dense_cap)
    A = A.astype(np.complex128)
    dim = A.shape[0]
    H = 0.5 * (A + A.conj().T)          # Hermitian part
    S = (A - A.conj().T) / 2j           # skew part, Hermitian
    points = np.empty(n_angles, dtype=np.complex128)
    v0 = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    v0 += 1e-3 * np.cos(np.arange(dim)) / np.sqrt(dim)
    v0 /= np.linalg.norm(v0)
    for j in range(n_angles):
        theta = 2.0 * np.pi * j / n_angles
        Ht = np.cos(theta) * H - np.sin(theta) * S
        vec = _top_hermitian_eigvec(Ht, v0)
        v0 = vec
        points[j] = np.vdot(vec, A @ vec)
    hull = _convex_hull(points)
    nu, inside = _origin_distance(hull)
    eigs = eigenvalue_dots(A)
    return FovResult(boundary=hull, eigenvalues=eigs, nu=nu, contains_origin=inside)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of complex points (counterclockwise)."""
    pts = np.unique(np.round(points, 15))
    pairs = sorted((p.real, p.imag) for p in pts)
    if len(pairs) <= 2:
        return np.array([complex(x, y) for x, y in pairs])

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pairs:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pairs):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if not hull:
        hull = [pairs[0], pairs[-1]]
    return np.array([complex(x, y) for x, y in hull])


def _origin_distance(hull: np.ndarray) -> tuple[float, bool]:
    """Distance of the hull to 0 and whether 0 is strictly inside."""
    if hull.size == 0:
        return np.inf, False
    if hull.size == 1:
        return float(abs(hull[0])), False
    pts = np.column_stack([hull.real, hull.imag])
    m = len(pts)
    dmin = np.inf
    inside = m >= 3
    for k in range(m if m >= 3 else 1):
        a = pts[k]
        b = pts[(k + 1) % m]
        ab = b - a
        denom = ab @ ab
        t = 0.0 if denom == 0.0 else np.clip(-(a @ ab) / denom, 0.0, 1.0)
        closest = a + t * ab
        dmin = min(dmin, float(np.hypot(*closest)))
        if m >= 3:
            crossz = ab[0] * (-a[1]) - ab[1] * (-a[0])
            if crossz < 0.0:
                inside = False
    if inside:
        return 0.0, True
    return dmin, False


def point_in_fov(fov: FovResult, z: complex, slack: float = 1e-8) -> bool:
    """Whether ``z`` lies in the boundary polygon, allowing ``slack`` outside."""
    hull = fov.boundary
    if hull.size == 0:
        return False
    if hull.size <= 2:
        a = np.array([hull[0].real, hull[0].imag])
        b = np.array([hull[-1].real, hull[-1].imag])
        p = np.array([z.real, z.imag])
        ab = b - a
        denom = ab @ ab
        t = 0.0 if denom == 0.0 else np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
        return float(np.hypot(*(a + t * ab - p))) <= slack
    pts = np.column_stack([hull.real, hull.imag])
    m = len(pts)
    scale = max(np.abs(pts).max(), 1.0)
    for k in range(m):
        a = pts[k]
        b = pts[(k + 1) % m]
        ab = b - a
        crossz = ab[0] * (z.imag - a[1]) - ab[1] * (z.real - a[0])
        if crossz < -slack * scale * max(np.hypot(*ab), 1e-300):
            return False
    return True


def project_range(B, rank_tol: float = 1e-12, dense_cap: int = DENSE_CAP) -> ProjectedSystem:
    """Project B onto an orthonormal basis of its range.

    For an irreducible chain matrix the rank is n-1 and the projected
    operator is nonsingular.
    """
    Bd = _as_dense(B)
    _check_cap(Bd.shape[0], dense_cap)
    U, s, _ = svd(Bd)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("zero matrix has no range to project onto")
    basis = U[:, s > rank_tol * s[0]]
    return ProjectedSystem(basis=basis, projected=basis.T @ Bd @ basis)


def projected_preconditioned(B, precond, rank_tol: float = 1e-12,
                             dense_cap: int = DENSE_CAP) -> ProjectedSystem:
    """Materialize the preconditioned operator CB and project onto its range."""
    n = B.shape[0]
    _check_cap(n, dense_cap)
    Bd = _as_dense(B)
    apply = precond.apply if hasattr(precond, "apply") else precond
    cols = [np.asarray(apply(Bd[:, j])) for j in range(n)]
    CB = np.column_stack(cols)
    U, s, _ = svd(CB)
    basis = U[:, s > rank_tol * s[0]]
    return ProjectedSystem(basis=basis, projected=basis.T @ CB @ basis)


def theorem2_bound(fov_m: FovResult, fov_minv: FovResult, k: int) -> float:
    """Residual reduction factor (1 - nu(F(M)) nu(F(M^-1)))^(k/2), clamped to [0, 1].

    The product of the two distances is below one whenever both are
    finite, so the bound predicts progress exactly when the field of
    values of M stays away from the origin.
    """
    base = 1.0 - fov_m.nu * fov_minv.nu
    base = min(max(base, 0.0), 1.0)
    return float(base ** (k / 2.0))


def elman_bound(fov_m: FovResult, norm_m: float, k: int) -> float:
    """The classical variant (1 - (nu / ||M||)^2)^(k/2) for comparison."""
    if norm_m <= 0.0:
        return 1.0
    base = 1.0 - (fov_m.nu / norm_m) ** 2
    base = min(max(base, 0.0), 1.0)
    return float(base ** (k / 2.0))


def fov_to_csv(fov: FovResult) -> tuple[str, str]:
    """Plot-ready CSV bodies: boundary points and eigenvalue dots."""
    blines = ["re,im"]
    for z in fov.boundary:
        blines.append(f"{z.real!r},{z.imag!r}")
    elines = ["re,im"]
    for z in fov.eigenvalues:
        elines.append(f"{z.real!r},{z.imag!r}")
    return "\n".join(blines) + "\n", "\n".join(elines) + "\n"


def nu_sidecar(values: dict) -> str:
    return json.dumps({k: float(v) for k, v in values.items()}, indent=2, sort_keys=True)
