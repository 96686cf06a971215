"""Field-of-values, range projection, and residual-bound tests."""

import numpy as np
import pytest

from markovmg.bootstrap import run_setup
from markovmg.chains import birth_death, tandem_queue, uniform_2d
from markovmg.fov import (FovResult, elman_bound, eigenvalue_dots, fov_boundary,
                          point_in_fov, project_range, projected_preconditioned,
                          theorem2_bound)
from markovmg.presets import build_problem, default_setup_config
from markovmg.solver import VCycleOperator
from markovmg.sparse import make_csr


def test_fov_symmetric_degenerates_to_segment():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((20, 20))
    A = 0.5 * (A + A.T)
    fov = fov_boundary(A, n_angles=64)
    assert np.abs(fov.boundary.imag).max() <= 1e-8
    w = np.linalg.eigvalsh(A)
    assert fov.boundary.real.min() == pytest.approx(w[0], abs=1e-8)
    assert fov.boundary.real.max() == pytest.approx(w[-1], abs=1e-8)


def test_fov_identity_is_a_point():
    fov = fov_boundary(np.eye(6), n_angles=32)
    assert np.abs(fov.boundary - 1.0).max() <= 1e-10
    assert fov.nu == pytest.approx(1.0, abs=1e-10)
    assert not fov.contains_origin


def test_fov_contains_origin_for_chain():
    p = uniform_2d(8)
    fov = fov_boundary(p.B.toarray(), n_angles=64)
    assert fov.contains_origin and fov.nu == 0.0


def test_fov_eigenvalues_inside_boundary():
    p = tandem_queue(7)
    fov = fov_boundary(p.B.toarray(), n_angles=128)
    for lam in fov.eigenvalues:
        assert point_in_fov(fov, complex(lam), slack=1e-6)


def test_fov_boundary_convex_position():
    p = tandem_queue(6)
    fov = fov_boundary(p.B.toarray(), n_angles=64)
    pts = np.column_stack([fov.boundary.real, fov.boundary.imag])
    m = len(pts)
    for k in range(m):
        a, b, c = pts[k], pts[(k + 1) % m], pts[(k + 2) % m]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        assert cross >= -1e-12


def test_doubly_stochastic_origin_on_boundary():
    # a symmetric circulant walk is doubly stochastic: both null vectors are
    # the constant and the field of values touches the origin
    n = 12
    A = np.zeros((n, n))
    for j in range(n):
        A[(j + 1) % n, j] = 0.5
        A[(j - 1) % n, j] = 0.5
    B = np.eye(n) - A
    fov = fov_boundary(B, n_angles=64)
    assert fov.nu <= 1e-9
    null_right = np.linalg.svd(B)[2][-1]
    null_left = np.linalg.svd(B.T)[2][-1]
    assert np.abs(np.abs(null_right) - np.abs(null_left)).max() <= 1e-10


def test_eigenvalue_dots_symmetric_cross_check():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((25, 25))
    A = 0.5 * (A + A.T)
    dots = eigenvalue_dots(A)
    w = np.linalg.eigvalsh(A)
    assert np.allclose(np.sort(dots.real), w, atol=1e-8)
    assert np.abs(dots.imag).max() <= 1e-8


def test_eigenvalue_dots_chain_has_zero():
    p = tandem_queue(6)
    dots = eigenvalue_dots(p.B.toarray())
    assert np.abs(dots).min() <= 1e-12


def test_tandem_spectrum_complex():
    p = tandem_queue(8)
    dots = eigenvalue_dots(p.B.toarray())
    assert np.abs(dots.imag).max() > 1e-3


def test_project_range_rank():
    p = birth_death(30, 0.9)
    proj = project_range(p.B)
    assert proj.basis.shape == (30, 29)
    assert np.abs(proj.basis.T @ proj.basis - np.eye(29)).max() <= 1e-10
    # the projected matrix is nonsingular
    s = np.linalg.svd(proj.projected, compute_uv=False)
    assert s[-1] > 0.0


def test_projected_fov_contained_in_original():
    # both hulls are inner approximations, so containment holds up to the
    # angular resolution of the outer one
    p = uniform_2d(6)
    fov = fov_boundary(p.B.toarray(), n_angles=256)
    proj = project_range(p.B)
    fov_hat = fov_boundary(proj.projected, n_angles=64)
    for z in fov_hat.boundary:
        assert point_in_fov(fov, complex(z), slack=1e-3)


def test_projected_preconditioned_bounded_away_from_zero():
    p = build_problem("uniform2d", n=289)
    cfg = default_setup_config("uniform2d", cycles=1, seed=1)
    res = run_setup(p, cfg)
    op = VCycleOperator(res.hierarchy, cfg.smoother)
    proj = projected_preconditioned(p.B, op)
    fov = fov_boundary(proj.projected, n_angles=64)
    assert fov.nu > 0.0 and not fov.contains_origin


def test_projected_preconditioned_single_level_projector():
    from markovmg.bootstrap import Hierarchy, Level
    from markovmg.relax import SmootherConfig
    from markovmg.sparse import identity
    p = birth_death(15, 0.8)
    lev = Level(0, p.B, p.B.diagonal(), identity(15), identity(15))
    op = VCycleOperator(Hierarchy([lev]), SmootherConfig())
    proj = projected_preconditioned(p.B, op)
    # C = B^+ makes CB the orthogonal projector onto range(B^T); projected
    # onto its range it is the identity
    assert np.abs(proj.projected - np.eye(proj.projected.shape[0])).max() <= 1e-8


def test_matrix_free_matches_dense():
    p = birth_death(40, 0.9)
    Bd = p.B.toarray()
    fov_dense = fov_boundary(Bd, n_angles=32)
    fov_free = fov_boundary(lambda v: Bd @ v, n_angles=32, n=40)
    assert np.allclose(fov_dense.boundary, fov_free.boundary, atol=1e-10)


def test_theorem_bound_edge_cases():
    point = FovResult(boundary=np.array([1.0 + 0j]), eigenvalues=np.array([1.0 + 0j]),
                      nu=1.0, contains_origin=False)
    zero = FovResult(boundary=np.array([0.0 + 0j]), eigenvalues=np.array([0j]),
                     nu=0.0, contains_origin=False)
    assert theorem2_bound(zero, point, 10) == 1.0
    assert theorem2_bound(point, point, 2) == 0.0


def test_starke_bound_improves_on_elman():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((30, 30)) * 0.1 + np.diag(2.0 + rng.random(30))
    fov = fov_boundary(A, n_angles=64)
    fov_inv = fov_boundary(np.linalg.inv(A), n_angles=64)
    norm = np.linalg.norm(A, 2)
    for k in (1, 5, 20):
        assert theorem2_bound(fov, fov_inv, k) <= elman_bound(fov, norm, k) + 1e-12


def test_bound_monotone_in_k():
    rng = np.random.default_rng(3)
    A = np.diag(1.0 + rng.random(10))
    fov = fov_boundary(A, n_angles=32)
    fov_inv = fov_boundary(np.linalg.inv(A), n_angles=32)
    vals = [theorem2_bound(fov, fov_inv, k) for k in (1, 2, 4, 8)]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_dense_cap_enforced():
    with pytest.raises(ValueError, match="capped"):
        fov_boundary(np.eye(5), n_angles=32, dense_cap=3)


def test_csv_output_shapes():
    from markovmg.fov import fov_to_csv, nu_sidecar
    p = uniform_2d(5)
    fov = fov_boundary(p.B.toarray(), n_angles=32)
    bcsv, ecsv = fov_to_csv(fov)
    assert bcsv.splitlines()[0] == "re,im"
    assert len(ecsv.splitlines()) == len(fov.eigenvalues) + 1
    import json
    doc = json.loads(nu_sidecar({"nu": fov.nu}))
    assert doc["nu"] == fov.nu
