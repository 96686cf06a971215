"""Dense kernel tests against reconstruction and residual oracles."""

import numpy as np
import pytest

from markovmg.dense import (EigenDecomposition, cholesky_spd, gen_sym_eig,
                            herm_eig_max, pinv_solve, qr_solve_ls, svd, sym_eig)
from markovmg.chains import birth_death


def test_sym_eig_diagonal():
    dec = sym_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [1.0, 2.0, 3.0])


def test_sym_eig_two_by_two():
    dec = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(dec.eigenvalues, [-1.0, 1.0])


def test_sym_eig_reconstruction():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((40, 40))
    A = 0.5 * (A + A.T)
    dec = sym_eig(A)
    rebuilt = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.T
    assert np.abs(rebuilt - A).max() <= 1e-10 * np.abs(A).max()
    gram = dec.eigenvectors.T @ dec.eigenvectors
    assert np.abs(gram - np.eye(40)).max() <= 1e-10


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_herm_eig_max_real_case_matches_sym_eig():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((15, 15))
    A = 0.5 * (A + A.T)
    lam, vec = herm_eig_max(A.astype(complex))
    assert abs(lam - sym_eig(A).eigenvalues[-1]) <= 1e-10


def test_herm_eig_max_diagonal():
    lam, _ = herm_eig_max(np.diag([2.0, -1.0]).astype(complex))
    assert lam == pytest.approx(2.0)


def test_herm_eig_max_residual():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    A = 0.5 * (A + A.conj().T)
    lam, vec = herm_eig_max(A)
    assert np.linalg.norm(A @ vec - lam * vec) <= 1e-10 * np.abs(A).max() * 30


def test_herm_eig_max_rejects_nonhermitian():
    with pytest.raises(ValueError):
        herm_eig_max(np.array([[0.0, 1.0], [2.0, 0.0]], dtype=complex))


def test_gen_sym_eig_identity_mass():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((12, 12))
    A = 0.5 * (A + A.T)
    dec = gen_sym_eig(A, np.eye(12))
    ref = sym_eig(A)
    assert np.allclose(dec.eigenvalues, ref.eigenvalues, atol=1e-10)


def test_gen_sym_eig_equal_matrices():
    rng = np.random.default_rng(4)
    L = rng.standard_normal((10, 10))
    M = L @ L.T + 10 * np.eye(10)
    dec = gen_sym_eig(M, M)
    assert np.allclose(dec.eigenvalues, 1.0, atol=1e-10)


def test_gen_sym_eig_residual_and_m_orthogonality():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((20, 20))
    A = 0.5 * (A + A.T)
    L = rng.standard_normal((20, 20))
    M = L @ L.T + 20 * np.eye(20)
    dec = gen_sym_eig(A, M)
    for k in range(20):
        v = dec.eigenvectors[:, k]
        res = A @ v - dec.eigenvalues[k] * (M @ v)
        assert np.linalg.norm(res) <= 1e-9 * np.abs(A).max() * 20
    gram = dec.eigenvectors.T @ M @ dec.eigenvectors
    assert np.abs(gram - np.eye(20)).max() <= 1e-9


def test_gen_sym_eig_reports_failing_pivot():
    A = np.eye(3)
    M = np.diag([1.0, -2.0, 1.0])
    with pytest.raises(ValueError, match="pivot 1"):
        gen_sym_eig(A, M)


def test_cholesky_matches_numpy():
    rng = np.random.default_rng(6)
    L = rng.standard_normal((15, 15))
    M = L @ L.T + 15 * np.eye(15)
    C = cholesky_spd(M)
    assert np.allclose(C @ C.T, M, atol=1e-10)


def test_svd_identity():
    _, s, _ = svd(np.eye(7))
    assert np.allclose(s, 1.0)


def test_svd_rank_one():
    x = np.array([1.0, 2.0, 2.0])
    y = np.array([3.0, 4.0])
    U, s, V = svd(np.outer(x, y))
    assert s[0] == pytest.approx(np.linalg.norm(x) * np.linalg.norm(y))
    assert np.allclose(s[1:], 0.0, atol=1e-12)


def test_svd_chain_matrix_singular():
    B = birth_death(64, 0.96).B.toarray()
    _, s, _ = svd(B)
    assert s[-1] <= 1e-12


def test_svd_reconstruction():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((9, 5))
    U, s, V = svd(A)
    assert np.allclose(U @ np.diag(s) @ V.T, A, atol=1e-12)


def test_pinv_solve_nonsingular_matches_direct():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((12, 12)) + 12 * np.eye(12)
    b = rng.standard_normal(12)
    assert np.allclose(pinv_solve(A, b), np.linalg.solve(A, b), atol=1e-10)


def test_pinv_solve_zero_matrix():
    assert np.array_equal(pinv_solve(np.zeros((4, 4)), np.ones(4)), np.zeros(4))


def test_pinv_solve_consistent_singular_system():
    B = birth_death(30, 0.9).B.toarray()
    rng = np.random.default_rng(9)
    b = B @ rng.standard_normal(30)  # consistent right-hand side
    x = pinv_solve(B, b)
    assert np.linalg.norm(B @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_pinv_solve_scaling_commutes():
    rng = np.random.default_rng(10)
    A = rng.standard_normal((8, 6))
    b = rng.standard_normal(8)
    assert np.allclose(pinv_solve(A, 3.0 * b), 3.0 * pinv_solve(A, b), rtol=1e-13)


def test_qr_solve_square():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((6, 6)) + 6 * np.eye(6)
    b = rng.standard_normal(6)
    assert np.allclose(qr_solve_ls(A, b), np.linalg.solve(A, b), atol=1e-10)


def test_qr_solve_consistent_overdetermined():
    rng = np.random.default_rng(12)
    A = rng.standard_normal((10, 4))
    x = rng.standard_normal(4)
    sol = qr_solve_ls(A, A @ x)
    assert np.allclose(sol, x, atol=1e-10)


def test_qr_solve_normal_equations_residual():
    rng = np.random.default_rng(13)
    A = rng.standard_normal((20, 5))
    b = rng.standard_normal(20)
    x = qr_solve_ls(A, b)
    assert np.abs(A.T @ (A @ x - b)).max() <= 1e-10


def test_qr_solve_rank_deficient_falls_back():
    A = np.zeros((5, 3))
    A[:, 0] = 1.0
    b = np.ones(5)
    x = qr_solve_ls(A, b)  # falls back to the pseudoinverse internally
    assert np.allclose(A @ x, b, atol=1e-12)
    assert np.allclose(x[1:], 0.0)


def test_embedding_spectrum_matches_svd():
    # the symmetric pairing of a matrix with its transpose has eigenvalues
    # equal to plus/minus the singular values
    rng = np.random.default_rng(14)
    for n in (10, 30, 60):
        A = rng.standard_normal((n, n))
        embed = np.zeros((2 * n, 2 * n))
        embed[:n, n:] = A
        embed[n:, :n] = A.T
        w = np.linalg.eigvalsh(embed)
        _, s, _ = svd(A)
        assert np.allclose(np.sort(np.abs(w)), np.sort(np.repeat(s, 2)), atol=1e-9)
