"""Symmetric storage, Jacobi eigendecomposition and block notation."""

import numpy as np
import pytest

from nsdpcheck.symmat import (
    OrderedEigenDecomposition,
    SymMat,
    block,
    conjugate,
    eigen_decompose,
    frobenius_inner,
    pseudoinverse,
)

from conftest import random_psd, random_symmat


def test_frobenius_inner_examples():
    eye2 = SymMat.identity(2)
    assert frobenius_inner(eye2, eye2) == 2.0
    assert frobenius_inner(SymMat.diagonal([1, 0]), SymMat.diagonal([0, -1])) == 0.0
    a = SymMat.from_dense([[1, 2], [2, 3]])
    b = SymMat.from_dense([[0, 1], [1, 0]])
    # oracle: direct double sum over dense entries
    expected = float(np.sum(a.dense() * b.dense()))
    assert expected == 4.0
    assert frobenius_inner(a, b) == pytest.approx(expected, abs=1e-14)


def test_frobenius_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        frobenius_inner(SymMat.identity(2), SymMat.identity(3))


def test_frobenius_inner_matches_trace():
    rng = np.random.default_rng(7)
    for _ in range(20):
        m = int(rng.integers(1, 7))
        a, b = random_symmat(rng, m), random_symmat(rng, m)
        assert frobenius_inner(a, b) == pytest.approx(
            float(np.trace(a.dense() @ b.dense())), abs=1e-12
        )


def test_eigen_decompose_examples():
    d = eigen_decompose(SymMat.diagonal([2.0, 0.0]), rank_tol=1e-9)
    assert np.allclose(d.eigenvalues, [2.0, 0.0])
    assert d.pi == (0,) and d.omega == (1,)
    assert d.psd

    d = eigen_decompose(SymMat.identity(3))
    assert np.allclose(d.eigenvalues, [1.0, 1.0, 1.0])
    assert d.pi == (0, 1, 2) and d.omega == ()

    # characteristic polynomial of [[0,1],[1,0]] is l^2 - 1
    d = eigen_decompose(SymMat.from_dense([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(d.eigenvalues, [1.0, -1.0])
    assert d.pi == (0,) and d.omega == ()
    assert not d.psd


def test_eigen_roundtrip_property():
    rng = np.random.default_rng(11)
    for _ in range(60):
        m = int(rng.integers(1, 9))
        y = random_symmat(rng, m)
        d = eigen_decompose(y)
        p, lam = d.p_matrix, np.asarray(d.eigenvalues)
        dense = y.dense()
        assert np.linalg.norm(p @ p.T - np.eye(m)) <= 1e-10
        assert np.linalg.norm(p.T @ np.diag(lam) @ p - dense) <= 1e-8 * max(
            1.0, np.linalg.norm(dense)
        )
        assert np.all(np.diff(lam) <= 0)


def test_eigenvalues_match_lapack():
    # independent oracle: numpy's LAPACK eigensolver
    rng = np.random.default_rng(13)
    for _ in range(30):
        m = int(rng.integers(2, 9))
        y = random_symmat(rng, m)
        lam = np.asarray(eigen_decompose(y).eigenvalues)
        ref = np.sort(np.linalg.eigvalsh(y.dense()))[::-1]
        assert np.allclose(lam, ref, atol=1e-11)


def test_eigen_decompose_rejects_bad_rank_tol():
    with pytest.raises(ValueError):
        eigen_decompose(SymMat.identity(2), rank_tol=0.0)


def test_jacobi_reports_non_convergence():
    from nsdpcheck.symmat import JacobiConvergenceError, _jacobi

    dense = SymMat.from_dense([[0.0, 1.0], [1.0, 0.0]]).dense()
    with pytest.raises(JacobiConvergenceError):
        _jacobi(dense, off_target=1e-14, max_sweeps=0)


def test_pseudoinverse_examples():
    for diag, expected in [
        ([2.0, 0.0], [0.5, 0.0]),
        ([1.0, 1.0, 1.0], [1.0, 1.0, 1.0]),
        ([4.0, 1.0, 0.0], [0.25, 1.0, 0.0]),
    ]:
        d = eigen_decompose(SymMat.diagonal(diag))
        assert np.allclose(pseudoinverse(d).dense(), np.diag(expected), atol=1e-12)


def test_pseudoinverse_penrose_identities():
    rng = np.random.default_rng(17)
    for _ in range(30):
        m = int(rng.integers(1, 7))
        g = rng.standard_normal((m, m))
        y = SymMat.from_dense(g.T @ g, check_symmetry=False)
        d = eigen_decompose(y)
        ydag = pseudoinverse(d).dense()
        dense = y.dense()
        assert np.linalg.norm(dense @ ydag @ dense - dense) <= 1e-8 * max(
            1.0, np.linalg.norm(dense)
        )
        assert np.linalg.norm(ydag @ dense @ ydag - ydag) <= 1e-8 * max(
            1.0, np.linalg.norm(ydag)
        )


def test_pseudoinverse_rejects_indefinite():
    d = eigen_decompose(SymMat.diagonal([1.0, -1.0]))
    with pytest.raises(ValueError):
        pseudoinverse(d)


def test_conjugate_identity_and_isometry():
    rng = np.random.default_rng(19)
    d = eigen_decompose(SymMat.diagonal([3.0, 2.0, 1.0]))
    assert np.allclose(d.p_matrix, np.eye(3))
    a = random_symmat(rng, 3)
    assert np.allclose(conjugate(a, d).dense(), a.dense())

    y = random_symmat(rng, 5)
    dy = eigen_decompose(y)
    b = random_symmat(rng, 5)
    assert conjugate(b, dy).norm() == pytest.approx(b.norm(), abs=1e-10)
    # in its own eigenbasis the source becomes diagonal
    assert np.allclose(
        conjugate(y, dy).dense(), np.diag(dy.eigenvalues), atol=1e-10
    )


def test_conjugate_roundtrip():
    rng = np.random.default_rng(23)
    for _ in range(20):
        m = int(rng.integers(2, 7))
        d = eigen_decompose(random_symmat(rng, m))
        a = random_symmat(rng, m)
        p = d.p_matrix
        back = p.T @ conjugate(a, d).dense() @ p
        assert np.linalg.norm(back - a.dense()) <= 1e-10


def test_conjugate_dimension_mismatch():
    d = eigen_decompose(SymMat.identity(3))
    with pytest.raises(ValueError):
        conjugate(SymMat.identity(2), d)


def test_block_examples():
    d = eigen_decompose(SymMat.diagonal([3.0, 2.0, 1.0]))
    assert np.allclose(block(SymMat.diagonal([3.0, 2.0, 1.0]), d, [1, 2], [1, 2]),
                       np.diag([2.0, 1.0]))
    a = SymMat.from_dense([[1.0, 0.5, 0], [0.5, 2, -1], [0, -1, 3]])
    assert np.allclose(block(a, d, range(3), range(3)), conjugate(a, d).dense())

    dy = eigen_decompose(SymMat.diagonal([1.0, 0.0]))
    a2 = SymMat.from_dense([[5.0, 7.0], [7.0, 9.0]])
    assert np.allclose(block(a2, dy, dy.pi, dy.omega), [[7.0]])


def test_block_rejects_out_of_range():
    d = eigen_decompose(SymMat.identity(2))
    with pytest.raises(IndexError):
        block(SymMat.identity(2), d, [0, 2], [0])


def test_symmat_json_roundtrip():
    a = SymMat.from_dense([[1.0, -2.0], [-2.0, 4.0]])
    again = SymMat.from_json(a.to_json())
    assert again.m == 2
    assert np.array_equal(again.lower, a.lower)
    with pytest.raises(ValueError):
        SymMat.from_json({"m": 2})
    with pytest.raises(ValueError):
        SymMat.from_json({"m": 2, "lower": [1.0, 2.0]})


def test_symmat_validation():
    with pytest.raises(ValueError):
        SymMat(2, np.array([1.0, np.inf, 0.0]))
    with pytest.raises(ValueError):
        SymMat.from_dense([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        SymMat.from_dense(np.zeros((2, 3)))


def test_decomposition_invariants_enforced():
    y = SymMat.diagonal([2.0, 1.0])
    with pytest.raises(ValueError):
        OrderedEigenDecomposition(
            source=y,
            p_matrix=np.eye(2) * 2.0,
            eigenvalues=np.array([2.0, 1.0]),
            pi=(0, 1),
            omega=(),
            rank_tol=1e-8,
        )
    with pytest.raises(ValueError):
        OrderedEigenDecomposition(
            source=y,
            p_matrix=np.eye(2),
            eigenvalues=np.array([1.0, 2.0]),
            pi=(0, 1),
            omega=(),
            rank_tol=1e-8,
        )


def test_rank_classification_follows_tolerance():
    rng = np.random.default_rng(29)
    for _ in range(20):
        m = int(rng.integers(2, 7))
        rank = int(rng.integers(0, m + 1))
        y = random_psd(rng, m, rank)
        d = eigen_decompose(y)
        assert len(d.pi) == rank
        assert len(d.omega) == m - rank
        assert sorted(d.pi + d.omega) == list(range(m))
        assert d.psd
