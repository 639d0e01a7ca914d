import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randkrylov.dense import condition_2norm, householder_qr, solve_upper_triangular
from randkrylov.errors import SingularTriangular

EPS = np.finfo(float).eps


def test_qr_identity():
    Q, R = householder_qr(np.eye(3))
    np.testing.assert_allclose(Q, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(R, np.eye(3), atol=1e-15)


def test_qr_single_column():
    Q, R = householder_qr(np.array([[3.0], [4.0]]))
    np.testing.assert_allclose(R, [[5.0]], rtol=1e-15)
    np.testing.assert_allclose(Q, [[0.6], [0.8]], rtol=1e-15)


def test_qr_random_residuals():
    M = np.random.default_rng(7).standard_normal((20, 5))
    Q, R = householder_qr(M)
    assert np.linalg.norm(Q.T @ Q - np.eye(5)) <= 1e-14
    assert np.linalg.norm(Q @ R - M) / np.linalg.norm(M) <= 1e-14
    assert np.allclose(np.tril(R, -1), 0.0)
    assert np.all(np.diag(R) >= 0)


def test_qr_reconstruction_bound():
    M = np.random.default_rng(8).standard_normal((60, 30))
    Q, R = householder_qr(M)
    bound = 10 * (EPS / 2) * np.linalg.norm(M) * max(M.shape)
    assert np.linalg.norm(Q @ R - M) <= bound


def test_qr_wide_rejected():
    with pytest.raises(ValueError):
        householder_qr(np.ones((2, 3)))


def test_qr_rank_deficient_gives_zero_diagonal():
    M = np.random.default_rng(1).standard_normal((10, 3))
    M[:, 2] = M[:, 0]
    _, R = householder_qr(M)
    assert abs(R[2, 2]) <= 1e-14 * abs(R[0, 0])


def test_qr_orthogonality_over_conditioning_range():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        rows = int(rng.integers(5, 60))
        cols = int(rng.integers(1, rows + 1))
        U, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
        W, _ = np.linalg.qr(rng.standard_normal((cols, cols)))
        kappa = 10.0 ** rng.uniform(0, 8)
        M = (U * np.geomspace(1.0, 1.0 / kappa, cols)) @ W.T
        Q, R = householder_qr(M)
        assert np.linalg.norm(Q.T @ Q - np.eye(cols)) <= 1e-12
        assert np.all(np.diag(R) >= 0)


@settings(max_examples=40, deadline=None)
@given(
    rows=st.integers(1, 25),
    extra=st.integers(0, 10),
    seed=st.integers(0, 2**32 - 1),
)
def test_qr_property(rows, extra, seed):
    cols = max(1, rows - extra)
    M = np.random.default_rng(seed).standard_normal((rows, cols))
    Q, R = householder_qr(M)
    assert Q.shape == (rows, cols) and R.shape == (cols, cols)
    assert np.linalg.norm(Q @ R - M) <= 1e-13 * max(1.0, np.linalg.norm(M))
    assert np.all(np.diag(R) >= 0)


def test_triangular_identity():
    B = np.random.default_rng(0).standard_normal((4, 3))
    np.testing.assert_array_equal(solve_upper_triangular(np.eye(4), B), B)


def test_triangular_by_hand():
    X = solve_upper_triangular(np.array([[2.0, 1.0], [0.0, 4.0]]), np.array([[3.0], [8.0]]))
    np.testing.assert_allclose(X, [[0.5], [2.0]], rtol=1e-15)


def test_triangular_random_residual():
    rng = np.random.default_rng(3)
    R = np.triu(rng.standard_normal((10, 10))) + 5 * np.eye(10)
    B = rng.standard_normal((10, 4))
    X = solve_upper_triangular(R, B)
    assert np.linalg.norm(R @ X - B) / np.linalg.norm(B) <= 1e-13


def test_triangular_right_side():
    rng = np.random.default_rng(4)
    R = np.triu(rng.standard_normal((6, 6))) + 4 * np.eye(6)
    B = rng.standard_normal((3, 6))
    X = solve_upper_triangular(R, B, side="right")
    assert np.linalg.norm(X @ R - B) / np.linalg.norm(B) <= 1e-13


def test_triangular_singular():
    R = np.diag([1.0, 1e-15, 2.0])
    with pytest.raises(SingularTriangular) as info:
        solve_upper_triangular(R, np.ones(3))
    assert info.value.index == 1


def test_triangular_vector_rhs():
    x = solve_upper_triangular(np.array([[2.0, 1.0], [0.0, 4.0]]), np.array([3.0, 8.0]))
    np.testing.assert_allclose(x, [0.5, 2.0])


def test_condition_identity():
    assert condition_2norm(np.eye(5)) == pytest.approx(1.0, abs=1e-15)


def test_condition_diagonal():
    assert condition_2norm(np.diag([10.0, 1.0, 0.1])) == pytest.approx(100.0, rel=1e-14)


def test_condition_duplicated_column_is_infinite():
    M = np.random.default_rng(5).standard_normal((40, 10))
    M[:, 7] = M[:, 2]
    assert condition_2norm(M) == np.inf


@pytest.mark.parametrize("alpha", [1e-6, 1.0, 1e6])
def test_condition_scaling_invariant(alpha):
    M = np.random.default_rng(6).standard_normal((30, 8))
    assert condition_2norm(alpha * M) == pytest.approx(condition_2norm(M), rel=1e-12)
