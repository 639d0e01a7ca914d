import numpy as np
import pytest

from randkrylov.errors import SingularTriangular
from randkrylov.krylov import sketched_gs_basis
from randkrylov.lsq import (
    LsqConfig,
    LsqMode,
    lsqr,
    sketch_and_solve,
    sketch_precond_lsqr,
    solve_lsq,
)
from randkrylov.matfun import expm
from randkrylov.sketch import build_srht

from conftest import random_sparse, unit_vector


def matrix_with_condition(rows, cols, cond, seed):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    W, _ = np.linalg.qr(rng.standard_normal((cols, cols)))
    return (U * np.geomspace(1.0, 1.0 / cond, cols)) @ W.T


def oracle(V, c):
    return np.linalg.lstsq(V, c, rcond=None)[0]


def rel(x, y):
    return np.linalg.norm(x - y) / np.linalg.norm(y)


# plain LSQR


def test_identity_system():
    c = np.random.default_rng(0).standard_normal(8)
    rep = lsqr(np.eye(8), c)
    np.testing.assert_allclose(rep.y, c, rtol=1e-14)
    assert rep.iterations <= 2 and rep.converged


def test_orthonormal_columns():
    rng = np.random.default_rng(1)
    Q, _ = np.linalg.qr(rng.standard_normal((200, 10)))
    c = rng.standard_normal(200)
    rep = lsqr(Q, c, LsqConfig(tol=1e-10))
    assert rel(rep.y, Q.T @ c) <= 1e-10


def test_condition_five_against_dense_oracle():
    # the stopping rule bounds the normal-equations residual, so a 1e-5
    # solution error needs a tolerance below the 1e-6 default
    V = matrix_with_condition(500, 20, 5.0, seed=2)
    c = np.random.default_rng(2).standard_normal(500)
    rep = lsqr(V, c, LsqConfig(tol=1e-8))
    assert rel(rep.y, oracle(V, c)) <= 1e-5


@pytest.mark.parametrize("seed", range(10))
def test_sketched_krylov_basis_reaches_tolerance_quickly(seed):
    n, m = 2048, 50
    A = random_sparse(n, 0.003, seed)
    dec = sketched_gs_basis(A, unit_vector(n, seed), m, build_srht(n, 2 * m, seed))
    assert np.linalg.cond(dec.V_m) <= 10
    rep = lsqr(dec.V_m, dec.v_next, LsqConfig(tol=1e-6))
    assert rep.converged and rep.iterations <= 25


@pytest.mark.parametrize("seed", range(5))
def test_residual_history_is_nonincreasing(seed):
    V = matrix_with_condition(300, 25, 1e3, seed)
    c = np.random.default_rng(seed).standard_normal(300)
    rep = lsqr(V, c, LsqConfig(tol=1e-12, max_iter=80))
    hist = np.array(rep.residual_history)
    assert np.all(np.diff(hist) <= 1e-12 * hist[0])
    assert rep.iterations <= 80


def test_iteration_cap_defaults_to_four_times_columns():
    V = matrix_with_condition(300, 10, 1e8, seed=3)
    c = np.random.default_rng(3).standard_normal(300)
    rep = lsqr(V, c, LsqConfig(tol=1e-15))
    assert rep.iterations <= 40


def test_zero_right_hand_side():
    rep = lsqr(np.eye(4)[:, :2], np.zeros(4))
    np.testing.assert_array_equal(rep.y, 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        LsqConfig(tol=0.0)
    with pytest.raises(ValueError):
        LsqConfig(max_iter=0)
    with pytest.raises(ValueError):
        lsqr(np.ones((2, 3)), np.ones(2))


# sketch-preconditioned LSQR


def test_precond_orthonormal_matches_plain():
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.standard_normal((500, 15)))
    c = rng.standard_normal(500)
    plain = lsqr(Q, c, LsqConfig(tol=1e-12))
    pre = sketch_precond_lsqr(Q, c, LsqConfig(tol=1e-12, mode=LsqMode.SketchPrecond), seed=4)
    assert rel(pre.y, plain.y) <= 1e-8


def test_precond_graded_ill_conditioned():
    # singular values graded from 1 down to 1e-6
    V = matrix_with_condition(500, 20, 1e6, seed=5)
    c = np.random.default_rng(5).standard_normal(500)
    y_star = oracle(V, c)
    cfg = LsqConfig(tol=1e-12, max_iter=60)
    pre = sketch_precond_lsqr(V, c, cfg, seed=5)
    plain = lsqr(V, c, cfg)
    assert pre.iterations <= 60
    err_pre, err_plain = rel(pre.y, y_star), rel(plain.y, y_star)
    assert err_pre <= 1e-6
    assert err_plain >= 10 * err_pre


def test_two_columns_need_no_preconditioner():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.standard_normal((400, 2)))
    V = Q * np.array([1.0, 1e-6])
    c = rng.standard_normal(400)
    for rep in (sketch_precond_lsqr(V, c, LsqConfig(tol=1e-12), seed=5), lsqr(V, c, LsqConfig(tol=1e-12))):
        assert rel(rep.y, oracle(V, c)) <= 1e-8


@pytest.mark.parametrize("cond", [1e2, 1e4, 1e6, 1e8])
def test_precond_iterations_independent_of_condition(cond):
    V = matrix_with_condition(1000, 30, cond, seed=6)
    c = np.random.default_rng(6).standard_normal(1000)
    rep = sketch_precond_lsqr(V, c, LsqConfig(tol=1e-10, max_iter=60), seed=6)
    assert rep.converged and rep.iterations <= 60
    assert rep.preconditioner_condition == pytest.approx(np.linalg.cond(V), rel=0.5)


def test_precond_consistent_system_recovers_coefficients():
    V = matrix_with_condition(300, 12, 1e4, seed=7)
    z = np.random.default_rng(7).standard_normal(12)
    rep = sketch_precond_lsqr(V, V @ z, LsqConfig(tol=1e-14, max_iter=60), seed=7)
    assert rel(rep.y, z) <= 1e-8


def test_precond_satisfies_normal_equations():
    V = matrix_with_condition(600, 20, 1e5, seed=8)
    c = np.random.default_rng(8).standard_normal(600)
    tol = 1e-10
    rep = sketch_precond_lsqr(V, c, LsqConfig(tol=tol, max_iter=60), seed=8)
    r = V @ rep.y - c
    assert np.linalg.norm(V.T @ r) <= 100 * tol * np.linalg.norm(V) * np.linalg.norm(r) * np.linalg.cond(V)
    assert np.linalg.norm(r) <= (1 + 1e-8) * np.linalg.norm(V @ oracle(V, c) - c)


def test_precond_rank_deficient():
    V = np.random.default_rng(9).standard_normal((100, 5))
    V[:, 4] = V[:, 1]
    with pytest.raises(SingularTriangular):
        sketch_precond_lsqr(V, np.ones(100), seed=9)


# sketch-and-solve


def test_sketch_and_solve_orthogonal_sketch_is_exact():
    rng = np.random.default_rng(10)
    V = rng.standard_normal((256, 10))
    c = rng.standard_normal(256)
    y = sketch_and_solve(V, c, build_srht(256, 256, seed=10))
    assert rel(y, oracle(V, c)) <= 1e-12


def test_sketch_and_solve_orthogonal_rhs_gives_zero():
    rng = np.random.default_rng(11)
    Q, _ = np.linalg.qr(rng.standard_normal((128, 6)))
    V, c = Q[:, :5], Q[:, 5]
    y = sketch_and_solve(V, c, build_srht(128, 128, seed=11))
    assert np.linalg.norm(y) <= 1e-12


def test_sketch_and_solve_is_coarse_but_close():
    # the error scales like sqrt(m / (s - m)) * ||r*|| / ||V y*||; the
    # right-hand side has a residual half the size of its in-range part
    errors = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        V = rng.standard_normal((2048, 20))
        inside = V @ rng.standard_normal(20)
        outside = rng.standard_normal(2048)
        outside -= V @ oracle(V, outside)
        c = inside + 0.5 * outside * np.linalg.norm(inside) / np.linalg.norm(outside)
        y = sketch_and_solve(V, c, build_srht(2048, 80, seed=seed))
        errors.append(rel(y, oracle(V, c)))
    assert max(errors) <= 0.5


def test_solve_lsq_dispatch():
    V = matrix_with_condition(256, 8, 10.0, seed=13)
    c = np.random.default_rng(13).standard_normal(256)
    y_star = oracle(V, c)
    for mode in LsqMode:
        rep = solve_lsq(V, c, LsqConfig(tol=1e-12, mode=mode), seed=1, theta=build_srht(256, 256, 1))
        assert rel(rep.y, y_star) <= 1e-8


# downstream sensitivity to the least-squares solution


def test_completed_compression_is_lipschitz_in_y():
    rng = np.random.default_rng(14)
    bound = (1 + np.sqrt(2)) ** 2
    for _ in range(30):
        m = int(rng.integers(3, 15))
        H = rng.standard_normal((m, m))
        H *= rng.uniform(0.5, 2.0) / np.linalg.norm(H, 2)
        h = rng.uniform(0.1, 1.0)
        y = rng.standard_normal(m)
        y_tilde = y + 1e-3 * rng.standard_normal(m)
        e_m = np.eye(m)[-1]
        M1 = H + h * np.outer(y, e_m)
        M2 = H + h * np.outer(y_tilde, e_m)
        diff = np.linalg.norm(expm(M1)[:, 0] - expm(M2)[:, 0])
        # f' = exp is bounded by e^r on a disc containing both fields of values
        radius = max(np.linalg.norm(M1, 2), np.linalg.norm(M2, 2))
        assert diff <= bound * np.exp(radius) * np.linalg.norm(h * (y - y_tilde))
