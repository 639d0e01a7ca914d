import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from randkrylov.counters import counting
from randkrylov.errors import DimensionMismatch, InvalidSketchSize
from randkrylov.sketch import SketchOperator, apply_sketch, build_srht, fwht, next_pow2


def test_one_dimensional_sketch():
    theta = build_srht(1, 1, seed=0)
    assert theta.signs[0] in (-1.0, 1.0)
    assert abs(apply_sketch(theta, np.array([3.5]))[0]) == 3.5


def test_full_hadamard_is_orthogonal():
    theta = build_srht(8, 8, seed=1)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.standard_normal(8)
        assert abs(np.linalg.norm(theta @ x) - np.linalg.norm(x)) <= 1e-14 * np.linalg.norm(x)


def test_subspace_distortion_n1000_s120():
    good = 0
    for seed in range(100):
        V, _ = np.linalg.qr(np.random.default_rng(10_000 + seed).standard_normal((1000, 10)))
        sv = np.linalg.svd(apply_sketch(build_srht(1000, 120, seed), V), compute_uv=False)
        good += bool(sv.min() >= 0.5 and sv.max() <= 1.5)
    assert good >= 95


def test_zero_maps_to_zero():
    theta = build_srht(37, 10, seed=2)
    np.testing.assert_array_equal(theta @ np.zeros(37), np.zeros(10))


def test_hadamard_column_by_hand():
    H4 = np.array(
        [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=float
    )
    theta = SketchOperator(4, 4, 4, np.ones(4), np.arange(4), None, 0.5)
    for j in range(4):
        e = np.zeros(4)
        e[j] = 1.0
        np.testing.assert_array_equal(apply_sketch(theta, e), 0.5 * H4[:, j])


def test_fwht_matches_dense_hadamard():
    x = np.random.default_rng(3).standard_normal((16, 3))
    np.testing.assert_allclose(fwht(x.copy()), scipy.linalg.hadamard(16) @ x, atol=1e-13)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fwht(np.ones(6))


def test_scaling_doubles_bit_identically():
    theta = build_srht(300, 40, seed=4)
    x = np.random.default_rng(4).standard_normal(300)
    assert np.array_equal(theta @ (2 * x), 2 * (theta @ x))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 300), seed=st.integers(0, 2**32 - 1), data=st.data())
def test_linearity_property(n, seed, data):
    s = data.draw(st.integers(1, next_pow2(n)))
    theta = build_srht(n, s, seed)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, n))
    a, b = rng.standard_normal(2)
    lhs = theta @ (a * x + b * y)
    rhs = a * (theta @ x) + b * (theta @ y)
    scale = abs(a) * np.linalg.norm(x) + abs(b) * np.linalg.norm(y)
    assert np.linalg.norm(lhs - rhs) <= 1e-14 * scale * math.sqrt(next_pow2(n)) + 1e-300


def test_isometry_at_full_size():
    n = 300
    theta = build_srht(n, next_pow2(n), seed=5)
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = rng.standard_normal(n)
        assert abs(np.linalg.norm(theta @ x) - np.linalg.norm(x)) <= 1e-13 * np.linalg.norm(x)


def test_matrix_application_is_columnwise():
    theta = build_srht(50, 12, seed=6)
    X = np.random.default_rng(6).standard_normal((50, 4))
    Y = theta @ X
    for j in range(4):
        np.testing.assert_array_equal(Y[:, j], theta @ X[:, j])


@pytest.mark.parametrize("n, s", [(10, 0), (10, 17), (0, 1)])
def test_invalid_sketch_size(n, s):
    with pytest.raises(InvalidSketchSize):
        build_srht(n, s, seed=0)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        build_srht(10, 4, seed=0) @ np.ones(11)


def test_operator_invariants():
    theta = build_srht(1000, 120, seed=7)
    assert theta.n_padded == 1024 and theta.shape == (120, 1000)
    assert np.unique(theta.selected_rows).size == 120
    assert set(np.unique(theta.signs)) <= {-1.0, 1.0}
    assert theta.scale == pytest.approx(1 / math.sqrt(120))
    with pytest.raises(ValueError):
        theta.signs[0] = 2.0
    with pytest.raises(AttributeError):
        theta.s = 3


def test_deterministic_for_fixed_seed():
    a, b = build_srht(500, 60, seed=9), build_srht(500, 60, seed=9)
    np.testing.assert_array_equal(a.signs, b.signs)
    np.testing.assert_array_equal(a.selected_rows, b.selected_rows)
    c = build_srht(500, 60, seed=10)
    assert not np.array_equal(a.selected_rows, c.selected_rows)


def test_unbiased_norm_on_average():
    x = np.random.default_rng(8).standard_normal(200)
    sq = [np.linalg.norm(build_srht(200, 16, seed) @ x) ** 2 for seed in range(2000)]
    assert np.mean(sq) == pytest.approx(np.linalg.norm(x) ** 2, rel=0.05)


def test_sketch_flops_counted():
    theta = build_srht(1000, 20, seed=0)
    with counting() as c:
        theta @ np.ones((1000, 3))
    assert c.sketch_flops == 3 * 1024 * 10


def test_embedding_quality_at_twice_the_dimension():
    n, m = 4096, 50
    good = 0
    for seed in range(100):
        Q, _ = np.linalg.qr(np.random.default_rng(20_000 + seed).standard_normal((n, m)))
        good += bool(np.linalg.cond(build_srht(n, 2 * m, seed) @ Q) <= 3.0)
    assert good >= 95, f"cond(Theta Q) <= 3 in only {good}/100 seeds"
