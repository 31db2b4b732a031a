import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rateless import _fallback, linalg
from rateless.errors import ConvergenceError, DimensionError
from rateless.linalg import Rng, sym_eigen


def test_multiply_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(linalg.matmul(a, linalg.identity(2)), a)


def test_multiply_hand_computed():
    out = linalg.matmul([[1, 0], [0, 2]], [[3], [4]])
    np.testing.assert_array_equal(out, [[3.0], [8.0]])


def test_transpose_involution(rng):
    a = rng.normal(size=(3, 5))
    np.testing.assert_array_equal(linalg.transpose(linalg.transpose(a)), a)


def test_shape_errors_name_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        linalg.matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(DimensionError):
        linalg.add(np.ones((2, 2)), np.ones((3, 2)))


def test_reductions():
    a = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(linalg.row_sums(a), [3.0, 12.0])
    np.testing.assert_array_equal(linalg.col_sums(a), [3.0, 5.0, 7.0])
    np.testing.assert_array_equal(linalg.scale(a, 2), 2 * a)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 32), st.integers(1, 32), st.integers(1, 32), st.integers(1, 32), st.integers(0, 2**31))
def test_matmul_associative(n, k, m, p, seed):
    r = np.random.default_rng(seed)
    a, b, c = r.normal(size=(n, k)), r.normal(size=(k, m)), r.normal(size=(m, p))
    left = linalg.matmul(linalg.matmul(a, b), c)
    right = linalg.matmul(a, linalg.matmul(b, c))
    assert np.max(np.abs(left - right)) <= 1e-10 * max(1.0, np.max(np.abs(left)))


def test_eigen_diagonal():
    w, v = sym_eigen([[2.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(w, [2.0, 1.0])
    np.testing.assert_array_equal(np.abs(v), np.eye(2))


def test_eigen_swap_matrix():
    w, v = sym_eigen([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(w, [1.0, -1.0], atol=1e-15)
    s = 1 / np.sqrt(2)
    # eigenvectors are defined up to sign
    np.testing.assert_allclose(np.abs(v[:, 0]), [s, s], atol=1e-15)
    np.testing.assert_allclose(np.abs(v[:, 1]), [s, s], atol=1e-15)
    assert v[0, 1] * v[1, 1] < 0


@pytest.mark.parametrize("n", [1, 2, 8, 17, 40])
def test_eigen_reconstruction(n, rng):
    a = rng.normal(size=(n, n))
    c = a + a.T
    w, v = sym_eigen(c)
    assert np.all(np.diff(w) <= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.T - c)) <= 1e-8 * np.max(np.abs(c))
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-8
    assert abs(w.sum() - np.trace(c)) <= 1e-8 * max(1.0, abs(np.trace(c)))


def test_eigen_covariance_nonnegative(rng):
    x = rng.normal(size=(50, 12)) @ rng.normal(size=(12, 12))
    w, _ = sym_eigen(x.T @ x / 50)
    assert w.min() >= -1e-12 * w.max()


def test_eigen_symmetrises_input():
    c = np.array([[2.0, 1.0 + 1e-12], [1.0, 2.0]])
    w, _ = sym_eigen(c)
    np.testing.assert_allclose(w, [3.0, 1.0], atol=1e-11)


def test_eigen_errors():
    with pytest.raises(DimensionError):
        sym_eigen(np.ones((2, 3)))
    a = np.random.default_rng(0).normal(size=(10, 10))
    with pytest.raises(ConvergenceError):
        sym_eigen(a + a.T, max_sweeps=1)


def test_eigen_zero_matrix():
    w, v = sym_eigen(np.zeros((3, 3)))
    np.testing.assert_array_equal(w, 0.0)
    np.testing.assert_array_equal(v, np.eye(3))


def test_kernels_agree_with_fallback(rng):
    from rateless import _core

    a = rng.normal(size=(12, 12))
    c = a + a.T
    a1, v1 = c.copy(), np.eye(12)
    a2, v2 = c.copy(), np.eye(12)
    s1 = _core.jacobi_sweeps(a1, v1, 1e-12, 100)
    s2 = _fallback.jacobi_sweeps(a2, v2, 1e-12, 100)
    assert s1 == s2
    np.testing.assert_allclose(a1, a2, atol=1e-12)
    np.testing.assert_allclose(v1, v2, atol=1e-12)


def test_hinge_kernels_agree(rng):
    from rateless import _core

    x = rng.normal(size=(40, 5))
    y = rng.integers(0, 3, 40).astype(np.int64)
    orders = np.stack([rng.permutation(40) for _ in range(3)]).astype(np.int64)
    w1, b1 = np.zeros((3, 5)), np.zeros(3)
    w2, b2 = np.zeros((3, 5)), np.zeros(3)
    _core.hinge_sgd(x, y, orders, w1, b1, 0.01, 1e-4)
    _fallback.hinge_sgd(x, y, orders, w2, b2, 0.01, 1e-4)
    np.testing.assert_allclose(w1, w2, atol=1e-12)
    np.testing.assert_allclose(b1, b2, atol=1e-12)


def test_rng_determinism():
    a = Rng(42).uniform(1000)
    b = Rng(42).uniform(1000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(Rng(42).uniform(10), Rng(43).uniform(10))
    assert not np.array_equal(Rng(42).derive(1).uniform(10), Rng(42).derive(2).uniform(10))


def test_rng_moments():
    u = Rng(7).uniform(1_000_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert 0.495 <= u.mean() <= 0.505
    z = Rng(8).normal(1_000_000)
    assert abs(z.mean()) <= 0.01
    assert 0.98 <= z.var() <= 1.02


def test_rng_normal_shapes():
    assert Rng(0).normal((3, 4)).shape == (3, 4)
    assert Rng(0).normal(5).shape == (5,)
    assert isinstance(Rng(0).normal(), float)
