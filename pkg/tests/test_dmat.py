import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qlinphoton import dmat
from qlinphoton.errors import DimensionError, ValidationError

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def cplx(shape):
    return st.tuples(arrays(float, shape, elements=finite), arrays(float, shape, elements=finite)).map(
        lambda p: p[0] + 1j * p[1]
    )


def test_delta_zero_and_identity():
    assert np.array_equal(np.asarray(dmat.delta(np.zeros((2, 3)), np.zeros((2, 3)))), np.zeros((4, 6)))
    assert np.array_equal(np.asarray(dmat.delta(np.eye(3), np.zeros((3, 3)))), np.eye(6))


def test_delta_beamsplitter_is_block_diagonal():
    a = np.sqrt(0.5)
    S = np.array([[a, a], [-a, a]])
    X = np.asarray(dmat.delta(S, np.zeros((2, 2))))
    assert np.allclose(X[:2, :2], S) and np.allclose(X[2:, 2:], S)
    assert not np.any(X[:2, 2:]) and not np.any(X[2:, :2])


def test_delta_shape_mismatch():
    with pytest.raises(DimensionError):
        dmat.delta(np.eye(2), np.zeros((2, 3)))


def test_doubled_matrix_rejects_broken_structure():
    X = dmat.delta_array(np.eye(2), np.zeros((2, 2)))
    X[3, 3] += 1e-6
    with pytest.raises(ValidationError):
        dmat.DoubledMatrix(X)
    dmat.DoubledMatrix(X, tol=1e-5)


def test_flat_identity():
    assert np.array_equal(dmat.flat(np.eye(4)), np.eye(4))


@given(cplx((2, 3)), cplx((2, 3)))
def test_flat_involution_and_block_formula(U, V):
    X = dmat.delta(U, V)
    assert np.allclose(np.asarray(X.flat().flat()), np.asarray(X))
    assert np.allclose(np.asarray(dmat.flat(X)), dmat.delta_array(U.conj().T, -V.T))


@given(cplx((2, 2)), cplx((2, 2)), cplx((2, 2)), cplx((2, 2)))
def test_products_stay_doubled_up(U1, V1, U2, V2):
    P = dmat.delta(U1, V1) @ dmat.delta(U2, V2)
    assert isinstance(P, dmat.DoubledMatrix)
    # flat reverses products
    lhs = dmat.flat(np.asarray(P))
    rhs = dmat.flat(dmat.delta_array(U2, V2)) @ dmat.flat(dmat.delta_array(U1, V1))
    assert np.allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(lhs).max()))


def test_swap_conjugates_doubled_vectors():
    a = np.array([1 + 2j, -0.5j])
    x = np.concatenate([a, a.conj()])
    assert np.allclose(dmat.swap(2) @ x, x.conj())


def test_theta_and_j():
    assert np.allclose(dmat.Theta(2) @ dmat.Theta(2), -np.eye(4))
    assert np.allclose(dmat.J(2) @ dmat.J(2), np.eye(4))


def test_flat_on_stacks():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 4, 4)) + 1j * rng.normal(size=(5, 4, 4))
    F = dmat.flat(X)
    for k in range(5):
        assert np.allclose(F[k], dmat.J(2) @ X[k].conj().T @ dmat.J(2))


def test_kron_basics():
    assert np.array_equal(dmat.kron(np.eye(2), np.eye(2)), np.eye(4))
    A = np.array([[1, 2j], [3, 4]])
    assert np.array_equal(dmat.kron_power(A, 1), A)
    assert np.array_equal(dmat.kron_power(A, 3), np.kron(np.kron(A, A), A))
    with pytest.raises(ValueError):
        dmat.kron_power(A, 0)


@given(cplx((2, 2)), cplx((2, 2)), cplx((2, 2)), cplx((2, 2)))
def test_kron_mixed_product(A, B, C, D):
    lhs = dmat.kron(A, B) @ dmat.kron(C, D)
    rhs = dmat.kron(A @ C, B @ D)
    assert np.allclose(lhs, rhs, atol=1e-9 * max(1.0, np.abs(rhs).max()))
