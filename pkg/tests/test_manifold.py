import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qshnn.manifold import (
    block_coefficients,
    block_view,
    from_blocks,
    project_block,
    project_weight_matrix,
    quaternionicity_residual,
)
from qshnn.quat import left_mult_matrix, quat_mul

blocks = arrays(np.float64, (4, 4), elements=st.floats(-100, 100, allow_nan=False))


def lstsq_oracle(M):
    """Least squares over coefficients, with the design matrix built from quaternion products."""
    basis = np.eye(4)
    # column m is vec(L(e_m)), assembled column-by-column as L(e_m) e_c = e_m ∘ e_c
    A = np.stack([np.stack([quat_mul(e, c) for c in basis], axis=1).ravel() for e in basis], axis=1)
    c, *_ = np.linalg.lstsq(A, np.asarray(M).ravel(), rcond=None)
    return c


def test_manifold_member_is_fixed():
    q = np.array([0.3, -1.2, 0.7, 2.0])
    P, c = project_block(left_mult_matrix(q))
    np.testing.assert_allclose(P, left_mult_matrix(q), atol=1e-15)
    np.testing.assert_allclose(c, q, atol=1e-15)


def test_diagonal_example():
    P, c = project_block(np.diag([1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_allclose(P, 2.5 * np.eye(4))
    assert tuple(c) == (2.5, 0.0, 0.0, 0.0)
    np.testing.assert_allclose(lstsq_oracle(np.diag([1.0, 2.0, 3.0, 4.0])), [2.5, 0, 0, 0], atol=1e-14)


def test_diagonal_residual_is_sqrt5():
    assert quaternionicity_residual(np.diag([1.0, 2.0, 3.0, 4.0])) == pytest.approx(np.sqrt(5), rel=1e-15)


@given(blocks)
def test_matches_least_squares_oracle(M):
    _, c = project_block(M)
    np.testing.assert_allclose(c, lstsq_oracle(M), atol=1e-10 * max(1.0, np.abs(M).max()))


@given(blocks)
def test_pythagoras_and_orthogonality(M):
    P, _ = project_block(M)
    R = M - P
    scale = max(1.0, np.sum(M**2))
    for e in np.eye(4):
        assert abs(np.sum(R * left_mult_matrix(e))) <= 1e-12 * scale
    assert abs(np.sum(M**2) - np.sum(P**2) - np.sum(R**2)) <= 1e-11 * scale


@given(blocks, arrays(np.float64, 4, elements=st.floats(-100, 100, allow_nan=False)))
def test_projection_is_closest(M, q):
    P, _ = project_block(M)
    assert np.linalg.norm(M - P) <= np.linalg.norm(M - left_mult_matrix(q)) + 1e-9


@given(blocks)
def test_idempotent(M):
    P, _ = project_block(M)
    np.testing.assert_allclose(project_block(P)[0], P, atol=1e-12 * max(1.0, np.abs(M).max()))


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        project_block(np.eye(3))
    with pytest.raises(ValueError):
        project_weight_matrix(np.eye(6))
    with pytest.raises(ValueError):
        quaternionicity_residual(np.zeros((8, 4)))


def test_block_view_layout(rng):
    W = rng.normal(size=(12, 12))
    v = block_view(W)
    assert v.shape == (3, 3, 4, 4)
    np.testing.assert_array_equal(v[1, 2], W[4:8, 8:12])
    np.testing.assert_array_equal(from_blocks(v), W)


def test_weight_matrix_blockwise(rng):
    W = rng.normal(size=(16, 16))
    P = project_weight_matrix(W)
    for a in range(4):
        for b in range(4):
            expected, c = project_block(W[4 * a:4 * a + 4, 4 * b:4 * b + 4])
            np.testing.assert_allclose(P[4 * a:4 * a + 4, 4 * b:4 * b + 4], expected, atol=1e-14)
            np.testing.assert_allclose(block_coefficients(W)[a, b], c, atol=1e-14)
    assert quaternionicity_residual(P) < 1e-12


def test_block_quaternionic_matrix_unchanged(rng):
    coeffs = rng.normal(size=(3, 3, 4))
    W = from_blocks(left_mult_matrix(coeffs))
    np.testing.assert_allclose(project_weight_matrix(W), W, atol=1e-14)
    assert quaternionicity_residual(W) < 1e-14


def test_single_block_matches_project_block():
    np.testing.assert_allclose(project_weight_matrix(np.diag([1.0, 2.0, 3.0, 4.0])), 2.5 * np.eye(4))
