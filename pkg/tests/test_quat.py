import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qshnn.quat import (
    BASIS,
    BASIS_MATRICES,
    Quaternion,
    conj,
    ghr_derivative,
    inverse,
    left_mult_matrix,
    norm,
    quat_mul,
    right_mult_matrix,
    rotate,
)

ONE, I, J, K = BASIS
quats = arrays(np.float64, 4, elements=st.floats(-10, 10, allow_nan=False))
nonzero_quats = quats.filter(lambda q: np.linalg.norm(q) > 1e-3)


def rodrigues(axis, angle):
    """3x3 rotation matrix about a unit axis; independent of quaternion code."""
    a = np.asarray(axis) / np.linalg.norm(axis)
    Kx = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * Kx + (1 - np.cos(angle)) * Kx @ Kx


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (I, J, K), (J, I, -K), (J, K, I), (K, J, -I), (K, I, J), (I, K, -J),
        (I, I, -ONE), (J, J, -ONE), (K, K, -ONE),
    ],
)
def test_multiplication_table(a, b, expected):
    np.testing.assert_array_equal(quat_mul(a, b), expected)


def test_ijk_is_minus_one():
    np.testing.assert_array_equal(quat_mul(quat_mul(I, J), K), -ONE)


def test_expansion_example():
    # (1+i)(1+j) = 1 + j + i + ij = 1 + i + j + k
    np.testing.assert_array_equal(quat_mul([1, 1, 0, 0], [1, 0, 1, 0]), [1, 1, 1, 1])


@given(quats)
def test_identity(q):
    np.testing.assert_array_equal(quat_mul(q, ONE), q)
    np.testing.assert_array_equal(quat_mul(ONE, q), q)


def test_left_matrix_examples():
    np.testing.assert_array_equal(left_mult_matrix(ONE), np.eye(4))
    Li = left_mult_matrix(I)
    np.testing.assert_array_equal(Li[0], [0, -1, 0, 0])
    np.testing.assert_array_equal(Li[1], [1, 0, 0, 0])


def test_basis_matrices_are_orthogonal_with_norm_two():
    gram = np.einsum("aij,bij->ab", BASIS_MATRICES, BASIS_MATRICES)
    np.testing.assert_array_equal(gram, 4 * np.eye(4))


def test_left_matrix_matches_product_1000_pairs(rng):
    q, p = rng.normal(size=(2, 1000, 4))
    lhs = np.einsum("nij,nj->ni", left_mult_matrix(q), p)
    np.testing.assert_allclose(lhs, quat_mul(q, p), atol=1e-14, rtol=0)


def test_right_matrix_matches_product(rng):
    q, p = rng.normal(size=(2, 100, 4))
    lhs = np.einsum("nij,nj->ni", right_mult_matrix(q), p)
    np.testing.assert_allclose(lhs, quat_mul(p, q), atol=1e-14, rtol=0)


@given(quats, quats, quats)
def test_associativity(a, b, c):
    scale = max(1.0, norm(a) * norm(b) * norm(c))
    np.testing.assert_allclose(quat_mul(quat_mul(a, b), c), quat_mul(a, quat_mul(b, c)),
                               atol=1e-12 * scale, rtol=0)


@given(quats, quats)
def test_norm_multiplicative(a, b):
    assert abs(norm(quat_mul(a, b)) - norm(a) * norm(b)) <= 1e-12 * max(1.0, norm(a) * norm(b))


@given(quats, quats)
def test_homomorphism(a, b):
    scale = max(1.0, norm(a) * norm(b))
    np.testing.assert_allclose(left_mult_matrix(quat_mul(a, b)),
                               left_mult_matrix(a) @ left_mult_matrix(b), atol=1e-12 * scale, rtol=0)


@given(quats)
def test_conjugate_product_is_real_norm_squared(q):
    r = quat_mul(q, conj(q))
    assert r[0] == pytest.approx(norm(q) ** 2, rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(r[1:], 0, atol=1e-12 * max(1, norm(q) ** 2))


def test_conj_norm_inverse_examples():
    np.testing.assert_array_equal(conj([1, 2, 0, 0]), [1, -2, 0, 0])
    assert norm(I) == 1.0
    np.testing.assert_array_equal(inverse([2, 0, 0, 0]), [0.5, 0, 0, 0])


@given(nonzero_quats)
def test_inverse_is_two_sided(q):
    np.testing.assert_allclose(quat_mul(q, inverse(q)), ONE, atol=1e-12)
    np.testing.assert_allclose(quat_mul(inverse(q), q), ONE, atol=1e-12)


def test_zero_has_no_inverse():
    with pytest.raises(ValueError):
        inverse([0, 0, 0, 0])
    with pytest.raises(ValueError):
        rotate(I, [0, 0, 0, 0])


def test_rotation_examples():
    q = np.array([0.3, -1.0, 2.0, 0.5])
    np.testing.assert_allclose(rotate(q, ONE), q)
    np.testing.assert_allclose(rotate(J, I), -J, atol=1e-15)
    mu = np.array([np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)])
    np.testing.assert_allclose(rotate(I, mu), J, atol=1e-12)
    np.testing.assert_allclose(rodrigues([0, 0, 1], np.pi / 2) @ [1, 0, 0], [0, 1, 0], atol=1e-12)


def test_rotation_matches_rodrigues(rng):
    for _ in range(200):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        beta = rng.uniform(-np.pi, np.pi)
        scale = rng.uniform(0.1, 5.0)
        mu = scale * np.concatenate([[np.cos(beta)], axis * np.sin(beta)])
        q = rng.normal(size=4)
        out = rotate(q, mu)
        # conjugation by |mu|(cos b + v sin b) turns the vector part by 2b
        np.testing.assert_allclose(out[1:], rodrigues(axis, 2 * beta) @ q[1:], atol=1e-12)
        assert out[0] == pytest.approx(q[0], abs=1e-12)


@given(quats, nonzero_quats)
def test_rotation_preserves_norm_and_scalar(q, mu):
    out = rotate(q, mu)
    assert abs(norm(out) - norm(q)) <= 1e-12 * max(1.0, norm(q))
    assert abs(out[0] - q[0]) <= 1e-12 * max(1.0, norm(q))


def test_ghr_constant_is_zero():
    g = ghr_derivative(lambda p: np.array([1.0, 2.0, 3.0, 4.0]), [0.2, 0.1, -0.3, 0.5])
    np.testing.assert_allclose(g, 0, atol=1e-9)


def test_ghr_norm_squared(rng):
    for _ in range(20):
        q = rng.normal(size=4)
        f = lambda p: np.sum(p**2)  # noqa: E731
        np.testing.assert_allclose(ghr_derivative(f, q), conj(q) / 2, atol=1e-6)
        np.testing.assert_allclose(ghr_derivative(f, q, conjugate=True), q / 2, atol=1e-6)


@given(quats, nonzero_quats)
def test_ghr_real_function_conjugate_consistency(q, mu):
    f = lambda p: np.sum(np.sin(p)) + p[0] * p[2]  # noqa: E731
    plain = ghr_derivative(f, q, mu)
    conjugate = ghr_derivative(f, q, mu, conjugate=True)
    np.testing.assert_allclose(conjugate, conj(plain), atol=1e-7)


def test_ghr_identity_function():
    # f(q) = q: partials are 1, i, j, k; plain side gives (1 - i∘i - j∘j - k∘k)/4 = 1
    # and the conjugate side (1 + i∘i + j∘j + k∘k)/4 = -1/2
    q = np.array([0.4, -0.2, 0.7, 0.1])
    np.testing.assert_allclose(ghr_derivative(lambda p: p, q), ONE, atol=1e-8)
    np.testing.assert_allclose(ghr_derivative(lambda p: p, q, conjugate=True), -0.5 * ONE, atol=1e-8)


def test_ghr_rejects_non_finite():
    with pytest.raises(FloatingPointError):
        ghr_derivative(lambda p: np.array([np.inf, 0, 0, 0]), ONE)


def test_quaternion_wrapper():
    a = Quaternion(1, 1, 0, 0)
    b = Quaternion(1, 0, 1, 0)
    assert a * b == Quaternion(1, 1, 1, 1)
    assert Quaternion(0, 1, 0, 0) * Quaternion(0, 0, 1, 0) == Quaternion(0, 0, 0, 1)
    assert Quaternion(2).inverse() == Quaternion(0.5)
    assert Quaternion(1, 2).conj() == Quaternion(1, -2)
    assert Quaternion(0, 0, 3, 4).norm() == 5.0
    np.testing.assert_array_equal(a.matrix() @ np.asarray(b), np.asarray(a * b))
    np.testing.assert_array_equal(quat_mul(a, b), [1, 1, 1, 1])
