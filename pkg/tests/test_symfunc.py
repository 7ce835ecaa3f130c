import itertools
import math

import numpy as np
import pytest

from khessian import (
    AkMatrix,
    ArgumentError,
    ConeViolationError,
    EigenVector,
    F_and_grad,
    SymMatrix,
    cone_membership,
    hk,
    in_gamma_k,
    linearized_coefficients,
    maclaurin_gap,
    newton_tensor,
    normalize_to_Ak,
    sigma_k,
    sigma_k_matrix,
    sigma_partial,
)

C = 3.0 ** -0.5


def brute_force_sigma(lam, k):
    return sum(math.prod(subset) for subset in itertools.combinations(lam, k))


def random_symmetric(rng, n):
    raw = rng.standard_normal((n, n))
    return 0.5 * (raw + raw.T)


def random_positive_definite(rng, n, low=0.2, high=2.0):
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return basis @ np.diag(rng.uniform(low, high, n)) @ basis.T


@pytest.mark.parametrize(
    ("lam", "k", "expected"),
    [
        ((1.0, 1.0, 1.0), 2, 3.0),
        ((1.0, 2.0, 3.0), 2, 11.0),
        ((C, C, C), 2, 1.0),
        ((1.0, 2.0, 3.0), 3, 6.0),
        ((2.0, -1.0, 4.0, 0.5), 1, 5.5),
    ],
)
def test_sigma_k_values(lam, k, expected):
    assert sigma_k(lam, k) == pytest.approx(expected, rel=1e-14)


def test_sigma_k_accepts_eigenvector():
    assert sigma_k(EigenVector([3.0, 1.0, 2.0]), 2) == pytest.approx(11.0)


@pytest.mark.parametrize("k", [0, 4, -1])
def test_sigma_k_rejects_out_of_range(k):
    with pytest.raises(ArgumentError):
        sigma_k((1.0, 2.0, 3.0), k)


def test_sigma_k_matches_subset_enumeration():
    rng = np.random.default_rng(7)
    for n in (2, 3, 4, 5, 6):
        lam = rng.standard_normal(n)
        for k in range(1, n + 1):
            assert sigma_k(lam, k) == pytest.approx(brute_force_sigma(lam, k), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    ("matrix", "k", "expected"),
    [
        (SymMatrix.diagonal([1.0, 2.0, 3.0]), 3, 6.0),
        (SymMatrix.identity(4), 2, 6.0),
        (SymMatrix.identity(3), 1, 3.0),
    ],
)
def test_sigma_k_matrix_values(matrix, k, expected):
    assert sigma_k_matrix(matrix, k) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_minor_sums_agree_with_eigenvalues(n):
    rng = np.random.default_rng(n)
    for _ in range(50):
        array = random_symmetric(rng, n)
        lam = np.linalg.eigvalsh(array)
        for k in range(1, n + 1):
            expected = brute_force_sigma(lam, k)
            got = sigma_k_matrix(SymMatrix.from_array(array), k)
            assert abs(got - expected) <= 1e-10 * max(1.0, abs(expected))


def test_sigma_k_matrix_eigen_path_for_large_dimension():
    rng = np.random.default_rng(3)
    array = random_symmetric(rng, 6)
    lam = np.linalg.eigvalsh(array)
    for k in range(1, 7):
        expected = brute_force_sigma(lam, k)
        assert sigma_k_matrix(SymMatrix.from_array(array), k) == pytest.approx(expected, rel=1e-10, abs=1e-10)


def test_sigma_k_matrix_rejects_non_finite():
    matrix = SymMatrix(2, [1.0, float("nan"), 1.0])
    with pytest.raises(ArgumentError):
        sigma_k_matrix(matrix, 1)


def test_symmatrix_entry_count_checked():
    with pytest.raises(ArgumentError):
        SymMatrix(3, [1.0, 2.0])


def test_symmatrix_roundtrip_keeps_symmetry():
    array = np.array([[1.0, 2.0, 0.0], [2.0, -1.0, 3.0], [0.0, 3.0, 5.0]])
    assert np.array_equal(SymMatrix.from_array(array).array, array)


def test_newton_tensor_diagonal():
    tensor = newton_tensor(SymMatrix.diagonal([1.0, 2.0, 3.0]), 2)
    assert np.allclose(tensor.array, np.diag([5.0, 4.0, 3.0]), atol=1e-14)


def test_newton_tensor_at_isotropic_ak_matrix():
    A = normalize_to_Ak([1.0, 1.0, 1.0], 2)
    tensor = newton_tensor(SymMatrix.diagonal(A.a), 2)
    assert np.allclose(np.diag(tensor.array), 2.0 * C, atol=1e-14)
    assert np.allclose(linearized_coefficients(A.a, 2), C, atol=1e-14)


def test_euler_identity():
    rng = np.random.default_rng(11)
    for n in (2, 3, 4):
        for _ in range(30):
            matrix = SymMatrix.from_array(random_symmetric(rng, n))
            for k in range(1, n + 1):
                tensor = newton_tensor(matrix, k)
                trace = float(np.trace(tensor.array @ matrix.array))
                target = k * sigma_k_matrix(matrix, k)
                assert abs(trace - target) <= 1e-10 * max(1.0, abs(target))


def test_newton_tensor_is_gradient_of_sigma():
    rng = np.random.default_rng(5)
    array = random_symmetric(rng, 3)
    step = 1e-6
    for k in (1, 2, 3):
        tensor = newton_tensor(SymMatrix.from_array(array), k).array
        for i in range(3):
            bump = np.zeros((3, 3))
            bump[i, i] = step
            derivative = (
                sigma_k_matrix(SymMatrix.from_array(array + bump), k)
                - sigma_k_matrix(SymMatrix.from_array(array - bump), k)
            ) / (2.0 * step)
            assert derivative == pytest.approx(tensor[i, i], abs=1e-6)


def test_F_and_grad_identity():
    value, grad = F_and_grad(SymMatrix.identity(3), 2)
    assert value == pytest.approx(math.sqrt(3.0), rel=1e-14)
    assert np.allclose(grad.array, np.eye(3) / math.sqrt(3.0), atol=1e-14)


def test_F_and_grad_matches_finite_differences():
    rng = np.random.default_rng(17)
    step = 1e-5
    for _ in range(20):
        array = random_positive_definite(rng, 3)
        _, grad = F_and_grad(SymMatrix.from_array(array), 2)
        for i in range(3):
            for j in range(i, 3):
                bump = np.zeros((3, 3))
                bump[i, j] = bump[j, i] = step
                plus = sigma_k_matrix(SymMatrix.from_array(array + bump), 2) ** 0.5
                minus = sigma_k_matrix(SymMatrix.from_array(array - bump), 2) ** 0.5
                derivative = (plus - minus) / (2.0 * step)
                expected = grad.array[i, j] * (1.0 if i == j else 2.0)
                assert derivative == pytest.approx(expected, abs=1e-6)


def test_F_and_grad_gradient_positive_definite_in_cone():
    _, grad = F_and_grad(SymMatrix.diagonal([-0.2, 1.0, 2.0]), 2)
    assert np.all(np.linalg.eigvalsh(grad.array) > 0.0)


def test_F_and_grad_below_floor():
    # sigma_2 of diag(1, 1e-12, 0) is 1e-12
    with pytest.raises(ConeViolationError) as info:
        F_and_grad(SymMatrix.diagonal([1.0, 1e-12, 0.0]), 2)
    assert info.value.sigma == pytest.approx(1e-12)


def test_F_is_concave_on_positive_definite_matrices():
    rng = np.random.default_rng(23)
    for _ in range(100):
        first = random_positive_definite(rng, 3)
        second = random_positive_definite(rng, 3)
        for k in (1, 2, 3):
            mid, _ = F_and_grad(SymMatrix.from_array(0.5 * (first + second)), k)
            a, _ = F_and_grad(SymMatrix.from_array(first), k)
            b, _ = F_and_grad(SymMatrix.from_array(second), k)
            assert mid >= 0.5 * (a + b) - 1e-12


@pytest.mark.parametrize(
    ("lam", "expected"),
    [
        ((1.0, 1.0, -0.1), True),
        ((-1.0, 5.0, 5.0), True),
        ((-1.0, -1.0, 5.0), False),
    ],
)
def test_in_gamma_2(lam, expected):
    assert in_gamma_k(lam, 2) is expected
    assert in_gamma_k(SymMatrix.diagonal(lam), 2) is expected


def test_cone_nesting():
    rng = np.random.default_rng(29)
    for _ in range(200):
        matrix = SymMatrix.from_array(random_symmetric(rng, 4) + 0.5 * np.eye(4))
        for k in range(2, 5):
            if in_gamma_k(matrix, k):
                assert all(in_gamma_k(matrix, j) for j in range(1, k))


def test_cone_closure_flag():
    strict, closed = cone_membership(SymMatrix.diagonal([1.0, 0.0, 0.0]), 2)
    assert not strict
    assert closed


def test_normalize_isotropic():
    A = normalize_to_Ak([1.0, 1.0, 1.0], 2)
    assert np.allclose(A.a, C, atol=1e-15)
    assert np.allclose(normalize_to_Ak([1.0, 1.0, 1.0], 3).a, 1.0)


def test_normalize_anisotropic():
    A = normalize_to_Ak([1.0, 2.0, 4.0], 2)
    assert abs(sigma_k(A.a, 2) - 1.0) <= 1e-12
    assert np.allclose(A.a, np.array([1.0, 2.0, 4.0]) / math.sqrt(14.0), rtol=1e-12)


def test_normalize_is_idempotent():
    A = normalize_to_Ak([0.3, 1.7, 2.2, 0.9], 3)
    again = normalize_to_Ak(A.a, 3)
    assert np.max(np.abs(again.a - A.a)) <= 1e-12


@pytest.mark.parametrize("d", [(1.0, 0.0, 1.0), (1.0, -2.0, 1.0)])
def test_normalize_rejects_nonpositive(d):
    with pytest.raises(ArgumentError):
        normalize_to_Ak(d, 2)


def test_ak_matrix_requires_unit_sigma():
    with pytest.raises(ArgumentError):
        AkMatrix([1.0, 1.0, 1.0], 2)


def test_hk_isotropic():
    A = normalize_to_Ak([1.0, 1.0, 1.0], 2)
    assert hk(A.a, 2) == pytest.approx(2.0 * C * C)
    assert sigma_partial(A.a, 1, 0) == pytest.approx(2.0 * C)


def test_maclaurin_equality_case():
    assert maclaurin_gap(SymMatrix.from_array(2.5 * np.eye(3)), 2) == pytest.approx(0.0, abs=1e-14)


def test_maclaurin_diagonal():
    gap = maclaurin_gap(SymMatrix.diagonal([1.0, 2.0, 3.0]), 2)
    assert gap == pytest.approx(math.sqrt(11.0 / 3.0) - 6.0 ** (1.0 / 3.0), rel=1e-12)
    assert gap >= 0.0


def test_maclaurin_random_positive_definite():
    rng = np.random.default_rng(31)
    for _ in range(100):
        matrix = SymMatrix.from_array(random_positive_definite(rng, 3, 0.1, 5.0))
        for k in (1, 2, 3):
            assert maclaurin_gap(matrix, k) >= -1e-12


def test_maclaurin_requires_positive_definite():
    with pytest.raises(ArgumentError):
        maclaurin_gap(SymMatrix.diagonal([-1.0, 2.0, 3.0]), 2)
