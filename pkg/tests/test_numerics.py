import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from conftest import random_symmetric
from zeromode.utils.misc import DegenerateFitError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import InvalidBracketError
from zeromode.utils.misc import NotSymmetricError
from zeromode.utils.misc import UnphysicalStateError
from zeromode.utils.numerics import RootBracket
from zeromode.utils.numerics import eig_sym
from zeromode.utils.numerics import find_root_1d
from zeromode.utils.numerics import find_root_2d
from zeromode.utils.numerics import fit_polynomial
from zeromode.utils.numerics import krylov_propagate
from zeromode.utils.numerics import lanczos_ground
from zeromode.utils.numerics import schmidt_entropy
from zeromode.utils.numerics import von_neumann_entropy


def test_eig_sym_reconstructs_matrix(rng):
    a = random_symmetric(rng, 40)
    spec = eig_sym(a)
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    np.testing.assert_allclose(spec.reconstruct(), a, atol=1e-10)
    np.testing.assert_allclose(spec.eigenvectors.T @ spec.eigenvectors, np.eye(40), atol=1e-10)


def test_eig_sym_accepts_sparse_input():
    matrix = sp.diags([3.0, 1.0, 2.0])
    np.testing.assert_allclose(eig_sym(matrix).eigenvalues, [1.0, 2.0, 3.0])


def test_eig_sym_rejects_asymmetric_and_non_square():
    with pytest.raises(NotSymmetricError):
        eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InputError):
        eig_sym(np.ones((2, 3)))


def test_lanczos_ground_matches_dense_solver(rng):
    n = 300
    off = rng.standard_normal(n - 1)
    H = sp.diags([off, np.linspace(0, 50, n), off], [-1, 0, 1], format='csr')
    energy, state = lanczos_ground(lambda v: H @ v, n)
    reference = scipy.linalg.eigh(H.toarray(), eigvals_only=True)[0]
    assert energy == pytest.approx(reference, abs=1e-9)
    assert np.linalg.norm(H @ state - energy * state) < 1e-6


def test_lanczos_ground_small_operator_is_exact(rng):
    a = random_symmetric(rng, 8)
    energy, state = lanczos_ground(lambda v: a @ v, 8)
    assert energy == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-12)
    assert np.linalg.norm(state) == pytest.approx(1.0)


def test_lanczos_ground_rejects_empty_operator():
    with pytest.raises(InputError):
        lanczos_ground(lambda v: v, 0)


def test_krylov_propagate_matches_expm_multiply(rng):
    n = 120
    H = sp.csr_matrix(random_symmetric(rng, n))
    psi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    psi /= np.linalg.norm(psi)
    result = krylov_propagate(lambda v: H @ v, psi, 0.7, tol=1e-11)
    reference = scipy.sparse.linalg.expm_multiply(-1j * 0.7 * H, psi)
    assert np.linalg.norm(result - reference) < 1e-8
    assert np.linalg.norm(result) == pytest.approx(1.0, abs=1e-10)


def test_krylov_propagate_backwards_inverts_forwards(rng):
    n = 60
    H = sp.csr_matrix(random_symmetric(rng, n))
    psi = rng.standard_normal(n).astype(complex)
    psi /= np.linalg.norm(psi)
    forward = krylov_propagate(lambda v: H @ v, psi, 2.0)
    back = krylov_propagate(lambda v: H @ v, forward, -2.0)
    assert np.linalg.norm(back - psi) < 1e-8


def test_krylov_propagate_zero_step_and_bad_norm():
    psi = np.array([1.0, 0.0])
    np.testing.assert_array_equal(krylov_propagate(lambda v: v, psi, 0.0), psi)
    with pytest.raises(InputError):
        krylov_propagate(lambda v: v, np.array([1.0, 1.0]), 1.0)


def test_find_root_1d():
    root = find_root_1d(lambda x: math.cos(x) - x, RootBracket(0.0, 1.0))
    assert root == pytest.approx(0.7390851332151607, abs=1e-12)


def test_find_root_1d_needs_sign_change():
    with pytest.raises(InvalidBracketError):
        find_root_1d(lambda x: x * x + 1, RootBracket(-1.0, 1.0))
    with pytest.raises(InvalidBracketError):
        RootBracket(1.0, 0.0)


def test_find_root_2d():
    x, y = find_root_2d(lambda v: np.array([v[0] ** 2 + v[1] ** 2 - 4, v[0] - v[1]]), (1.0, 0.5))
    assert x == pytest.approx(math.sqrt(2), abs=1e-9)
    assert y == pytest.approx(math.sqrt(2), abs=1e-9)


def test_fit_polynomial_recovers_exact_coefficients():
    ts = np.linspace(0, 5, 30)
    fit = fit_polynomial(ts, 0.3 * ts ** 2 - 2 * ts + 1, 2)
    np.testing.assert_allclose(fit.coefficients, [0.3, -2.0, 1.0], atol=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit(2.0) == pytest.approx(0.3 * 4 - 4 + 1)


def test_fit_polynomial_errors():
    with pytest.raises(DegenerateFitError):
        fit_polynomial(np.ones(5), np.arange(5.0), 1)
    with pytest.raises(InputError):
        fit_polynomial(np.arange(2.0), np.arange(2.0), 1)
    with pytest.raises(InputError):
        fit_polynomial(np.arange(10.0), np.arange(10.0), 3)


def test_von_neumann_entropy():
    assert von_neumann_entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    assert von_neumann_entropy([1.0, 0.0, -1e-14]) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(UnphysicalStateError):
        von_neumann_entropy([1.1, -0.1])


def test_schmidt_entropy():
    assert schmidt_entropy(np.eye(2) / math.sqrt(2)) == pytest.approx(math.log(2))
    product = np.outer([0.6, 0.8], [1.0, 0.0])
    assert schmidt_entropy(product) == pytest.approx(0.0, abs=1e-12)
