import math

import numpy as np
import pytest

from conftest import random_symmetric
from zeromode.models.ensembles import analytic_gge_estimate
from zeromode.models.ensembles import analytic_gge_estimate_from_energy
from zeromode.models.ensembles import block_diagonal_ensemble
from zeromode.models.ensembles import conserved_energies
from zeromode.models.ensembles import degenerate_blocks
from zeromode.models.ensembles import diagonal_ensemble
from zeromode.models.ensembles import ensemble_comparison
from zeromode.models.ensembles import frozen_relative_gge_entropy
from zeromode.models.ensembles import gge_reduced_entropy
from zeromode.models.ensembles import gge_solve
from zeromode.models.ensembles import reduced_entropy
from zeromode.models.ensembles import uniform_bound
from zeromode.models.rotor2 import RotorParams
from zeromode.models.rotor2 import WaveFunction
from zeromode.models.rotor2 import build_hamiltonian
from zeromode.models.rotor2 import choose_cutoff
from zeromode.models.rotor2 import ground_state
from zeromode.models.rotor2 import post_quench_decomposition
from zeromode.utils.misc import InputError
from zeromode.utils.misc import UnreachableEnergyError
from zeromode.utils.numerics import eig_sym


SWEEP_OMEGA_SQ = (5.0, 10.0, 100.0)
SWEEP_KAPPA = (10.0, 50.0, 100.0)
SWEEP_POINTS = [(omega_sq, kappa) for omega_sq in SWEEP_OMEGA_SQ for kappa in SWEEP_KAPPA]


@pytest.fixture(scope='module')
def sweep():
    ts = np.linspace(0, 30, 301)
    return {point: ensemble_comparison(*point, ts) for point in SWEEP_POINTS}


@pytest.fixture(scope='module')
def comparisons(sweep):
    return {kappa: sweep[(10.0, kappa)] for kappa in (10.0, 100.0)}


def test_diagonal_ensemble_of_eigenstate_is_pure():
    spec = post_quench_decomposition(RotorParams(0, 2, 2))
    psi = WaveFunction.from_flat(spec.eigenvectors[:, 3].astype(complex), 2)
    rho = diagonal_ensemble(spec, psi)
    assert np.trace(rho @ rho).real == pytest.approx(1)
    np.testing.assert_allclose(rho, np.outer(psi.flat, psi.flat.conj()), atol=1e-12)


def test_diagonal_ensemble_of_superposition(rng):
    spec = eig_sym(random_symmetric(rng, 9))
    psi = WaveFunction.from_flat((spec.eigenvectors[:, 1] + spec.eigenvectors[:, 4]) / math.sqrt(2), 1)
    rho = diagonal_ensemble(spec, psi)
    P1 = np.outer(spec.eigenvectors[:, 1], spec.eigenvectors[:, 1])
    P4 = np.outer(spec.eigenvectors[:, 4], spec.eigenvectors[:, 4])
    np.testing.assert_allclose(rho, 0.5 * (P1 + P4), atol=1e-12)


def test_block_ensemble_without_degeneracies_equals_diagonal(rng):
    spec = eig_sym(random_symmetric(rng, 9))
    c = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    psi = WaveFunction.from_flat(c / np.linalg.norm(c), 1)
    np.testing.assert_allclose(block_diagonal_ensemble(spec, psi), diagonal_ensemble(spec, psi), atol=1e-12)


def test_degenerate_blocks():
    blocks = degenerate_blocks(np.array([0.0, 1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0]))
    assert [block.tolist() for block in blocks] == [[0], [1, 2], [3], [4, 5]]


def test_block_ensemble_entropy_not_above_diagonal():
    M = choose_cutoff(5, 10)
    params = RotorParams(5, 10, M)
    _, psi0 = ground_state(build_hamiltonian(params))
    spec = post_quench_decomposition(params)
    S_de = reduced_entropy(diagonal_ensemble(spec, psi0), M)
    S_bde = reduced_entropy(block_diagonal_ensemble(spec, psi0), M)
    assert S_bde <= S_de + 1e-10


def test_conserved_energies_of_momentum_eigenstate():
    E_plus, E_minus = conserved_energies(WaveFunction.basis_state(3, 0, 0), 7.0)
    assert E_plus == 0
    assert E_minus == pytest.approx(7.0)


def test_gge_reproduces_conserved_energies():
    M = choose_cutoff(10, 100)
    _, psi0 = ground_state(build_hamiltonian(RotorParams(10, 100, M)))
    E_plus, E_minus = conserved_energies(psi0, 100)
    g = gge_solve(100, M, E_plus, E_minus)
    assert max(abs(r) for r in g.residuals) < 1e-8
    assert 0 < g.lambda_plus < math.inf
    assert 0 < g.lambda_minus < math.inf


def test_gge_with_vanishing_zero_mode_energy_freezes_it():
    g = gge_solve(10, 10, 0.0, 12.0)
    assert math.isinf(g.lambda_plus)
    assert abs(g.residuals[1]) < 1e-8
    assert gge_reduced_entropy(g, 10, 10) > 0


def test_gge_rejects_unreachable_energies():
    with pytest.raises(UnreachableEnergyError):
        gge_solve(10, 10, -1.0, 12.0)
    with pytest.raises(UnreachableEnergyError):
        gge_solve(100, 20, 1.0, 0.0)


def test_analytic_estimate_values():
    assert analytic_gge_estimate(math.sqrt(10), 100) == pytest.approx(2.161, abs=1e-3)
    omega = 1.7
    assert analytic_gge_estimate(omega, 0) == pytest.approx(0.5 * math.log(math.pi * math.e * omega))
    omega_minus = math.sqrt(10 + 200)
    assert analytic_gge_estimate_from_energy(math.sqrt(10) / 4, omega_minus) == pytest.approx(
        analytic_gge_estimate(math.sqrt(10), 100))
    with pytest.raises(InputError):
        analytic_gge_estimate(0, 1)


def test_frozen_relative_gge_close_to_estimate():
    assert frozen_relative_gge_entropy(math.sqrt(10), 100) == pytest.approx(
        analytic_gge_estimate(math.sqrt(10), 100), rel=0.05)


def test_uniform_bound_limits():
    assert uniform_bound(0).bound == 0
    assert uniform_bound(1e-8).bound < 1e-6
    E = 100.0
    assert uniform_bound(E).bound == pytest.approx(0.5 * math.log(4 * math.pi * math.e * E), rel=1e-6)
    bounds = [uniform_bound(E).bound for E in (0.1, 1, 10, 100)]
    assert bounds == sorted(bounds)
    with pytest.raises(InputError):
        uniform_bound(-1)


def test_exact_entropy_stays_below_ceilings(comparisons):
    result = comparisons[100]
    assert result.S_max <= result.S_gge + 0.05
    assert result.S_max <= result.bound
    assert comparisons[10].S_max <= comparisons[10].bound


def test_analytic_estimate_improves_with_coupling(comparisons):
    errors = {kappa: abs(c.S_estimate - c.S_gge) / c.S_gge for kappa, c in comparisons.items()}
    assert errors[100] < 0.1
    assert errors[100] < errors[10]


@pytest.mark.parametrize('point', SWEEP_POINTS)
def test_block_ensemble_entropy_not_above_diagonal_across_sweep(sweep, point):
    result = sweep[point]
    assert result.S_bde <= result.S_de + 1e-8


@pytest.mark.parametrize('point', SWEEP_POINTS)
def test_bound_holds_across_sweep(sweep, point):
    result = sweep[point]
    assert result.S_max <= result.bound
