import math

import numpy as np
import pytest

from zeromode.models.chains import ChainParams
from zeromode.models.chains import CovarianceState
from zeromode.models.chains import coupling_matrix
from zeromode.models.chains import evolve_covariance
from zeromode.models.chains import gaussian_entropy
from zeromode.models.chains import ground_covariance
from zeromode.models.chains import half_chain_entropy
from zeromode.models.chains import harmonic_chain_dynamics
from zeromode.models.chains import neumann_modes
from zeromode.models.chains import rotor_chain_dynamics
from zeromode.models.chains import rotor_chain_hamiltonian
from zeromode.models.chains import subsystem_entropy
from zeromode.models.chains import symplectic_eigenvalues
from zeromode.models.chains import total_momentum
from zeromode.models.cho2 import ChoQuench
from zeromode.models.cho2 import entanglement_arrays
from zeromode.models.rotor2 import RotorParams
from zeromode.models.rotor2 import build_hamiltonian
from zeromode.models.rotor2 import quench_dynamics
from zeromode.utils.misc import DimensionError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import UnphysicalStateError
from zeromode.utils.misc import UnsupportedSectorError
from zeromode.utils.numerics import fit_polynomial


def test_two_site_frequencies():
    modes = neumann_modes(ChainParams(2, 3.0, 1.5))
    np.testing.assert_allclose(modes.frequencies, [math.sqrt(3), math.sqrt(3 + 3)])


def test_uncoupled_frequencies():
    np.testing.assert_allclose(neumann_modes(ChainParams(6, 2.0, 0)).frequencies, math.sqrt(2))


def test_mode_basis_diagonalizes_coupling_matrix(rng):
    for _ in range(5):
        params = ChainParams(8, rng.uniform(0.1, 5), rng.uniform(0, 5))
        modes = neumann_modes(params)
        np.testing.assert_allclose(modes.basis.T @ modes.basis, np.eye(8), atol=1e-12)
        np.testing.assert_allclose(modes.basis.T @ coupling_matrix(params) @ modes.basis,
                                   np.diag(modes.frequencies ** 2), atol=1e-10)


def test_uncoupled_ground_covariance_is_diagonal():
    omega = 1.7
    gamma = ground_covariance(ChainParams(4, omega ** 2, 0)).gamma
    expected = np.diag([1 / (2 * omega)] * 4 + [omega / 2] * 4)
    np.testing.assert_allclose(gamma, expected, atol=1e-14)


def test_two_site_ground_covariance_matches_harmonic_pair():
    omega, kappa = 1.3, 2.0
    gamma = ground_covariance(ChainParams(2, omega ** 2, kappa)).gamma
    omega_minus = math.sqrt(omega ** 2 + 2 * kappa)
    assert gamma[0, 0] == pytest.approx((1 / omega + 1 / omega_minus) / 4)
    assert gamma[0, 1] == pytest.approx((1 / omega - 1 / omega_minus) / 4)
    assert gamma[2, 2] == pytest.approx((omega + omega_minus) / 4)


def test_ground_state_is_pure():
    gamma = ground_covariance(ChainParams(7, 1.5, 0.5)).gamma
    np.testing.assert_allclose(symplectic_eigenvalues(gamma), 0.5, atol=1e-12)


def test_evolution_at_zero_time():
    params = ChainParams(5, 1.5, 0.5)
    np.testing.assert_allclose(evolve_covariance(params, 0.0).gamma, ground_covariance(params).gamma,
                               atol=1e-14)


def test_zero_mode_spreads_freely():
    omega, t = 1.2, 7.0
    gamma = evolve_covariance(ChainParams(6, omega ** 2, 0.8), t).gamma
    uniform = np.full(6, 1 / math.sqrt(6))
    assert uniform @ gamma[:6, :6] @ uniform == pytest.approx((1 + omega ** 2 * t ** 2) / (2 * omega))


def test_evolved_state_stays_pure():
    dynamics = harmonic_chain_dynamics(ChainParams(9, 1.5, 0.5), np.geomspace(1, 1e3, 20))
    assert dynamics.purity_defect < 1e-8


def test_gaussian_entropy_values():
    assert gaussian_entropy([0.5]) == 0
    assert gaussian_entropy([1.0]) == pytest.approx(1.5 * math.log(1.5) - 0.5 * math.log(0.5))
    assert gaussian_entropy([1.0]) == pytest.approx(0.9548, abs=1e-4)


def test_uncoupled_state_has_no_entanglement():
    gamma = evolve_covariance(ChainParams(4, 2.0, 0), 3.0).gamma
    for cut in (1, 2, 3):
        assert half_chain_entropy(gamma, cut) == pytest.approx(0, abs=1e-10)


def test_two_site_chain_matches_closed_form():
    omega_sq, kappa = 10.0, 100.0
    ts = np.linspace(0, 100, 201)
    params = ChainParams(2, omega_sq, kappa)
    covariance = np.array([half_chain_entropy(evolve_covariance(params, t).gamma, 1) for t in ts])
    closed_form = entanglement_arrays(ChoQuench(math.sqrt(omega_sq), kappa), ts).S
    assert np.max(np.abs(covariance - closed_form)) < 1e-9


def test_pure_state_entropy_is_symmetric():
    gamma = evolve_covariance(ChainParams(5, 1.5, 0.5), 12.0).gamma
    assert subsystem_entropy(gamma, [0, 1]) == pytest.approx(subsystem_entropy(gamma, [2, 3, 4]), abs=1e-9)


def test_odd_chain_cuts_after_smaller_half():
    params = ChainParams(5, 1.5, 0.5)
    assert params.cut == 2
    gamma = evolve_covariance(params, 12.0).gamma
    assert harmonic_chain_dynamics(params, [12.0]).S[0] == pytest.approx(subsystem_entropy(gamma, [0, 1]),
                                                                          abs=1e-10)


def test_harmonic_chain_grows_logarithmically():
    ts = np.geomspace(50, 1e3, 40)
    dynamics = harmonic_chain_dynamics(ChainParams(32, 1.5, 0.5), ts)
    fit = fit_polynomial(np.log(ts), dynamics.S, 1)
    assert fit.coefficients[0] > 0.1


def test_unphysical_covariance_rejected():
    with pytest.raises(UnphysicalStateError):
        symplectic_eigenvalues(np.diag([0.1, 0.1]))
    with pytest.raises(InputError):
        CovarianceState(np.ones((3, 3)))


def test_invalid_chain_inputs():
    with pytest.raises(InputError):
        ChainParams(1, 1.0, 1.0)
    with pytest.raises(InputError):
        ChainParams(4, 1.0, 1.0, boundary='periodic')
    with pytest.raises(InputError):
        ground_covariance(ChainParams(4, 0.0, 1.0))
    with pytest.raises(UnsupportedSectorError):
        evolve_covariance(ChainParams(4, 1.0, 1.0), 1.0, omega_sq_post=-0.5)
    with pytest.raises(InputError):
        half_chain_entropy(ground_covariance(ChainParams(4, 1.0, 1.0)).gamma, 4)


def test_two_site_rotor_chain_is_rotor_pair():
    chain = rotor_chain_hamiltonian(ChainParams(2, 2.5, 7.0), 4)
    pair = build_hamiltonian(RotorParams(2.5, 7.0, 4))
    assert abs(chain - pair).max() < 1e-14


def test_free_rotor_chain_is_diagonal():
    H = rotor_chain_hamiltonian(ChainParams(3, 0, 0), 2)
    assert H.count_nonzero() == np.count_nonzero(H.diagonal())


def test_total_momentum_conserved_after_quench():
    params = ChainParams(3, 1.5, 0.5)
    P = total_momentum(3, 2)
    H_post = rotor_chain_hamiltonian(params, 2, omega_sq=0.0)
    H_pre = rotor_chain_hamiltonian(params, 2)
    assert abs(P @ H_post - H_post @ P).max() < 1e-12
    assert abs(P @ H_pre - H_pre @ P).max() > 0.1


def test_two_site_rotor_chain_dynamics_matches_rotor_pair():
    ts = np.linspace(0, 5, 11)
    chain = rotor_chain_dynamics(ChainParams(2, 1.5, 0.5), 8, ts)
    pair = quench_dynamics(RotorParams(1.5, 0.5, 8), ts, boundary_tol=1e-6)
    assert chain.ground_energy == pytest.approx(pair.ground_energy, abs=1e-9)
    assert np.max(np.abs(chain.S - pair.S)) < 1e-8


def test_rotor_chain_saturates():
    ts = np.linspace(0, 40, 81)
    dynamics = rotor_chain_dynamics(ChainParams(4, 1.5, 0.5), 4, ts)
    late = dynamics.S[ts >= 20].max()
    early = dynamics.S[ts <= 20].max()
    assert late - early < 0.1 * dynamics.S.max()


def test_rotor_chain_dimension_guard():
    with pytest.raises(DimensionError):
        rotor_chain_hamiltonian(ChainParams(5, 1.0, 1.0), 1)
    with pytest.raises(DimensionError):
        rotor_chain_hamiltonian(ChainParams(4, 1.0, 1.0), 10)
    with pytest.raises(InputError):
        rotor_chain_dynamics(ChainParams(2, 1.0, 1.0), 3, [1.0, 0.5])
