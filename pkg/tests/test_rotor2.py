import math

import numpy as np
import pytest
import scipy.special

from zeromode.models.rotor2 import ReducedDensityMatrix
from zeromode.models.rotor2 import RotorParams
from zeromode.models.rotor2 import WaveFunction
from zeromode.models.rotor2 import build_hamiltonian
from zeromode.models.rotor2 import choose_cutoff
from zeromode.models.rotor2 import entanglement_entropy
from zeromode.models.rotor2 import entropy_of
from zeromode.models.rotor2 import evolve
from zeromode.models.rotor2 import evolve_many
from zeromode.models.rotor2 import expectation_cos
from zeromode.models.rotor2 import ground_state
from zeromode.models.rotor2 import momentum_marginal
from zeromode.models.rotor2 import parity_weights
from zeromode.models.rotor2 import partial_trace
from zeromode.models.rotor2 import position_kernel
from zeromode.models.rotor2 import post_quench_decomposition
from zeromode.models.rotor2 import post_quench_spectra
from zeromode.models.rotor2 import quench_dynamics
from zeromode.models.rotor2 import reduce_site
from zeromode.models.rotor2 import total_momentum_distribution
from zeromode.utils.misc import DimensionError
from zeromode.utils.misc import GridTooCoarseError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import TruncationError
from zeromode.utils.misc import TruncationWarning
from zeromode.utils.numerics import eig_sym
from zeromode.utils.numerics import fit_polynomial


@pytest.fixture(scope='module')
def strong_coupling():
    """Quench at omega^2 = 10, kappa = 100 on a grid covering the first revival."""
    M = choose_cutoff(10, 100)
    ts = np.linspace(0, 30, 601)
    return quench_dynamics(RotorParams(10, 100, M), ts)


def test_free_hamiltonian_is_diagonal():
    H = build_hamiltonian(RotorParams(0, 0, 3)).toarray()
    momenta = np.arange(-3, 4)
    expected = 0.5 * (momenta[:, None] ** 2 + momenta[None, :] ** 2).ravel()
    np.testing.assert_array_equal(H, np.diag(expected))
    energy, psi = ground_state(build_hamiltonian(RotorParams(0, 0, 3)))
    assert energy == pytest.approx(0, abs=1e-14)
    assert abs(psi.amplitudes[3, 3]) == pytest.approx(1)


def test_hamiltonian_is_symmetric():
    H = build_hamiltonian(RotorParams(2.5, 7, 4))
    assert abs(H - H.T).max() == 0


def test_ground_energy_converges_in_cutoff():
    E20, _ = ground_state(build_hamiltonian(RotorParams(10, 100, 20)))
    E24, _ = ground_state(build_hamiltonian(RotorParams(10, 100, 24)))
    assert E20 == pytest.approx(E24, abs=1e-8)
    omega = math.sqrt(10)
    harmonic = 0.5 * (omega + math.sqrt(10 + 200))
    assert 0 < harmonic - E20 < 0.1 * harmonic


def test_small_cutoff_warns():
    with pytest.warns(TruncationWarning):
        ground_state(build_hamiltonian(RotorParams(10, 100, 2)), boundary_tol=1e-10)


def test_choose_cutoff_limit():
    with pytest.raises(TruncationError):
        choose_cutoff(10, 100, boundary_tol=1e-300, max_M=30)


def test_ground_state_dimension_mismatch():
    with pytest.raises(DimensionError):
        ground_state(build_hamiltonian(RotorParams(1, 1, 3)), M=4)


def test_evolution_at_zero_time_is_identity():
    params = RotorParams(5, 10, 8)
    _, psi0 = ground_state(build_hamiltonian(params))
    psi = evolve(post_quench_decomposition(params), psi0, 0.0)
    np.testing.assert_allclose(psi.amplitudes, psi0.amplitudes, atol=1e-12)


def test_stationary_state_keeps_its_entropy():
    params = RotorParams(0, 3, 6)
    spec = post_quench_decomposition(params)
    eigenstate = WaveFunction.from_flat(spec.eigenvectors[:, 5].astype(complex), 6)
    states = evolve_many(spec, eigenstate, [0.0, 1.3, 17.0])
    for psi in states:
        overlap = abs(np.vdot(eigenstate.flat, psi.flat))
        assert overlap == pytest.approx(1, abs=1e-12)
        assert entropy_of(psi) == pytest.approx(entropy_of(eigenstate), abs=1e-10)


def test_sector_decomposition_matches_full_hamiltonian():
    params = RotorParams(3, 4, 5)
    spec = post_quench_decomposition(params)
    H = build_hamiltonian(params, 0.0).toarray()
    np.testing.assert_allclose(H @ spec.eigenvectors, spec.eigenvectors * spec.eigenvalues, atol=1e-10)


def test_product_state_is_unentangled():
    a = np.array([0.0, 0.6, 0.8])
    b = np.array([1.0, 1.0j, 0.0]) / math.sqrt(2)
    psi = WaveFunction(np.outer(a, b))
    rho = reduce_site(psi)
    np.testing.assert_allclose(rho.entries, np.outer(a, a.conj()), atol=1e-15)
    assert entanglement_entropy(rho) == pytest.approx(0, abs=1e-12)
    assert entropy_of(psi) == pytest.approx(0, abs=1e-12)


def test_bell_state_entropy():
    amplitudes = np.zeros((3, 3))
    amplitudes[1, 1] = amplitudes[2, 2] = 1 / math.sqrt(2)
    psi = WaveFunction(amplitudes)
    np.testing.assert_allclose(np.sort(reduce_site(psi).eigenvalues()), [0, 0.5, 0.5], atol=1e-15)
    assert entropy_of(psi) == pytest.approx(math.log(2))


def test_partial_trace_of_pure_state_matches_reduce_site(rng):
    c = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    psi = WaveFunction(c / np.linalg.norm(c))
    rho_full = np.outer(psi.flat, psi.flat.conj())
    np.testing.assert_allclose(partial_trace(rho_full, 2).entries, reduce_site(psi).entries, atol=1e-14)


def test_maximally_mixed_entropy():
    assert entanglement_entropy(ReducedDensityMatrix(np.eye(7) / 7)) == pytest.approx(math.log(7))


def test_cosines_of_momentum_eigenstate_vanish():
    psi = WaveFunction.basis_state(4, 0, 0)
    for which in ('sum', 'diff', 'site1'):
        assert expectation_cos(psi, which) == 0
    with pytest.raises(InputError):
        expectation_cos(psi, 'other')


def test_localized_state_has_unit_cosines():
    # A wide Gaussian in momentum is sharply peaked at x1 = x2 = 0
    M = 30
    momenta = np.arange(-M, M + 1)
    a = np.exp(-momenta ** 2 / (4 * 8.0 ** 2))
    a /= np.linalg.norm(a)
    psi = WaveFunction(np.outer(a, a))
    assert expectation_cos(psi, 'site1') > 0.99
    assert expectation_cos(psi, 'sum') > 0.98
    assert expectation_cos(psi, 'diff') > 0.98


def test_momentum_marginal_of_product_state():
    a = np.array([0.0, 0.6, 0.8])
    psi = WaveFunction(np.outer(a, [0, 1, 0]))
    np.testing.assert_allclose(momentum_marginal(psi, 1), a ** 2)
    np.testing.assert_allclose(momentum_marginal(psi, 2), [0, 1, 0])


def test_ground_state_marginal_is_gaussian():
    _, psi = ground_state(build_hamiltonian(RotorParams(5, 10, 14)))
    f = momentum_marginal(psi)
    momenta = np.arange(-14, 15)
    keep = f > 1e-12
    fit = fit_polynomial(momenta[keep], np.log(f[keep]), 2)
    assert fit.r_squared > 0.99
    assert np.argmax(f) == 14


def test_total_momentum_and_parity():
    psi = WaveFunction.basis_state(2, 1, 2)
    momenta, weights = total_momentum_distribution(psi)
    assert momenta[np.argmax(weights)] == 3
    assert parity_weights(psi) == (0.0, 1.0)
    _, ground = ground_state(build_hamiltonian(RotorParams(5, 10, 8)))
    even, odd = parity_weights(ground)
    assert even + odd == pytest.approx(1)


def test_total_momentum_and_parity_conserved_after_quench():
    params = RotorParams(5, 10, 12)
    _, psi0 = ground_state(build_hamiltonian(params), params.M)
    _, initial = total_momentum_distribution(psi0)
    even, odd = parity_weights(psi0)
    assert initial.max() < 0.99
    for psi in evolve_many(post_quench_decomposition(params), psi0, [0.5, 3.0, 17.2]):
        np.testing.assert_allclose(total_momentum_distribution(psi)[1], initial, atol=1e-12)
        assert parity_weights(psi) == pytest.approx((even, odd), abs=1e-12)


def test_pinned_rotor_levels_follow_mathieu():
    omega_sq = 2.0
    q = 4 * omega_sq
    # With psi(x) = y(x / 2), p^2/2 + omega^2 (1 - cos x) maps to y'' + (a - 2q cos 2z) y = 0
    single = [omega_sq + scipy.special.mathieu_a(0, q) / 8, omega_sq + scipy.special.mathieu_b(2, q) / 8]
    levels = eig_sym(build_hamiltonian(RotorParams(omega_sq, 0, 16)).toarray()).eigenvalues
    expected = [2 * single[0], single[0] + single[1], single[0] + single[1]]
    np.testing.assert_allclose(levels[:3], expected, rtol=1e-8)


def test_position_kernel_of_maximally_mixed_state():
    kernel = position_kernel(ReducedDensityMatrix(np.eye(5) / 5))
    np.testing.assert_allclose(np.diag(kernel.kernel).real, 1 / (2 * math.pi), rtol=1e-12)
    assert kernel.trace == pytest.approx(1)


def test_position_kernel_of_momentum_eigenstate():
    rho = reduce_site(WaveFunction.basis_state(3, 2, 0))
    kernel = position_kernel(rho)
    np.testing.assert_allclose(np.abs(kernel.kernel), 1 / (2 * math.pi), rtol=1e-12)
    with pytest.raises(GridTooCoarseError):
        position_kernel(rho, n_x=6)


def test_free_relative_levels():
    spectra = post_quench_spectra(0, 6)
    d = spectra.relative[0].d
    np.testing.assert_allclose(spectra.relative[0].energies, np.sort(d ** 2 / 4), atol=1e-12)
    np.testing.assert_allclose(spectra.zero_mode_energies, spectra.zero_mode_momenta ** 2 / 4)


def test_strong_coupling_relative_gap_is_harmonic():
    spectra = post_quench_spectra(100, 30, levels=2)
    energies = spectra.relative[0].energies
    assert energies[1] - energies[0] == pytest.approx(math.sqrt(200), rel=0.02)


def test_unconverged_spectra_raise():
    with pytest.raises(TruncationError):
        post_quench_spectra(100, 3, levels=4)


def test_compact_and_harmonic_entropies_agree_early(strong_coupling):
    early = strong_coupling.t <= 1
    assert np.max(np.abs(strong_coupling.S[early] - strong_coupling.S_cho[early])) < 2e-2


def test_compact_entropy_saturates_below_harmonic(strong_coupling):
    assert strong_coupling.t[-1] == 30
    assert strong_coupling.S_cho[-1] - strong_coupling.S[-1] > 0.5


def test_quasi_revival_near_four_pi(strong_coupling):
    t, S = strong_coupling.t, strong_coupling.S
    window = np.nonzero(np.abs(t - 4 * math.pi) <= 0.5)[0]
    interior = window[(window > 0) & (window < t.size - 1)]
    minima = [i for i in interior if S[i] <= S[i - 1] and S[i] <= S[i + 1]]
    assert minima


def test_entropy_converges_in_cutoff(strong_coupling):
    M = strong_coupling.params.M
    ts = strong_coupling.t[::10]
    larger = quench_dynamics(RotorParams(10, 100, M + 4), ts)
    assert np.max(np.abs(larger.S - strong_coupling.S[::10])) < 1e-6


def test_krylov_path_matches_spectral_path():
    params = RotorParams(5, 10, 6)
    ts = np.array([0.0, 0.5, 2.0, 4.0])
    dense = quench_dynamics(params, ts)
    krylov = quench_dynamics(params, ts, dense_limit=10)
    np.testing.assert_allclose(krylov.S, dense.S, atol=1e-8)
    np.testing.assert_allclose(krylov.cos_plus, dense.cos_plus, atol=1e-8)


def test_invalid_parameters():
    with pytest.raises(InputError):
        RotorParams(-1, 1, 4)
    with pytest.raises(InputError):
        RotorParams(1, 1, 0)
    with pytest.raises(InputError):
        quench_dynamics(RotorParams(1, 1, 3), [-1.0])
