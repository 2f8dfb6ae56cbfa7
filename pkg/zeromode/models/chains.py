"""
Many-body engines for open (Neumann) chains of N sites.

The harmonic chain is Gaussian and is propagated through its 2N x 2N covariance matrix in
(x_1..x_N, p_1..p_N) ordering, mode by mode with the closed-form scaling functions. The rotor
chain lives on the truncated momentum grid {-M..M}^N and is handled by sparse exact
diagonalization with Krylov time stepping, which limits it to N <= 4.
"""

from __future__ import annotations
from dataclasses import dataclass
from dataclasses import field
from functools import reduce
import logging
import math
import warnings

import numpy as np
import scipy.sparse as sp
import scipy.special

from zeromode.models.cho2 import ermakov_solution
from zeromode.models.rotor2 import momentum_operators
from zeromode.utils.misc import DimensionError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import TruncationWarning
from zeromode.utils.misc import UnphysicalStateError
from zeromode.utils.misc import UnsupportedSectorError
from zeromode.utils.numerics import krylov_propagate
from zeromode.utils.numerics import lanczos_ground
from zeromode.utils.numerics import schmidt_entropy

logger = logging.getLogger(__name__)

MAX_ROTOR_SITES = 4
MAX_ROTOR_DIM = 50000


@dataclass(frozen=True)
class ChainParams:
    """
    Open chain of N sites with on-site strength omega^2 (pre-quench) and nearest-neighbour
    coupling kappa. The half-chain cut sits after site N // 2.

    N may be odd (the rotor-chain sweep runs N = 3). Subsystem A then holds the smaller
    half, N // 2 sites, and the two sides differ by one site.
    """

    N: int
    omega_sq: float
    kappa: float
    boundary: str = 'neumann'

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InputError(f'Chain length must be an integer >= 2, got {self.N}')
        if self.omega_sq < 0:
            raise InputError(f'omega_sq must be non-negative, got {self.omega_sq}')
        if self.kappa < 0:
            raise InputError(f'kappa must be non-negative, got {self.kappa}')
        if self.boundary != 'neumann':
            raise InputError(f'Only Neumann boundaries are supported, got {self.boundary!r}')

    @property
    def cut(self) -> int:
        return self.N // 2


@dataclass(frozen=True)
class NeumannModes:
    """Normal-mode frequencies omega_k and the orthonormal basis with columns f_k(n)."""

    frequencies: np.ndarray
    basis: np.ndarray


@dataclass(frozen=True)
class CovarianceState:
    """
    Second moments of a Gaussian chain state. The x-p block holds the symmetrized
    correlations <{x_m, p_n}>/2.
    """

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1] or gamma.shape[0] % 2:
            raise DimensionError(f'Covariance matrix must be 2N x 2N, got shape {gamma.shape}')
        if not np.allclose(gamma, gamma.T, rtol=0, atol=1e-10 * max(1.0, np.abs(gamma).max())):
            raise InputError('Covariance matrix is not symmetric')
        object.__setattr__(self, 'gamma', gamma)

    @property
    def N(self) -> int:
        return self.gamma.shape[0] // 2


@dataclass(frozen=True)
class HarmonicChainDynamics:
    params: ChainParams
    omega_sq_post: float
    t: np.ndarray
    S: np.ndarray
    # max over t and j of nu_j - 1/2 for the full chain
    purity_defect: float


@dataclass(frozen=True)
class RotorChainState:
    """Chain wave function with one axis of length 2M+1 per site."""

    amplitudes: np.ndarray
    norm_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        size = amplitudes.shape[0]
        if size % 2 == 0 or any(axis != size for axis in amplitudes.shape):
            raise DimensionError(f'Amplitude tensor must be (2M+1)^N, got shape {amplitudes.shape}')
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > self.norm_tol:
            raise InputError(f'Chain state is not normalized (norm {norm:.12g})')
        object.__setattr__(self, 'amplitudes', amplitudes)

    @classmethod
    def from_flat(cls, vector: np.ndarray, N: int, M: int) -> RotorChainState:
        return cls(np.asarray(vector).reshape((2 * M + 1,) * N))

    @property
    def N(self) -> int:
        return self.amplitudes.ndim

    @property
    def M(self) -> int:
        return (self.amplitudes.shape[0] - 1) // 2

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    @property
    def boundary_weight(self) -> float:
        """Probability that any site sits at |p| = M."""
        inner = np.abs(self.amplitudes[(slice(1, -1),) * self.N]) ** 2
        return float(max(0.0, 1.0 - inner.sum()))

    def half_chain_entropy(self) -> float:
        size = self.amplitudes.shape[0]
        cut = self.N // 2
        return schmidt_entropy(self.amplitudes.reshape(size ** cut, size ** (self.N - cut)))


@dataclass(frozen=True)
class RotorChainDynamics:
    params: ChainParams
    M: int
    ground_energy: float
    t: np.ndarray
    S: np.ndarray
    boundary_weight: np.ndarray


def neumann_laplacian(N: int) -> np.ndarray:
    """Graph Laplacian of the open path with N sites."""
    laplacian = 2 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)
    laplacian[0, 0] = laplacian[-1, -1] = 1
    return laplacian

def coupling_matrix(params: ChainParams, omega_sq: float | None = None) -> np.ndarray:
    """Quadratic form of the potential, V = x^T K x / 2 with K = omega^2 I + kappa L."""
    omega_sq = params.omega_sq if omega_sq is None else omega_sq
    return omega_sq * np.eye(params.N) + params.kappa * neumann_laplacian(params.N)

def neumann_modes(params: ChainParams, omega_sq: float | None = None) -> NeumannModes:
    """Cosine modes f_k(n) = c_k cos((n - 1/2) k pi / N), k = 0 the uniform mode."""
    omega_sq = params.omega_sq if omega_sq is None else omega_sq
    N = params.N
    k = np.arange(N)
    n = np.arange(1, N + 1)
    basis = np.sqrt(2 / N) * np.cos(np.outer(n - 0.5, k) * np.pi / N)
    basis[:, 0] = 1 / math.sqrt(N)
    frequencies_sq = omega_sq + 4 * params.kappa * np.sin(k * np.pi / (2 * N)) ** 2
    if np.any(frequencies_sq < 0):
        raise UnsupportedSectorError('Negative mode frequency squared (unstable sector)')
    return NeumannModes(np.sqrt(frequencies_sq), basis)

def _to_sites(basis: np.ndarray, xx, pp, xp) -> CovarianceState:
    x_block = (basis * xx) @ basis.T
    p_block = (basis * pp) @ basis.T
    xp_block = (basis * xp) @ basis.T
    gamma = np.block([[x_block, xp_block], [xp_block.T, p_block]])
    return CovarianceState(0.5 * (gamma + gamma.T))

def ground_covariance(params: ChainParams) -> CovarianceState:
    """Covariance matrix of the gapped pre-quench ground state."""
    if params.omega_sq <= 0:
        raise InputError('Ground-state covariance needs omega_sq > 0 (no zero mode before the quench)')
    modes = neumann_modes(params)
    omega = modes.frequencies
    return _to_sites(modes.basis, 1 / (2 * omega), omega / 2, np.zeros_like(omega))

def evolve_covariance(params: ChainParams, t: float, omega_sq_post: float = 0.0) -> CovarianceState:
    """
    Covariance matrix at time t after quenching omega^2 -> omega_sq_post, starting from the
    pre-quench ground state. Each normal mode follows its scaling function b_k(t).
    """
    if t < 0:
        raise InputError('Times must be non-negative')
    if omega_sq_post < 0:
        raise UnsupportedSectorError(f'Post-quench omega_sq {omega_sq_post} puts the zero mode '
                                     'in the unstable sector')
    if params.omega_sq <= 0:
        raise InputError('Quench needs a gapped initial state (omega_sq > 0)')

    initial = neumann_modes(params)
    final = neumann_modes(params, omega_sq_post)
    xx, pp, xp = [], [], []
    for omega_i, omega_f in zip(initial.frequencies, final.frequencies):
        b, bdot = ermakov_solution(float(omega_i), float(omega_f), t)
        b, bdot = float(b), float(bdot)
        xx.append(b ** 2 / (2 * omega_i))
        pp.append((omega_i ** 2 / b ** 2 + bdot ** 2) / (2 * omega_i))
        xp.append(b * bdot / (2 * omega_i))
    return _to_sites(initial.basis, np.array(xx), np.array(pp), np.array(xp))

def _symplectic_form(n: int) -> np.ndarray:
    return np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])

def _subsystem(gamma: np.ndarray, sites) -> np.ndarray:
    N = gamma.shape[0] // 2
    sites = np.asarray(sorted(set(int(s) for s in sites)))
    if sites.size == 0 or sites.min() < 0 or sites.max() >= N:
        raise InputError(f'Subsystem sites must be a non-empty subset of 0..{N - 1}')
    index = np.concatenate([sites, sites + N])
    return gamma[np.ix_(index, index)]

def symplectic_eigenvalues(gamma: np.ndarray, sites=None, tol: float = 1e-10) -> np.ndarray:
    """
    Symplectic spectrum nu_1 <= .. <= nu_n of the covariance matrix restricted to sites
    (all sites by default), from the eigenvalues +-nu_j of i Omega gamma_A.
    """
    gamma = np.asarray(gamma, dtype=float)
    reduced = gamma if sites is None else _subsystem(gamma, sites)
    n = reduced.shape[0] // 2
    values = np.linalg.eigvals(1j * _symplectic_form(n) @ reduced).real
    nu = np.sort(values)[-n:]
    if nu.min() < 0.5 - tol:
        raise UnphysicalStateError(f'Symplectic eigenvalue {nu.min():.12g} below 1/2 (uncertainty violated)')
    return np.clip(nu, 0.5, None)

def gaussian_entropy(nu: np.ndarray) -> float:
    """S = sum (nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2)."""
    nu = np.asarray(nu, dtype=float)
    plus, minus = nu + 0.5, nu - 0.5
    return float(np.sum(scipy.special.xlogy(plus, plus) - scipy.special.xlogy(minus, minus)))

def subsystem_entropy(gamma: np.ndarray, sites, tol: float = 1e-10) -> float:
    return gaussian_entropy(symplectic_eigenvalues(gamma, sites, tol))

def half_chain_entropy(gamma: np.ndarray, N_A: int, tol: float = 1e-10) -> float:
    """Entanglement entropy of the first N_A sites."""
    N = np.asarray(gamma).shape[0] // 2
    if not 1 <= N_A < N:
        raise InputError(f'Cut N_A must satisfy 1 <= N_A < {N}, got {N_A}')
    return subsystem_entropy(gamma, range(N_A), tol)

def harmonic_chain_dynamics(params: ChainParams, ts, omega_sq_post: float = 0.0) -> HarmonicChainDynamics:
    """Half-chain entropy after the quench at each time in ts."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    S = np.empty(ts.size)
    defect = 0.0
    for i, t in enumerate(ts):
        gamma = evolve_covariance(params, float(t), omega_sq_post).gamma
        S[i] = half_chain_entropy(gamma, params.cut)
        defect = max(defect, float(symplectic_eigenvalues(gamma).max()) - 0.5)
    logger.debug('Harmonic chain N=%d: %d times, purity defect %.2e', params.N, ts.size, defect)
    return HarmonicChainDynamics(params=params, omega_sq_post=omega_sq_post, t=ts, S=S,
                                 purity_defect=defect)

def _embed(operator, site: int, N: int, identity) -> sp.csr_matrix:
    factors = [operator if n == site else identity for n in range(N)]
    return reduce(lambda a, b: sp.kron(a, b, format='csr'), factors)

def rotor_chain_hamiltonian(params: ChainParams, M: int, omega_sq: float | None = None,
                            max_dim: int = MAX_ROTOR_DIM) -> sp.csr_matrix:
    """
    Sparse rotor-chain Hamiltonian

        H = sum p_n^2 / 2 + omega^2 sum (1 - cos x_n) + kappa sum (1 - cos(x_n - x_{n+1}))

    with open ends. Site 1 is the slowest index of the flattened basis.
    """
    omega_sq = params.omega_sq if omega_sq is None else omega_sq
    if omega_sq < 0:
        raise InputError(f'On-site strength must be non-negative, got {omega_sq}')
    if int(M) != M or M < 1:
        raise InputError(f'Cutoff M must be a positive integer, got {M}')
    N = params.N
    dim = (2 * M + 1) ** N
    if N > MAX_ROTOR_SITES or dim > max_dim:
        raise DimensionError(f'Rotor chain N={N}, M={M} has dimension {dim}; '
                             f'limit is N <= {MAX_ROTOR_SITES} and dim <= {max_dim}')

    momentum, raising = momentum_operators(M)
    identity = sp.identity(2 * M + 1, format='csr')
    cosine = 0.5 * (raising + raising.T)
    one = sp.identity(dim, format='csr')

    H = sp.csr_matrix((dim, dim))
    for n in range(N):
        H = H + 0.5 * _embed(momentum @ momentum, n, N, identity)
        H = H + omega_sq * (one - _embed(cosine, n, N, identity))
    for n in range(N - 1):
        counter_shift = (_embed(raising, n, N, identity) @ _embed(raising.T, n + 1, N, identity)
                         + _embed(raising.T, n, N, identity) @ _embed(raising, n + 1, N, identity))
        H = H + params.kappa * (one - 0.5 * counter_shift)
    return H.tocsr()

def total_momentum(N: int, M: int) -> sp.csr_matrix:
    momentum, _ = momentum_operators(M)
    identity = sp.identity(2 * M + 1, format='csr')
    return reduce(lambda a, b: a + b, (_embed(momentum, n, N, identity) for n in range(N))).tocsr()

def rotor_chain_dynamics(params: ChainParams, M: int, ts, tol: float = 1e-10, boundary_tol: float = 1e-6,
                         max_dim: int = MAX_ROTOR_DIM) -> RotorChainDynamics:
    """
    Half-chain entanglement entropy of the rotor chain after quenching omega^2 -> 0 from the
    pre-quench ground state.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0) or np.any(np.diff(ts) < 0):
        raise InputError('Times must be non-negative and ascending')

    H_pre = rotor_chain_hamiltonian(params, M, max_dim=max_dim)
    H_post = rotor_chain_hamiltonian(params, M, omega_sq=0.0, max_dim=max_dim)
    dim = H_pre.shape[0]
    logger.info('Rotor chain N=%d M=%d: dimension %d, %d times', params.N, M, dim, ts.size)

    energy, vector = lanczos_ground(lambda v: H_pre @ v, dim)
    vector = vector.astype(complex)

    S = np.empty(ts.size)
    boundary = np.empty(ts.size)
    current = 0.0
    for i, t in enumerate(ts):
        vector = krylov_propagate(lambda v: H_post @ v, vector, t - current, tol=tol)
        current = t
        state = RotorChainState.from_flat(vector / np.linalg.norm(vector), params.N, M)
        S[i] = state.half_chain_entropy()
        boundary[i] = state.boundary_weight

    if boundary.size and boundary.max() > boundary_tol:
        message = f'Rotor chain boundary weight {boundary.max():.2e} at M={M} exceeds {boundary_tol:.0e}'
        logger.warning(message)
        warnings.warn(message, TruncationWarning, stacklevel=2)
    return RotorChainDynamics(params=params, M=M, ground_energy=energy, t=ts, S=S,
                              boundary_weight=boundary)
