"""
Two coupled quantum rotors in a truncated angular-momentum basis p1, p2 in {-M..M}.

    H = (p1^2 + p2^2)/2 + omega^2 (2 - cos x1 - cos x2) + kappa (1 - cos(x1 - x2))

cos x acts as half the sum of the momentum shifts p -> p +- 1. After the quench omega^2 -> 0
the total momentum p = p1 + p2 is conserved and the Hamiltonian splits into the zero-mode
levels p^2/4 and a Mathieu-type relative problem in d = p1 - p2 with d = p (mod 2).
"""

from __future__ import annotations
from dataclasses import dataclass
from dataclasses import field
from typing import Literal
import logging
import math
import warnings

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from zeromode.models.cho2 import ChoQuench
from zeromode.models.cho2 import entanglement_arrays
from zeromode.utils.misc import DimensionError
from zeromode.utils.misc import GridTooCoarseError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import TruncationError
from zeromode.utils.misc import TruncationWarning
from zeromode.utils.numerics import SpectralDecomposition
from zeromode.utils.numerics import eig_sym
from zeromode.utils.numerics import krylov_propagate
from zeromode.utils.numerics import lanczos_ground
from zeromode.utils.numerics import schmidt_entropy
from zeromode.utils.numerics import von_neumann_entropy

logger = logging.getLogger(__name__)

# Dense diagonalization up to this basis dimension, Lanczos/Krylov above
DENSE_LIMIT = 4096

CosineKind = Literal['sum', 'diff', 'site1']


@dataclass(frozen=True)
class RotorParams:
    """Pre-quench on-site strength omega^2, coupling kappa and momentum cutoff M."""

    omega_sq: float
    kappa: float
    M: int

    def __post_init__(self):
        if self.omega_sq < 0:
            raise InputError(f'omega_sq must be non-negative, got {self.omega_sq}')
        if self.kappa < 0:
            raise InputError(f'kappa must be non-negative, got {self.kappa}')
        if int(self.M) != self.M or self.M < 1:
            raise InputError(f'Cutoff M must be a positive integer, got {self.M}')

    @property
    def size(self) -> int:
        """Single-site basis size 2M + 1."""
        return 2 * self.M + 1

    @property
    def dim(self) -> int:
        return self.size ** 2


@dataclass(frozen=True)
class WaveFunction:
    """
    Two-rotor state as amplitudes c(p1, p2); axis 0 is p1 and axis 1 is p2, both running
    from -M to M.
    """

    amplitudes: np.ndarray
    norm_tol: float = field(default=1e-10, repr=False, compare=False)

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 2 or amplitudes.shape[0] != amplitudes.shape[1] or amplitudes.shape[0] % 2 == 0:
            raise DimensionError(f'Amplitudes must be a (2M+1)x(2M+1) array, got shape {amplitudes.shape}')
        norm_sq = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm_sq - 1) > self.norm_tol:
            raise InputError(f'Wave function not normalized: sum |c|^2 = {norm_sq:.15g}')
        object.__setattr__(self, 'amplitudes', amplitudes)

    @classmethod
    def from_flat(cls, vector: np.ndarray, M: int) -> WaveFunction:
        return cls(np.asarray(vector).reshape(2 * M + 1, 2 * M + 1))

    @classmethod
    def basis_state(cls, M: int, p1: int, p2: int) -> WaveFunction:
        amplitudes = np.zeros((2 * M + 1, 2 * M + 1), dtype=complex)
        amplitudes[p1 + M, p2 + M] = 1
        return cls(amplitudes)

    @property
    def M(self) -> int:
        return (self.amplitudes.shape[0] - 1) // 2

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    @property
    def boundary_weight(self) -> float:
        """Probability on the outermost momenta |p1| = M or |p2| = M."""
        prob = np.abs(self.amplitudes) ** 2
        inner = prob[1:-1, 1:-1].sum()
        return float(max(prob.sum() - inner, 0.0))


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """Single-site density matrix rho_1(p1, p1') in the momentum basis."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(f'Density matrix must be square, got shape {entries.shape}')
        if np.max(np.abs(entries - entries.conj().T), initial=0.0) > 1e-10:
            raise InputError('Density matrix is not Hermitian')
        trace = np.trace(entries).real
        if abs(trace - 1) > 1e-10:
            raise InputError(f'Density matrix trace {trace:.15g} differs from 1')
        object.__setattr__(self, 'entries', entries)

    @property
    def M(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass(frozen=True)
class SectorLabel:
    """Total momentum p, relative momentum d and their common parity."""

    p: int
    d: int
    parity: int

    def __post_init__(self):
        if (self.p - self.d) % 2 != 0 or self.parity != self.p % 2:
            raise InputError(f'Inconsistent sector label p={self.p}, d={self.d}, parity={self.parity}')


@dataclass(frozen=True)
class RelativeSpectrum:
    """Relative-coordinate levels of one parity; vectors are columns over the d grid."""

    parity: int
    d: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    # +1 for d -> -d symmetric (cosine-like) states, -1 for antisymmetric ones
    reflection: np.ndarray


@dataclass(frozen=True)
class PostQuenchSpectra:
    """Zero-mode levels p^2/4 and the relative Mathieu-type levels split by parity."""

    kappa: float
    M: int
    zero_mode_momenta: np.ndarray
    zero_mode_energies: np.ndarray
    relative: dict[int, RelativeSpectrum]

    @property
    def relative_levels(self) -> np.ndarray:
        """All relative levels, both parities, ascending."""
        return np.sort(np.concatenate([spectrum.energies for spectrum in self.relative.values()]))


@dataclass(frozen=True)
class PositionKernel:
    """Reduced density matrix rho_1(x, x') sampled on a uniform grid over [-pi, pi)."""

    x: np.ndarray
    kernel: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.kernel)) * 2 * np.pi / self.x.size)


@dataclass(frozen=True)
class RotorDynamics:
    """Post-quench time series of the two-rotor system."""

    params: RotorParams
    ground_energy: float
    psi0: WaveFunction
    t: np.ndarray
    S: np.ndarray
    S_cho: np.ndarray
    cos_plus: np.ndarray
    cos_minus: np.ndarray
    boundary_weight: np.ndarray


def sector_label(p1: int, p2: int) -> SectorLabel:
    p = p1 + p2
    return SectorLabel(p=p, d=p1 - p2, parity=p % 2)

def momentum_operators(M: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Single-site momentum P = diag(-M..M) and the raising shift S|p> = |p+1> (i.e. e^{ix})."""
    size = 2 * M + 1
    momentum = sp.diags(np.arange(-M, M + 1, dtype=float), format='csr')
    raising = sp.diags(np.ones(size - 1), -1, format='csr')
    return momentum, raising

def build_hamiltonian(params: RotorParams, omega_sq_post: float | None = None) -> sp.csr_matrix:
    """
    Sparse two-rotor Hamiltonian. The on-site strength is params.omega_sq unless
    omega_sq_post is given (0 for the post-quench operator).
    """
    omega_sq = params.omega_sq if omega_sq_post is None else omega_sq_post
    if omega_sq < 0:
        raise InputError(f'On-site strength must be non-negative, got {omega_sq}')

    momentum, raising = momentum_operators(params.M)
    identity = sp.identity(params.size, format='csr')
    cosine = 0.5 * (raising + raising.T)

    kinetic = 0.5 * (sp.kron(momentum @ momentum, identity) + sp.kron(identity, momentum @ momentum))
    onsite = 2 * sp.kron(identity, identity) - sp.kron(cosine, identity) - sp.kron(identity, cosine)
    # (p1-1, p2+1) <-> (p1, p2) and the reverse, each with weight -kappa/2
    counter_shift = sp.kron(raising, raising.T) + sp.kron(raising.T, raising)
    coupling = sp.kron(identity, identity) - 0.5 * counter_shift

    return (kinetic + omega_sq * onsite + params.kappa * coupling).tocsr()

def _check_boundary(weight: float, M: int, boundary_tol: float) -> None:
    if weight > boundary_tol:
        message = (f'Boundary weight {weight:.2e} at M={M} exceeds {boundary_tol:.0e}; '
                   f'try M >= {M + max(4, M // 2)}')
        logger.warning(message)
        warnings.warn(message, TruncationWarning, stacklevel=3)

def _fix_gauge(vector: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component real and positive."""
    pivot = vector[np.argmax(np.abs(vector))]
    return vector * (abs(pivot) / pivot)

def ground_state(H, M: int | None = None, boundary_tol: float = 1e-10,
                 dense_limit: int = DENSE_LIMIT) -> tuple[float, WaveFunction]:
    """Lowest eigenpair of a two-rotor Hamiltonian with the truncation diagnostic."""
    dim = H.shape[0]
    size = math.isqrt(dim)
    if size * size != dim or size % 2 == 0:
        raise DimensionError(f'Hamiltonian dimension {dim} is not (2M+1)^2')
    if M is None:
        M = (size - 1) // 2
    elif 2 * M + 1 != size:
        raise DimensionError(f'Cutoff M={M} does not match Hamiltonian dimension {dim}')

    if dim <= dense_limit:
        spec = eig_sym(H)
        energy, vector = float(spec.eigenvalues[0]), spec.eigenvectors[:, 0]
    else:
        energy, vector = lanczos_ground(lambda v: H @ v, dim)

    psi = WaveFunction.from_flat(_fix_gauge(vector.astype(complex)), M)
    _check_boundary(psi.boundary_weight, M, boundary_tol)
    logger.debug('Ground state M=%d dim=%d E0=%.15g boundary=%.2e', M, dim, energy, psi.boundary_weight)
    return energy, psi

def initial_cutoff(omega_sq: float, kappa: float) -> int:
    """Starting cutoff M0 = ceil(4 + 2 (omega^2 + 2 kappa)^(1/4))."""
    return math.ceil(4 + 2 * (omega_sq + 2 * kappa) ** 0.25)

def choose_cutoff(omega_sq: float, kappa: float, boundary_tol: float = 1e-10, max_M: int = 96) -> int:
    """Smallest cutoff of the sequence 4 + (M0 - 4) 2^k whose ground state passes the boundary test."""
    M = initial_cutoff(omega_sq, kappa)
    if M > max_M:
        raise TruncationError(f'Starting cutoff M={M} already exceeds the limit M={max_M}')
    margin = M - 4
    while True:
        params = RotorParams(omega_sq, kappa, M)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', TruncationWarning)
            _, psi = ground_state(build_hamiltonian(params), M, boundary_tol)
        logger.debug('Cutoff M=%d: boundary weight %.2e', M, psi.boundary_weight)
        if psi.boundary_weight < boundary_tol:
            logger.info('Chose cutoff M=%d (dimension %d)', M, params.dim)
            return M
        margin *= 2
        M = 4 + margin
        if M > max_M:
            raise TruncationError(f'No cutoff up to M={max_M} reaches boundary weight {boundary_tol:g}')

def _sector_block(kappa: float, M: int, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenpairs of the post-quench Hamiltonian restricted to total momentum p, with the p1 grid."""
    p1 = np.arange(max(-M, p - M), min(M, p + M) + 1)
    p2 = p - p1
    diagonal = 0.5 * (p1 ** 2 + p2 ** 2) + kappa
    if p1.size == 1:
        return diagonal.copy(), np.ones((1, 1)), p1
    energies, vectors = scipy.linalg.eigh_tridiagonal(diagonal, np.full(p1.size - 1, -kappa / 2))
    return energies, vectors, p1

def post_quench_decomposition(params: RotorParams, omega_sq_post: float = 0.0) -> SpectralDecomposition:
    """
    Eigenbasis of the post-quench Hamiltonian.

    For omega_sq_post = 0 it is built sector by sector in total momentum, so every
    eigenvector carries a definite p. Otherwise the full matrix is diagonalized.
    """
    if omega_sq_post != 0:
        return eig_sym(build_hamiltonian(params, omega_sq_post))

    M, size = params.M, params.size
    energies = np.empty(params.dim)
    vectors = np.zeros((params.dim, params.dim))
    column = 0
    for p in range(-2 * M, 2 * M + 1):
        block_energies, block_vectors, p1 = _sector_block(params.kappa, M, p)
        rows = (p1 + M) * size + (p - p1 + M)
        width = block_energies.size
        energies[column:column + width] = block_energies
        vectors[rows, column:column + width] = block_vectors
        column += width

    order = np.argsort(energies, kind='stable')
    return SpectralDecomposition(energies[order], vectors[:, order])

def evolve(spec: SpectralDecomposition, psi0: WaveFunction, t: float) -> WaveFunction:
    """Spectral time evolution c(t) = sum_n exp(-i E_n t) <n|psi0> |n>."""
    return evolve_many(spec, psi0, [t])[0]

def evolve_many(spec: SpectralDecomposition, psi0: WaveFunction, ts) -> list[WaveFunction]:
    """Evolve psi0 to every time in ts with one batched spectral product."""
    if spec.dim != psi0.flat.size:
        raise DimensionError(f'Spectral decomposition of dimension {spec.dim} does not match '
                             f'state of dimension {psi0.flat.size}')
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    overlaps = spec.eigenvectors.T @ psi0.flat
    phases = np.exp(-1j * np.outer(spec.eigenvalues, ts))
    states = spec.eigenvectors @ (overlaps[:, None] * phases)
    return [WaveFunction.from_flat(states[:, i], psi0.M) for i in range(ts.size)]

def reduce_site(psi: WaveFunction) -> ReducedDensityMatrix:
    """Trace out rotor 2: rho_1(p1, p1') = sum_p2 c(p1, p2) c*(p1', p2)."""
    c = psi.amplitudes
    return ReducedDensityMatrix(c @ c.conj().T)

def partial_trace(rho_full: np.ndarray, M: int) -> ReducedDensityMatrix:
    """Trace rotor 2 out of a full-basis density matrix."""
    size = 2 * M + 1
    rho = np.asarray(rho_full).reshape(size, size, size, size)
    return ReducedDensityMatrix(np.einsum('abcb->ac', rho))

def entanglement_entropy(rho: ReducedDensityMatrix) -> float:
    """von Neumann entropy (nats) of a reduced density matrix."""
    return von_neumann_entropy(rho.eigenvalues())

def entropy_of(psi: WaveFunction) -> float:
    """Entanglement entropy of a pure two-rotor state via its Schmidt values."""
    return schmidt_entropy(psi.amplitudes)

def expectation_cos(psi: WaveFunction, which: CosineKind) -> float:
    """<cos(x1 + x2)>, <cos(x1 - x2)> or <cos x1> from momentum-shift overlaps."""
    c = psi.amplitudes
    if which == 'sum':
        overlap = np.vdot(c[1:, 1:], c[:-1, :-1])
    elif which == 'diff':
        overlap = np.vdot(c[1:, :-1], c[:-1, 1:])
    elif which == 'site1':
        overlap = np.vdot(c[1:, :], c[:-1, :])
    else:
        raise InputError(f"Unknown cosine observable '{which}' (expected sum, diff or site1)")
    return float(overlap.real)

def momentum_marginal(psi: WaveFunction, site: int = 1) -> np.ndarray:
    """Momentum distribution f(p; t) of one rotor."""
    if site not in (1, 2):
        raise InputError(f'Site must be 1 or 2, got {site}')
    return np.sum(np.abs(psi.amplitudes) ** 2, axis=2 - site)

def total_momentum_distribution(psi: WaveFunction) -> tuple[np.ndarray, np.ndarray]:
    """Distribution of p = p1 + p2 over -2M..2M."""
    M = psi.M
    momenta = np.arange(-M, M + 1)
    totals = (momenta[:, None] + momenta[None, :] + 2 * M).ravel()
    weights = np.bincount(totals, weights=(np.abs(psi.amplitudes) ** 2).ravel(), minlength=4 * M + 1)
    return np.arange(-2 * M, 2 * M + 1), weights

def parity_weights(psi: WaveFunction) -> tuple[float, float]:
    """Total probability of even and odd total momentum."""
    momenta, weights = total_momentum_distribution(psi)
    return float(weights[momenta % 2 == 0].sum()), float(weights[momenta % 2 == 1].sum())

def position_kernel(rho: ReducedDensityMatrix, n_x: int | None = None) -> PositionKernel:
    """rho_1(x, x') = (1/2pi) sum_{p,p'} rho(p, p') exp(i p x - i p' x') on n_x angles."""
    M = rho.M
    if n_x is None:
        n_x = 4 * M + 1
    if n_x < 2 * M + 1:
        raise GridTooCoarseError(f'Grid of {n_x} angles cannot resolve momenta up to |p| = {M}')
    x = -np.pi + 2 * np.pi * np.arange(n_x) / n_x
    fourier = np.exp(1j * np.outer(x, np.arange(-M, M + 1))) / np.sqrt(2 * np.pi)
    return PositionKernel(x, fourier @ rho.entries @ fourier.conj().T)

def _relative_spectrum(kappa: float, M: int, parity: int) -> RelativeSpectrum:
    d = np.arange(-2 * M + parity, 2 * M + 1, 2)
    diagonal = d ** 2 / 4 + kappa
    if d.size == 1:
        energies, vectors = diagonal.copy(), np.ones((1, 1))
    else:
        energies, vectors = scipy.linalg.eigh_tridiagonal(diagonal, np.full(d.size - 1, -kappa / 2))
    reflection = np.sign(np.round(np.sum(vectors * vectors[::-1], axis=0), 12))
    return RelativeSpectrum(parity=parity, d=d, energies=energies, vectors=vectors, reflection=reflection)

def post_quench_spectra(kappa: float, M: int, levels: int = 1, tol: float = 1e-10) -> PostQuenchSpectra:
    """
    Post-quench spectra: zero-mode levels p^2/4 ordered by |p| and the relative levels
    d^2/4 + kappa - (kappa/2)(shift d by +-2) of each parity, i.e. kappa + a/4 of the
    Mathieu problem with q = -2 kappa.

    The lowest `levels` states of each parity must have boundary weight below tol.
    """
    if kappa < 0:
        raise InputError(f'kappa must be non-negative, got {kappa}')
    if M < 1:
        raise InputError(f'Cutoff M must be positive, got {M}')

    relative = {}
    for parity in (0, 1):
        spectrum = _relative_spectrum(kappa, M, parity)
        checked = spectrum.vectors[:, :levels]
        edge = float(np.max(checked[0] ** 2 + checked[-1] ** 2)) if checked.size else 0.0
        if edge > tol:
            raise TruncationError(f'Relative levels of parity {parity} not converged at M={M} '
                                  f'(boundary weight {edge:.2e})')
        relative[parity] = spectrum

    momenta = np.arange(-2 * M, 2 * M + 1)
    momenta = momenta[np.argsort(np.abs(momenta), kind='stable')]
    return PostQuenchSpectra(kappa=kappa, M=M, zero_mode_momenta=momenta,
                             zero_mode_energies=momenta ** 2 / 4, relative=relative)

def _propagate_krylov(H_post, psi0: WaveFunction, ts: np.ndarray, tol: float) -> list[WaveFunction]:
    if np.any(np.diff(ts) < 0):
        raise InputError('Krylov propagation needs ascending times')
    states = []
    vector, current = psi0.flat.copy(), 0.0
    for t in ts:
        vector = krylov_propagate(lambda v: H_post @ v, vector, t - current, tol=tol)
        current = t
        states.append(WaveFunction.from_flat(vector, psi0.M))
    return states

def quench_dynamics(params: RotorParams, ts, boundary_tol: float = 1e-10,
                    dense_limit: int = DENSE_LIMIT, krylov_tol: float = 1e-10) -> RotorDynamics:
    """
    Quench the pre-quench ground state to omega^2 = 0 and record the entanglement entropy,
    the harmonic reference, <cos(x1 +- x2)> and the boundary weight at each time.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts < 0):
        raise InputError('Times must be non-negative')

    energy, psi0 = ground_state(build_hamiltonian(params), params.M, boundary_tol, dense_limit)
    if params.dim <= dense_limit:
        states = evolve_many(post_quench_decomposition(params), psi0, ts)
    else:
        logger.info('Basis dimension %d above %d: using Krylov propagation', params.dim, dense_limit)
        states = _propagate_krylov(build_hamiltonian(params, 0.0), psi0, ts, krylov_tol)

    S = np.array([entropy_of(psi) for psi in states])
    cos_plus = np.array([expectation_cos(psi, 'sum') for psi in states])
    cos_minus = np.array([expectation_cos(psi, 'diff') for psi in states])
    boundary = np.array([psi.boundary_weight for psi in states])
    if boundary.size and boundary.max() > boundary_tol:
        _check_boundary(float(boundary.max()), params.M, boundary_tol)

    if params.omega_sq > 0:
        S_cho = entanglement_arrays(ChoQuench(np.sqrt(params.omega_sq), params.kappa), ts).S
    else:
        S_cho = np.full(ts.size, np.nan)

    return RotorDynamics(params=params, ground_energy=energy, psi0=psi0, t=ts, S=S, S_cho=S_cho,
                         cos_plus=cos_plus, cos_minus=cos_minus, boundary_weight=boundary)
