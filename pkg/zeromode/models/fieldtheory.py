"""
Continuum calculator for the relative phase of a tunnel-coupled pair of 1D condensates.

Before the quench the relative phase is a massive Klein-Gordon field; switching the tunnel
coupling J off leaves the massless Tomonaga-Luttinger Hamiltonian, whose k = 0 mode is a free
particle on a circle of radius R0. All mode quantities refer to the rescaled Hamiltonian
H / (2 g1D), i.e. to the rescaled time t~ = 2 g1D t.
"""

from __future__ import annotations
from dataclasses import dataclass
from dataclasses import field
import logging
import math
import warnings

import numpy as np
import scipy.constants

from zeromode.utils.misc import DeepQuenchWarning
from zeromode.utils.misc import InputError

logger = logging.getLogger(__name__)

UNIFORM_VARIANCE = math.pi ** 2 / 3


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA values in SI units; override to work in another unit system."""

    hbar: float = scipy.constants.hbar
    k_B: float = scipy.constants.k


@dataclass(frozen=True)
class CondensateParams:
    """
    Homogeneous condensate pair of length L (m) with linear density n1d (1/m), interaction
    g1d (kg m^3 / s^2), atom mass m_atom (kg), angular tunnel rate J (1/s) and temperature
    T (K). J = 0 (massless before the quench) and T = 0 (ground state) are accepted.
    """

    L: float
    n1d: float
    g1d: float
    m_atom: float
    J: float
    T: float
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        for name in ('L', 'n1d', 'g1d', 'm_atom'):
            if not getattr(self, name) > 0:
                raise InputError(f'{name} must be positive, got {getattr(self, name)}')
        for name in ('J', 'T'):
            if not getattr(self, name) >= 0:
                raise InputError(f'{name} must be non-negative, got {getattr(self, name)}')
        if not (self.constants.hbar > 0 and self.constants.k_B > 0):
            raise InputError('Physical constants must be positive')

    @property
    def R0(self) -> float:
        """Compactification radius sqrt(L) of the k = 0 mode."""
        return math.sqrt(self.L)

    @property
    def mass_term(self) -> float:
        """hbar J n1d / g1d, the k-independent part of Omega_i^2."""
        return self.constants.hbar * self.J * self.n1d / self.g1d

    @property
    def gradient_term(self) -> float:
        """hbar^2 n1d / (4 m g1d), the prefactor of (pi k / L)^2."""
        return self.constants.hbar ** 2 * self.n1d / (4 * self.m_atom * self.g1d)


SPLIT_CONDENSATE = CondensateParams(L=49e-6, n1d=70e6, g1d=8.594e-39, m_atom=1.433e-25,
                                    J=2 * math.pi * 0.76, T=49e-9)


@dataclass(frozen=True)
class ModeSpectrum:
    k: int
    Omega_i: float
    Omega_f: float


@dataclass(frozen=True)
class TimescaleResult:
    """
    Compactness timescale. t_c is the deep-quench closed form, t_exact the root of
    sigma^2(t) = pi^2 R0^2 / 3 without that approximation (0 if the initial state is already
    spread over the circle).
    """

    t_c: float
    t_exact: float
    sigma0_sq: float
    sigma_rho0_sq: float
    R0: float
    target: float
    deep_quench: bool

    @property
    def deep_quench_ratio(self) -> float:
        return self.sigma0_sq / self.target


@dataclass(frozen=True)
class FreezingResult:
    k: int
    r_k: float
    frozen: bool


@dataclass(frozen=True)
class LatticeMap:
    """
    Rotor-chain parameters for N sites of spacing a. Lattice times are in units of time_unit
    seconds and lattice energies in units of energy_unit joules.
    """

    N: int
    a: float
    omega_sq: float
    kappa: float
    time_unit: float
    energy_unit: float


def _check_mode(k) -> np.ndarray:
    k = np.asarray(k)
    if np.any(k < 0) or np.any(np.asarray(k, dtype=float) != np.round(k)):
        raise InputError(f'Mode index must be a non-negative integer, got {k}')
    return k.astype(int)

def mode_frequencies(p: CondensateParams, k: int) -> ModeSpectrum:
    """Pre- and post-quench frequencies of mode k of the rescaled Hamiltonian."""
    k = int(_check_mode(k))
    gradient = p.gradient_term * (math.pi * k / p.L) ** 2
    return ModeSpectrum(k=k, Omega_i=math.sqrt(p.mass_term + gradient), Omega_f=math.sqrt(gradient))

def mode_spectrum(p: CondensateParams, ks) -> tuple[np.ndarray, np.ndarray]:
    ks = _check_mode(ks)
    gradient = p.gradient_term * (np.pi * ks / p.L) ** 2
    return np.sqrt(p.mass_term + gradient), np.sqrt(gradient)

def _thermal_factor(p: CondensateParams, Omega: float) -> float:
    """coth(g1d Omega / k_B T), 1 at zero temperature."""
    if p.T == 0:
        return 1.0
    x = p.g1d * Omega / (p.constants.k_B * p.T)
    if x == 0:
        return math.inf
    return 1.0 / math.tanh(x)

def thermal_zero_mode_variances(p: CondensateParams) -> tuple[float, float]:
    """Initial (phase, density) variances of the k = 0 mode in the pre-quench thermal state."""
    Omega = mode_frequencies(p, 0).Omega_i
    if Omega == 0:
        raise InputError('Zero-mode variances need a gapped pre-quench mode (J > 0)')
    factor = _thermal_factor(p, Omega)
    return factor / (2 * Omega), Omega * factor / 2

def zero_mode_variance(p: CondensateParams, t) -> np.ndarray:
    """Ballistic spreading sigma^2(0) + (2 g1d t / hbar)^2 sigma_rho^2(0) of the non-compact zero mode."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError('Times must be non-negative')
    sigma0_sq, sigma_rho0_sq = thermal_zero_mode_variances(p)
    rescaled = 2 * p.g1d * t / p.constants.hbar
    return sigma0_sq + rescaled ** 2 * sigma_rho0_sq

def zero_mode_angle_variance(p: CondensateParams, t, R0: float | None = None) -> np.ndarray:
    """Zero-mode variance expressed as an angle on the circle of radius R0."""
    R0 = p.R0 if R0 is None else R0
    if R0 <= 0:
        raise InputError(f'Compactification radius must be positive, got {R0}')
    return zero_mode_variance(p, t) / R0 ** 2

def compactness_timescale(p: CondensateParams, R0: float | None = None,
                          deep_quench_threshold: float = 0.1) -> TimescaleResult:
    """
    Time (s) at which the zero-mode variance reaches that of a uniform distribution on the
    circle, pi^2 R0^2 / 3. The deep-quench condition sigma^2(0) << pi^2 R0^2 / 3 is checked
    against deep_quench_threshold and a DeepQuenchWarning issued if it fails.
    """
    R0 = p.R0 if R0 is None else R0
    if R0 <= 0:
        raise InputError(f'Compactification radius must be positive, got {R0}')
    sigma0_sq, sigma_rho0_sq = thermal_zero_mode_variances(p)
    target = UNIFORM_VARIANCE * R0 ** 2
    scale = p.constants.hbar / (2 * p.g1d)

    t_c = scale * math.pi * R0 / (math.sqrt(3) * math.sqrt(sigma_rho0_sq))
    t_exact = scale * math.sqrt(max(target - sigma0_sq, 0.0) / sigma_rho0_sq)

    ratio = sigma0_sq / target
    deep_quench = ratio <= deep_quench_threshold
    if not deep_quench:
        message = (f'Initial zero-mode variance is {ratio:.3g} of the uniform value '
                   f'(threshold {deep_quench_threshold:g}); the closed-form t_c is unreliable')
        logger.warning(message)
        warnings.warn(message, DeepQuenchWarning, stacklevel=2)

    logger.debug('Compactness timescale t_c=%.6g s, exact root %.6g s, ratio %.3g', t_c, t_exact, ratio)
    return TimescaleResult(t_c=t_c, t_exact=t_exact, sigma0_sq=sigma0_sq, sigma_rho0_sq=sigma_rho0_sq,
                           R0=R0, target=target, deep_quench=deep_quench)

def freezing_ratio(p: CondensateParams, k: int, threshold: float = 0.01) -> FreezingResult:
    """Mass-to-gradient ratio r_k of mode k >= 1; the mode counts as frozen if r_k - 1 < threshold."""
    k = int(_check_mode(k))
    if k == 0:
        raise InputError('Freezing ratio is undefined for the zero mode')
    wavenumber = math.pi * k / p.L
    r_k = math.sqrt(1 + 4 * p.m_atom * p.J / (p.constants.hbar * wavenumber ** 2))
    return FreezingResult(k=k, r_k=r_k, frozen=r_k - 1 < threshold)

def lattice_map(p: CondensateParams, N: int) -> LatticeMap:
    """
    Compactness-preserving discretization on N sites of spacing a = L / N. The dimensionless
    rotor chain has omega^2 = a^2 hbar J n1d / g1d and kappa = hbar^2 n1d / (4 m g1d), so that its
    small-angle mode frequencies satisfy omega_k = a Omega_{i,k} for k << N.
    """
    if int(N) != N or N < 2:
        raise InputError(f'Number of lattice sites must be an integer >= 2, got {N}')
    a = p.L / N
    return LatticeMap(N=int(N), a=a, omega_sq=a ** 2 * p.mass_term, kappa=p.gradient_term,
                      time_unit=p.constants.hbar * a / (2 * p.g1d), energy_unit=p.g1d / a)

def continuum_mode_frequency(lattice: LatticeMap, omega_k):
    """Rescaled continuum frequency Omega_k of a lattice mode frequency omega_k."""
    return np.asarray(omega_k) / lattice.a

def wrap_phase(x):
    """Map phases to the principal interval [-pi, pi)."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi

def winding_number(x):
    """Number of full turns removed by wrap_phase."""
    x = np.asarray(x, dtype=float)
    return np.rint((x - wrap_phase(x)) / (2 * np.pi)).astype(int)

def wrapped_variance(samples) -> float:
    """Variance of the wrapped samples about their circular mean."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InputError('Wrapped variance needs at least one sample')
    mean = np.angle(np.mean(np.exp(1j * samples)))
    return float(np.mean(wrap_phase(samples - mean) ** 2))

def sample_wrapped_gaussian(sigma: float, n: int, seed: int) -> np.ndarray:
    """n wrapped samples of a centred Gaussian of width sigma from a PCG64 stream seeded with seed."""
    if sigma < 0:
        raise InputError(f'Width must be non-negative, got {sigma}')
    if int(n) != n or n < 1:
        raise InputError(f'Sample count must be a positive integer, got {n}')
    rng = np.random.default_rng(seed)
    return wrap_phase(rng.normal(0.0, sigma, int(n)))
