"""
Closed-form engine for two coupled harmonic oscillators after a global frequency quench.

The post-quench state stays Gaussian. Each normal mode x_{+-} = (x1 +- x2)/sqrt(2) evolves
with an Ermakov scaling function b(t), the reduced density matrix of one oscillator is a
Mehler kernel and its spectrum is the geometric sequence (1 - xi) xi^k.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
import logging
import warnings

import numpy as np

from zeromode.utils.misc import InputError
from zeromode.utils.misc import PrecisionWarning
from zeromode.utils.misc import UnsupportedSectorError
from zeromode.utils.numerics import PolynomialFit
from zeromode.utils.numerics import fit_polynomial

logger = logging.getLogger(__name__)

# Below this, 1 - xi is not resolved in double precision
SATURATION_LIMIT = 1e-15


class Mode(str, Enum):
    """Normal mode label: center of mass (+) or relative (-)."""
    PLUS = '+'
    MINUS = '-'


class Sector(str, Enum):
    """Dynamical sector of a post-quench mode."""
    STABLE = 'stable'
    METASTABLE = 'metastable'
    UNSTABLE = 'unstable'


@dataclass(frozen=True)
class ChoQuench:
    """
    Global frequency quench omega_i -> omega_f of two oscillators coupled by kappa (x1 - x2)^2 / 2.

    omega_f_sq may be given instead of omega_f to describe an inverted (negative) final
    curvature; such quenches can be classified but not simulated.
    """

    omega_i: float
    kappa: float
    omega_f: float = 0.0
    omega_f_sq: float | None = None

    def __post_init__(self):
        if not self.omega_i > 0:
            raise InputError(f'omega_i must be positive, got {self.omega_i}')
        if self.kappa < 0:
            raise InputError(f'kappa must be non-negative, got {self.kappa}')
        if self.omega_f < 0:
            raise InputError(f'omega_f must be non-negative, got {self.omega_f}')

    @property
    def final_sq(self) -> float:
        """Squared post-quench on-site frequency."""
        return self.omega_f ** 2 if self.omega_f_sq is None else self.omega_f_sq

    def initial_frequency(self, nu: Mode) -> float:
        if Mode(nu) is Mode.PLUS or self.kappa == 0:
            return self.omega_i
        return np.sqrt(self.omega_i ** 2 + 2 * self.kappa)

    def final_frequency_sq(self, nu: Mode) -> float:
        if Mode(nu) is Mode.PLUS:
            return self.final_sq
        return self.final_sq + 2 * self.kappa

    def final_frequency(self, nu: Mode) -> float:
        squared = self.final_frequency_sq(nu)
        if squared < 0:
            raise UnsupportedSectorError(f'Mode {Mode(nu).value} is in the unstable sector '
                                         f'(omega_f^2 = {squared:g} < 0)')
        if self.omega_f_sq is None and (Mode(nu) is Mode.PLUS or self.kappa == 0):
            return self.omega_f
        return np.sqrt(squared)


@dataclass(frozen=True)
class ModeCoefficients:
    """Scaling functions and Gaussian coefficients A_nu = omega_i/b^2, B_nu = bdot/b of both modes."""

    b_plus: np.ndarray
    bdot_plus: np.ndarray
    A_plus: np.ndarray
    B_plus: np.ndarray
    b_minus: np.ndarray
    bdot_minus: np.ndarray
    A_minus: np.ndarray
    B_minus: np.ndarray


@dataclass(frozen=True)
class KernelCoefficients:
    """
    Mehler kernel of the reduced density matrix in position space (A, B, Phi) together with
    the momentum-space per-mode coefficients and their composite combinations.

    a_minus_b / a_plus_b hold A - B and A + B in factored form, which stays accurate when
    A and B nearly cancel at late times. The momentum-space analogues are stored likewise.
    """

    A: np.ndarray
    B: np.ndarray
    Phi: np.ndarray
    A_tilde_plus: np.ndarray
    B_tilde_plus: np.ndarray
    A_tilde_minus: np.ndarray
    B_tilde_minus: np.ndarray
    A_tilde: np.ndarray
    B_tilde: np.ndarray
    a_minus_b: np.ndarray
    a_plus_b: np.ndarray
    a_minus_b_tilde: np.ndarray
    a_plus_b_tilde: np.ndarray


@dataclass(frozen=True)
class EntanglementPoint:
    """Entanglement data of the reduced state at one time."""

    t: float
    chi: float
    xi: float
    S: float
    l_Xs: float
    l_Xa: float
    l_Ps: float
    l_Pa: float
    xi_momentum: float
    precision_saturated: bool = False


@dataclass(frozen=True)
class EntanglementArrays:
    """Vectorised counterpart of a list of EntanglementPoint."""

    t: np.ndarray
    chi: np.ndarray
    xi: np.ndarray
    S: np.ndarray
    l_Xs: np.ndarray
    l_Xa: np.ndarray
    l_Ps: np.ndarray
    l_Pa: np.ndarray
    xi_momentum: np.ndarray
    precision_saturated: np.ndarray


def _check_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise InputError('Times must be non-negative')
    return t

def ermakov_solution(omega_i: float, omega_f: float, t) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form solution (b, bdot) of b'' + omega_f^2 b = omega_i^2 / b^3 with b(0)=1, b'(0)=0."""
    t = _check_times(t)
    if omega_f == 0:
        b = np.sqrt(1 + (omega_i * t) ** 2)
        bdot = omega_i ** 2 * t / b
    else:
        ratio_sq = (omega_i / omega_f) ** 2
        phase = omega_f * t
        b = np.sqrt(np.cos(phase) ** 2 + ratio_sq * np.sin(phase) ** 2)
        bdot = omega_f * (ratio_sq - 1) * np.sin(2 * phase) / (2 * b)
    return b, bdot

def scaling_function(q: ChoQuench, nu: Mode, t) -> tuple[np.ndarray, np.ndarray]:
    """Scaling function b_nu(t) and its derivative for one normal mode."""
    return ermakov_solution(q.initial_frequency(nu), q.final_frequency(nu), t)

def mode_coefficients(q: ChoQuench, t) -> ModeCoefficients:
    """Evaluate b, bdot, A_nu and B_nu of both modes at the given time(s)."""
    values = {}
    for nu, suffix in ((Mode.PLUS, 'plus'), (Mode.MINUS, 'minus')):
        b, bdot = scaling_function(q, nu, t)
        values[f'b_{suffix}'] = b
        values[f'bdot_{suffix}'] = bdot
        values[f'A_{suffix}'] = q.initial_frequency(nu) / b ** 2
        values[f'B_{suffix}'] = bdot / b
    return ModeCoefficients(**values)

def _combine(a_plus, b_plus, a_minus, b_minus):
    """Trace one oscillator out of the two-mode Gaussian: (A, B, A - B, A + B)."""
    s = a_plus + a_minus
    da = a_plus - a_minus
    db = b_plus - b_minus
    A = (2 * s ** 2 - (da ** 2 - db ** 2)) / (4 * s)
    B = (da ** 2 + db ** 2) / (4 * s)
    a_minus_b = 2 * a_plus * a_minus / s
    a_plus_b = (s ** 2 + db ** 2) / (2 * s)
    return A, B, a_minus_b, a_plus_b

def kernel_coefficients(modes: ModeCoefficients) -> KernelCoefficients:
    """Reduced-density-matrix kernel coefficients in position and momentum space."""
    a_plus = np.asarray(modes.A_plus, dtype=float)
    a_minus = np.asarray(modes.A_minus, dtype=float)
    b_plus = np.asarray(modes.B_plus, dtype=float)
    b_minus = np.asarray(modes.B_minus, dtype=float)
    if np.any(a_plus <= 0) or np.any(a_minus <= 0):
        raise InputError('Mode coefficients A_+ and A_- must be positive')

    A, B, a_minus_b, a_plus_b = _combine(a_plus, b_plus, a_minus, b_minus)
    s = a_plus + a_minus
    Phi = (b_plus + b_minus) / 4 - (a_plus - a_minus) * (b_plus - b_minus) / (4 * s)

    # Momentum-space wave function has the same Gaussian form with 1/(A - iB)
    norm_plus = a_plus ** 2 + b_plus ** 2
    norm_minus = a_minus ** 2 + b_minus ** 2
    at_plus, bt_plus = a_plus / norm_plus, -b_plus / norm_plus
    at_minus, bt_minus = a_minus / norm_minus, -b_minus / norm_minus
    A_tilde, B_tilde, a_minus_b_tilde, a_plus_b_tilde = _combine(at_plus, bt_plus, at_minus, bt_minus)

    return KernelCoefficients(A=A, B=B, Phi=Phi,
                              A_tilde_plus=at_plus, B_tilde_plus=bt_plus,
                              A_tilde_minus=at_minus, B_tilde_minus=bt_minus,
                              A_tilde=A_tilde, B_tilde=B_tilde,
                              a_minus_b=a_minus_b, a_plus_b=a_plus_b,
                              a_minus_b_tilde=a_minus_b_tilde, a_plus_b_tilde=a_plus_b_tilde)

def coherence_lengths(k: KernelCoefficients) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Symmetric and anti-symmetric coherence lengths (l_Xs, l_Xa, l_Ps, l_Pa)."""
    if np.any(k.a_minus_b <= 0) or np.any(k.a_minus_b_tilde <= 0):
        raise InputError('Kernel violates A > B (not normalizable)')
    l_Xs = k.a_minus_b ** -0.5
    l_Xa = k.a_plus_b ** -0.5
    l_Ps = k.a_minus_b_tilde ** -0.5
    l_Pa = k.a_plus_b_tilde ** -0.5
    return l_Xs, l_Xa, l_Ps, l_Pa

def mehler_entropy(xi, one_minus_xi=None) -> np.ndarray:
    """
    Entropy (nats) of the geometric spectrum (1 - xi) xi^k.

    one_minus_xi may be passed when it is known more accurately than 1 - xi.
    """
    xi = np.asarray(xi, dtype=float)
    if one_minus_xi is None:
        one_minus_xi = 1 - xi
    one_minus_xi = np.asarray(one_minus_xi, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        log_xi = np.log1p(-one_minus_xi)
        S = -np.log(one_minus_xi) - xi / one_minus_xi * log_xi
    return np.where(xi > 0, S, 0.0)

def schmidt_weights(xi: float, k_max: int) -> np.ndarray:
    """First k_max + 1 eigenvalues (1 - xi) xi^k of the reduced density matrix."""
    return (1 - xi) * xi ** np.arange(k_max + 1)

def entanglement_arrays(q: ChoQuench, ts) -> EntanglementArrays:
    """Entropy, Mehler parameters and coherence lengths on a time grid."""
    ts = _check_times(np.atleast_1d(ts))
    kernel = kernel_coefficients(mode_coefficients(q, ts))
    l_Xs, l_Xa, l_Ps, l_Pa = coherence_lengths(kernel)

    chi = kernel.B / kernel.A
    xi = (l_Xs - l_Xa) / (l_Xs + l_Xa)
    one_minus_xi = 2 * l_Xa / (l_Xs + l_Xa)
    xi_momentum = (l_Ps - l_Pa) / (l_Ps + l_Pa)

    saturated = one_minus_xi < SATURATION_LIMIT
    if np.any(saturated):
        one_minus_xi = np.maximum(one_minus_xi, SATURATION_LIMIT)
        message = f'1 - xi below {SATURATION_LIMIT:g} at {int(saturated.sum())} time(s); entropy capped'
        logger.warning(message)
        warnings.warn(message, PrecisionWarning)

    S = mehler_entropy(xi, one_minus_xi)
    return EntanglementArrays(t=ts, chi=chi, xi=xi, S=S, l_Xs=l_Xs, l_Xa=l_Xa, l_Ps=l_Ps,
                              l_Pa=l_Pa, xi_momentum=xi_momentum, precision_saturated=saturated)

def entanglement_entropy_series(q: ChoQuench, ts) -> list[EntanglementPoint]:
    """Entanglement entropy and coherence lengths at each requested time."""
    arrays = entanglement_arrays(q, ts)
    return [EntanglementPoint(t=float(arrays.t[i]), chi=float(arrays.chi[i]), xi=float(arrays.xi[i]),
                              S=float(arrays.S[i]), l_Xs=float(arrays.l_Xs[i]),
                              l_Xa=float(arrays.l_Xa[i]), l_Ps=float(arrays.l_Ps[i]),
                              l_Pa=float(arrays.l_Pa[i]), xi_momentum=float(arrays.xi_momentum[i]),
                              precision_saturated=bool(arrays.precision_saturated[i]))
            for i in range(arrays.t.size)]

def mode_variances(q: ChoQuench, t) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Position and momentum widths (sigma_x+, sigma_x-, sigma_p+, sigma_p-) of the normal modes."""
    modes = mode_coefficients(q, t)
    sigma_x_plus = 1 / np.sqrt(2 * modes.A_plus)
    sigma_x_minus = 1 / np.sqrt(2 * modes.A_minus)
    sigma_p_plus = np.sqrt((modes.A_plus ** 2 + modes.B_plus ** 2) / (2 * modes.A_plus))
    sigma_p_minus = np.sqrt((modes.A_minus ** 2 + modes.B_minus ** 2) / (2 * modes.A_minus))
    return sigma_x_plus, sigma_x_minus, sigma_p_plus, sigma_p_minus

def classify_sector(q: ChoQuench) -> dict[Mode, Sector]:
    """Dynamical sector of each post-quench normal mode."""
    sectors = {}
    for nu in Mode:
        squared = q.final_frequency_sq(nu)
        if squared > 0:
            sectors[nu] = Sector.STABLE
        elif squared == 0:
            sectors[nu] = Sector.METASTABLE
        else:
            sectors[nu] = Sector.UNSTABLE
    return sectors

def log_growth_fit(q: ChoQuench, t_lo: float = 1e2, t_hi: float = 1e4, n: int = 200) -> PolynomialFit:
    """Linear fit of S against ln t on a log-spaced window (slope 1 for a metastable zero mode)."""
    ts = np.geomspace(t_lo, t_hi, n)
    return fit_polynomial(np.log(ts), entanglement_arrays(q, ts).S, 1)
