"""
Stationary ensembles and entropy ceilings for the two-rotor quench.

Diagonal ensemble (DE), block-diagonal ensemble (BDE), the generalized Gibbs ensemble (GGE)
constrained by the zero-mode and relative energies with the parity constraint p = d (mod 2),
the analytic GGE estimate and the uniform-in-time Gibbs variational bound.
"""

from __future__ import annotations
from dataclasses import dataclass
import logging
import math

import numpy as np
import scipy.special

from zeromode.models.rotor2 import RotorParams
from zeromode.models.rotor2 import WaveFunction
from zeromode.models.rotor2 import build_hamiltonian
from zeromode.models.rotor2 import choose_cutoff
from zeromode.models.rotor2 import entanglement_entropy
from zeromode.models.rotor2 import evolve_many
from zeromode.models.rotor2 import entropy_of
from zeromode.models.rotor2 import expectation_cos
from zeromode.models.rotor2 import ground_state
from zeromode.models.rotor2 import partial_trace
from zeromode.models.rotor2 import post_quench_decomposition
from zeromode.models.rotor2 import post_quench_spectra
from zeromode.utils.misc import DimensionError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import UnreachableEnergyError
from zeromode.utils.numerics import RootBracket
from zeromode.utils.numerics import SpectralDecomposition
from zeromode.utils.numerics import find_root_1d
from zeromode.utils.numerics import find_root_2d
from zeromode.utils.numerics import von_neumann_entropy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GgeSolution:
    """
    Lagrange multipliers of the GGE and the energies they reproduce. An infinite multiplier
    means the sector is frozen in its lowest level.
    """

    lambda_plus: float
    lambda_minus: float
    E_plus: float
    E_minus: float
    residuals: tuple[float, float]
    # Zero-mode momentum window used for the solve
    p_max: int


@dataclass(frozen=True)
class BoundResult:
    """Uniform-in-time bound beta* E_tot + ln Z_1(beta*) with its Gibbs parameter."""

    beta_star: float
    bound: float
    E_tot: float


@dataclass(frozen=True)
class EnsembleComparison:
    """Ensemble entropies and bounds at one (omega^2, kappa) point."""

    omega_sq: float
    kappa: float
    M: int
    S_max: float
    t_at_max: float
    S_de: float
    S_bde: float
    S_gge: float
    S_estimate: float
    bound: float
    E_plus: float
    E_minus: float


def _check_state(spec: SpectralDecomposition, psi0: WaveFunction) -> np.ndarray:
    if spec.dim != psi0.flat.size:
        raise DimensionError(f'Spectral decomposition of dimension {spec.dim} does not match '
                             f'state of dimension {psi0.flat.size}')
    return spec.eigenvectors.T @ psi0.flat

def diagonal_ensemble(spec: SpectralDecomposition, psi0: WaveFunction) -> np.ndarray:
    """rho_DE = sum_n |<n|psi0>|^2 |n><n| in the full product basis."""
    weights = np.abs(_check_state(spec, psi0)) ** 2
    return (spec.eigenvectors * weights) @ spec.eigenvectors.T

def degenerate_blocks(energies: np.ndarray, deg_tol: float = 1e-9) -> list[np.ndarray]:
    """Group indices of ascending energies whose neighbours differ by at most deg_tol * scale."""
    scale = max(1.0, float(np.max(np.abs(energies), initial=0.0)))
    breaks = np.nonzero(np.diff(energies) > deg_tol * scale)[0] + 1
    return np.split(np.arange(energies.size), breaks)

def block_diagonal_ensemble(spec: SpectralDecomposition, psi0: WaveFunction, deg_tol: float = 1e-9) -> np.ndarray:
    """Diagonal ensemble that keeps the coherences inside each degenerate eigenspace."""
    overlaps = _check_state(spec, psi0)
    # One column per eigenspace: the projection of psi0 onto it
    projections = np.column_stack([spec.eigenvectors[:, block] @ overlaps[block]
                                   for block in degenerate_blocks(spec.eigenvalues, deg_tol)])
    return projections @ projections.conj().T

def reduced_entropy(rho_full: np.ndarray, M: int) -> float:
    """Entanglement entropy of site 1 for a full two-rotor density matrix."""
    return entanglement_entropy(partial_trace(rho_full, M))

def conserved_energies(psi0: WaveFunction, kappa: float) -> tuple[float, float]:
    """E_+ = <(p1 + p2)^2 / 4> and E_- = <(p1 - p2)^2 / 4 + kappa (1 - cos(x1 - x2))>."""
    M = psi0.M
    momenta = np.arange(-M, M + 1)
    prob = np.abs(psi0.amplitudes) ** 2
    total = momenta[:, None] + momenta[None, :]
    relative = momenta[:, None] - momenta[None, :]
    E_plus = float(np.sum(prob * total ** 2) / 4)
    E_minus = float(np.sum(prob * relative ** 2) / 4 + kappa * (1 - expectation_cos(psi0, 'diff')))
    return E_plus, E_minus

def _log_boltzmann(lam: float, energies: np.ndarray) -> np.ndarray:
    """-lam * E with the lam = inf limit keeping only zero-energy levels."""
    if math.isinf(lam):
        return np.where(energies <= 0, 0.0, -np.inf)
    return -lam * energies


class _GgeModel:
    """
    Parity-constrained two-sector partition function Z = sum_s Z_+^s Z_-^s, evaluated in the
    log domain. Relative energies are shifted by their global minimum.
    """

    def __init__(self, kappa: float, M: int, p_max: int):
        spectra = post_quench_spectra(kappa, M)
        self.spectra = spectra
        self.offset = float(spectra.relative_levels[0])
        self.p_max = p_max
        momenta = np.arange(-p_max, p_max + 1)
        self.zero_momenta = {s: momenta[momenta % 2 == s] for s in (0, 1)}
        self.zero_energies = {s: self.zero_momenta[s] ** 2 / 4 for s in (0, 1)}
        self.rel_energies = {s: spectra.relative[s].energies - self.offset for s in (0, 1)}

    def sector_logs(self, lambda_plus: float, lambda_minus: float) -> dict:
        """Log weights of every level and the log partition function of each parity sector."""
        logs = {}
        for s in (0, 1):
            log_plus = _log_boltzmann(lambda_plus, self.zero_energies[s])
            log_minus = _log_boltzmann(lambda_minus, self.rel_energies[s])
            logs[s] = (log_plus, log_minus,
                       scipy.special.logsumexp(log_plus) + scipy.special.logsumexp(log_minus))
        return logs

    def energies(self, lambda_plus: float, lambda_minus: float) -> tuple[float, float]:
        """Tr(rho H_+) and Tr(rho H_-) of the GGE with the given multipliers."""
        logs = self.sector_logs(lambda_plus, lambda_minus)
        log_Z = scipy.special.logsumexp([logs[s][2] for s in (0, 1)])
        if math.isinf(log_Z):
            raise UnreachableEnergyError('Frozen zero-mode and relative sectors violate the parity constraint')
        E_plus = E_minus = 0.0
        for s in (0, 1):
            log_plus, log_minus, log_Zs = logs[s]
            sector_weight = math.exp(log_Zs - log_Z)
            if sector_weight == 0:
                continue
            w_plus = np.exp(log_plus - scipy.special.logsumexp(log_plus))
            w_minus = np.exp(log_minus - scipy.special.logsumexp(log_minus))
            E_plus += sector_weight * float(w_plus @ self.zero_energies[s])
            E_minus += sector_weight * float(w_minus @ self.rel_energies[s])
        return E_plus, E_minus + self.offset


def _zero_mode_window(E_plus: float, M: int) -> int:
    """Zero-mode momenta kept in the GGE sums; the Boltzmann tail beyond is below e^-40."""
    return max(2 * M, math.ceil(2 * math.sqrt(320 * max(E_plus, 0.25))) + 2)

def gge_solve(kappa: float, M: int, E_plus: float, E_minus: float, tol: float = 1e-10) -> GgeSolution:
    """Match the GGE multipliers (lambda_+, lambda_-) to the conserved sector energies."""
    if E_plus < 0:
        raise UnreachableEnergyError(f'Zero-mode energy must be non-negative, got {E_plus}')
    p_max = _zero_mode_window(E_plus, M)
    model = _GgeModel(kappa, M, p_max)
    excess = E_minus - model.offset
    scale = max(1.0, abs(E_plus), abs(E_minus))
    if excess < -tol * scale:
        raise UnreachableEnergyError(f'Relative energy {E_minus} below the relative ground level {model.offset}')

    frozen_plus = E_plus <= tol * scale
    frozen_minus = excess <= tol * scale

    def residual(u: np.ndarray) -> np.ndarray:
        lam_plus = math.inf if frozen_plus else math.exp(u[0])
        lam_minus = math.inf if frozen_minus else math.exp(u[1])
        model_plus, model_minus = model.energies(lam_plus, lam_minus)
        return np.array([model_plus - E_plus, model_minus - E_minus])

    # Continuum guess for the zero mode, oscillator guess for the relative mode
    u_plus = math.log(1 / (2 * max(E_plus, 1e-12)))
    omega_rel = math.sqrt(max(2 * kappa, 1e-12))
    u_minus = math.log(math.log1p(omega_rel / max(excess, 1e-300)) / omega_rel)

    if frozen_plus and frozen_minus:
        u = (u_plus, u_minus)
    elif frozen_plus or frozen_minus:
        index = 1 if frozen_plus else 0
        start = u_minus if frozen_plus else u_plus

        def component(value: float) -> float:
            point = np.array([value, value])
            return residual(point)[index]

        value = _solve_monotone(component, start)
        u = (value, value)
    else:
        u = find_root_2d(residual, (u_plus, u_minus), tol=tol)

    lambda_plus = math.inf if frozen_plus else math.exp(u[0])
    lambda_minus = math.inf if frozen_minus else math.exp(u[1])
    final = residual(np.array(u))
    logger.debug('GGE solved: lambda_+=%.12g lambda_-=%.12g residuals=%s', lambda_plus, lambda_minus, final)
    return GgeSolution(lambda_plus=lambda_plus, lambda_minus=lambda_minus, E_plus=E_plus, E_minus=E_minus,
                       residuals=(float(final[0]), float(final[1])), p_max=p_max)

def _solve_monotone(g, start: float) -> float:
    """Root of a monotone function of a log-multiplier, bracketed by expansion around start."""
    width = 1.0
    for _ in range(60):
        lo, hi = start - width, start + width
        if g(lo) * g(hi) <= 0:
            return find_root_1d(g, RootBracket(lo, hi), tol=1e-14)
        width *= 2
    raise UnreachableEnergyError('Energy cannot be matched by a positive multiplier')

def gge_reduced_entropy(g: GgeSolution, kappa: float, M: int) -> float:
    """
    Entropy of the reduced GGE. The GGE is diagonal in (p, n) and its single-site reduction is
    diagonal in p1 = (p + d)/2:  rho_1(p1) = sum_{p,n} w_{p,n} |phi_n(2 p1 - p)|^2.
    """
    model = _GgeModel(kappa, M, g.p_max)
    logs = model.sector_logs(g.lambda_plus, g.lambda_minus)
    log_Z = scipy.special.logsumexp([logs[s][2] for s in (0, 1)])

    span = (g.p_max + 2 * M) // 2 + 1
    rho = np.zeros(2 * span + 1)
    for s in (0, 1):
        log_plus, log_minus, log_Zs = logs[s]
        sector_weight = math.exp(log_Zs - log_Z)
        if sector_weight == 0:
            continue
        w_plus = np.exp(log_plus - scipy.special.logsumexp(log_plus))
        w_minus = np.exp(log_minus - scipy.special.logsumexp(log_minus))
        relative = model.spectra.relative[s]
        # Relative-momentum distribution of the sector, summed over levels
        d_weights = (relative.vectors ** 2) @ w_minus
        for p, weight in zip(model.zero_momenta[s], w_plus):
            if weight == 0:
                continue
            p1 = (p + relative.d) // 2
            np.add.at(rho, p1 + span, sector_weight * weight * d_weights)

    return von_neumann_entropy(rho / rho.sum())

def frozen_relative_gge_entropy(omega: float, kappa: float, E_plus: float | None = None,
                                p_max: int | None = None) -> float:
    """
    Fast path with the relative mode frozen in its harmonic ground state: zero-mode momenta
    restricted to even p with Boltzmann weights matched to E_+ (default omega/4), relative
    momenta d even with Gaussian weights exp(-d^2 / (2 omega_-)).
    """
    if omega <= 0:
        raise InputError(f'omega must be positive, got {omega}')
    if E_plus is None:
        E_plus = omega / 4
    omega_minus = math.sqrt(omega ** 2 + 2 * kappa)
    if p_max is None:
        p_max = 2 * (math.ceil(math.sqrt(320 * max(E_plus, omega_minus))) + 2)

    p = np.arange(-p_max, p_max + 1, 2)
    level = p ** 2 / 4

    def energy_gap(u: float) -> float:
        log_w = -math.exp(u) * level
        w = np.exp(log_w - scipy.special.logsumexp(log_w))
        return float(w @ level) - E_plus

    u = _solve_monotone(energy_gap, math.log(1 / (2 * E_plus)))
    log_w = -math.exp(u) * level
    w_plus = np.exp(log_w - scipy.special.logsumexp(log_w))

    d = p.copy()
    w_minus = np.exp(-d ** 2 / (2 * omega_minus))
    w_minus /= w_minus.sum()

    # p1 = (p + d)/2 for even p and d
    rho = np.convolve(w_plus, w_minus)
    return von_neumann_entropy(rho / rho.sum())

def analytic_gge_estimate(omega: float, kappa: float) -> float:
    """Closed-form GGE ceiling 1/2 ln[(pi e / 2)(omega + sqrt(omega^2 + 2 kappa))]."""
    if omega <= 0:
        raise InputError(f'omega must be positive, got {omega}')
    if kappa < 0:
        raise InputError(f'kappa must be non-negative, got {kappa}')
    return 0.5 * math.log(math.pi * math.e / 2 * (omega + math.sqrt(omega ** 2 + 2 * kappa)))

def analytic_gge_estimate_from_energy(E_plus: float, omega_minus: float) -> float:
    """Gaussian estimate 1/2 ln[2 pi e (E_+ + omega_- / 4)] before substituting E_+ = omega/4."""
    return 0.5 * math.log(2 * math.pi * math.e * (E_plus + omega_minus / 4))

def _theta_cutoff(beta: float) -> int:
    return math.ceil(math.sqrt(80 / beta)) + 2

def _free_rotor(beta: float) -> tuple[float, float]:
    """ln Z_1 and E_1 of h_1 = p^2 / 2 at inverse temperature beta."""
    p = np.arange(-_theta_cutoff(beta), _theta_cutoff(beta) + 1)
    energies = p ** 2 / 2
    log_w = -beta * energies
    log_Z = float(scipy.special.logsumexp(log_w))
    return log_Z, float(np.exp(log_w - log_Z) @ energies)

def uniform_bound(E_tot: float) -> BoundResult:
    """
    Gibbs variational bound S(rho_1(t)) <= beta* E_tot + ln Z_1(beta*) for h_1 = p^2 / 2,
    with beta* fixed by E_1(beta*) = E_tot.
    """
    if E_tot < 0:
        raise InputError(f'Total energy must be non-negative, got {E_tot}')
    if E_tot == 0:
        return BoundResult(beta_star=math.inf, bound=0.0, E_tot=0.0)

    def energy_gap(u: float) -> float:
        return _free_rotor(math.exp(u))[1] - E_tot

    guess = 1 / (2 * E_tot) if E_tot > 0.25 else -2 * math.log(E_tot)
    u = _solve_monotone(energy_gap, math.log(guess))
    beta = math.exp(u)
    log_Z, _ = _free_rotor(beta)
    return BoundResult(beta_star=beta, bound=beta * E_tot + log_Z, E_tot=E_tot)

def ensemble_comparison(omega_sq: float, kappa: float, ts, M: int | None = None,
                        deg_tol: float = 1e-9, boundary_tol: float = 1e-10) -> EnsembleComparison:
    """Exact S_max on a time grid against the DE, BDE and GGE entropies and the bounds."""
    if M is None:
        M = choose_cutoff(omega_sq, kappa, boundary_tol)
    params = RotorParams(omega_sq, kappa, M)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))

    _, psi0 = ground_state(build_hamiltonian(params), M, boundary_tol)
    spec = post_quench_decomposition(params)
    series = np.array([entropy_of(psi) for psi in evolve_many(spec, psi0, ts)])
    index = int(np.argmax(series))

    E_plus, E_minus = conserved_energies(psi0, kappa)
    gge = gge_solve(kappa, M, E_plus, E_minus)
    omega = math.sqrt(omega_sq)
    S_estimate = analytic_gge_estimate(omega, kappa) if omega > 0 else math.nan

    result = EnsembleComparison(omega_sq=omega_sq, kappa=kappa, M=M,
                                S_max=float(series[index]), t_at_max=float(ts[index]),
                                S_de=reduced_entropy(diagonal_ensemble(spec, psi0), M),
                                S_bde=reduced_entropy(block_diagonal_ensemble(spec, psi0, deg_tol), M),
                                S_gge=gge_reduced_entropy(gge, kappa, M), S_estimate=S_estimate,
                                bound=uniform_bound(E_plus + E_minus).bound,
                                E_plus=E_plus, E_minus=E_minus)
    logger.info('omega^2=%g kappa=%g: S_max=%.4f DE=%.4f BDE=%.4f GGE=%.4f bound=%.4f', omega_sq, kappa,
                result.S_max, result.S_de, result.S_bde, result.S_gge, result.bound)
    return result
