"""
Shared numerical kernels: symmetric eigendecomposition, Lanczos ground states, Krylov time
propagation, root finding, polynomial fits and entropy helpers.

All functions are pure and may be called concurrently from sweep workers.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Callable
import logging

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg
import scipy.special

from zeromode.utils.misc import ConvergenceError
from zeromode.utils.misc import DegenerateFitError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import InvalidBracketError
from zeromode.utils.misc import NotSymmetricError
from zeromode.utils.misc import StepUnderflowError
from zeromode.utils.misc import UnphysicalStateError

logger = logging.getLogger(__name__)

MatVec = Callable[[np.ndarray], np.ndarray]

# Operators up to this size are assembled densely instead of calling ARPACK
DENSE_GROUND_LIMIT = 16


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Complete set of eigenpairs of a real symmetric operator. Eigenvalues are ascending and
    eigenvectors are stored as orthonormal columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        """Return V diag(E) V^T."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


@dataclass(frozen=True)
class RootBracket:
    """Interval [lo, hi] known to contain a sign change."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidBracketError(f'Bracket needs lo < hi, got [{self.lo}, {self.hi}]')


@dataclass(frozen=True)
class PolynomialFit:
    """Least-squares polynomial, coefficients highest power first (numpy.polyfit order)."""

    coefficients: np.ndarray
    r_squared: float

    def __call__(self, ts) -> np.ndarray:
        return np.polyval(self.coefficients, ts)


def eig_sym(matrix, sym_tol: float = 1e-12) -> SpectralDecomposition:
    """Full eigendecomposition of a real symmetric matrix."""
    if scipy.sparse.issparse(matrix):
        matrix = matrix.toarray()
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f'Expected a square matrix, got shape {a.shape}')

    scale = max(np.linalg.norm(a), 1.0)
    asymmetry = np.linalg.norm(a - a.T)
    if asymmetry > sym_tol * scale:
        raise NotSymmetricError(f'Matrix not symmetric: |H - H^T| = {asymmetry:.3e}')

    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(0.5 * (a + a.T))
    except np.linalg.LinAlgError as err:
        raise ConvergenceError(f'Symmetric eigensolver did not converge: {err}') from err

    return SpectralDecomposition(eigenvalues, eigenvectors)

def lanczos_ground(apply_H: MatVec, dim: int, tol: float = 1e-12, maxiter: int | None = None,
                   seed: int = 0) -> tuple[float, np.ndarray]:
    """Return the lowest eigenpair of the symmetric operator given by its action."""
    if dim < 1:
        raise InputError(f'Operator dimension must be positive, got {dim}')

    if dim <= DENSE_GROUND_LIMIT:
        # Assemble column by column and solve exactly
        dense = np.column_stack([apply_H(column) for column in np.eye(dim)])
        spec = eig_sym(dense, sym_tol=1e-10)
        return float(spec.eigenvalues[0]), spec.eigenvectors[:, 0].copy()

    operator = scipy.sparse.linalg.LinearOperator((dim, dim), matvec=apply_H, dtype=float)
    # Fixed start vector keeps repeated runs bit-identical
    v0 = np.random.default_rng(seed).standard_normal(dim)
    try:
        values, vectors = scipy.sparse.linalg.eigsh(operator, k=1, which='SA', v0=v0, tol=tol,
                                                    maxiter=maxiter)
    except scipy.sparse.linalg.ArpackNoConvergence as err:
        raise ConvergenceError(f'Lanczos ground-state search did not converge: {err}') from err
    except scipy.sparse.linalg.ArpackError as err:
        raise ConvergenceError(f'Lanczos breakdown: {err}') from err

    state = vectors[:, 0] / np.linalg.norm(vectors[:, 0])
    energy = float(np.dot(state, apply_H(state)))
    logger.debug('Lanczos ground state: dim=%d E0=%.15g', dim, energy)
    return energy, state

def _krylov_basis(apply_H: MatVec, psi: np.ndarray, krylov_dim: int,
                  breakdown_tol: float = 1e-13) -> tuple[np.ndarray, np.ndarray, np.ndarray, bool]:
    """Lanczos recursion with full reorthogonalization, starting from the normalized psi."""
    m_max = min(krylov_dim, psi.size)
    basis = np.zeros((m_max, psi.size), dtype=complex)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    basis[0] = psi / np.linalg.norm(psi)

    for j in range(m_max):
        w = np.asarray(apply_H(basis[j]), dtype=complex)
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j] * basis[j]
        if j > 0:
            w = w - beta[j - 1] * basis[j - 1]
        w = w - basis[:j + 1].T @ (basis[:j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)

        # Invariant subspace reached: the projection is exact
        if beta[j] < breakdown_tol * max(1.0, abs(alpha[j])):
            return basis[:j + 1], alpha[:j + 1], beta[:j + 1], True
        if j + 1 < m_max:
            basis[j + 1] = w / beta[j]

    return basis, alpha, beta, m_max == psi.size

def krylov_propagate(apply_H: MatVec, state: np.ndarray, dt: float, tol: float = 1e-10,
                     krylov_dim: int = 30, min_step_ratio: float = 1e-12) -> np.ndarray:
    """
    Return exp(-i H dt) state using short Lanczos recursions.

    The step is halved until the a-posteriori error estimate beta_m |[exp(-i T tau)]_{m,1}|
    falls below tol scaled by the fraction of dt covered, so the whole propagation stays within
    tol. After an accepted substep the step is allowed to grow again.
    """
    psi = np.array(state, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        raise InputError(f'Krylov propagation expects a unit-norm state, got norm {norm:.12g}')
    if dt == 0:
        return psi

    direction = np.sign(dt)
    remaining = abs(dt)
    step = remaining
    min_step = abs(dt) * min_step_ratio
    substeps = 0

    while remaining > 0:
        basis, alpha, beta, exact = _krylov_basis(apply_H, psi, krylov_dim)
        if alpha.size == 1:
            evals, evecs = alpha.copy(), np.ones((1, 1))
        else:
            evals, evecs = scipy.linalg.eigh_tridiagonal(alpha, beta[:-1])

        while True:
            step = min(step, remaining)
            coeffs = evecs @ (np.exp(-1j * direction * step * evals) * evecs[0])
            error = 0.0 if exact else beta[-1] * abs(coeffs[-1])
            if error <= tol * step / abs(dt):
                break
            step /= 2
            if step < min_step:
                raise StepUnderflowError(f'Krylov step underflow: tolerance {tol:g} unreachable '
                                         f'with krylov_dim={krylov_dim}')

        psi = basis.T @ coeffs
        remaining -= step
        substeps += 1
        step *= 2

    logger.debug('Krylov propagation over dt=%g used %d substeps', dt, substeps)
    return psi

def _expand_bracket(g: Callable[[float], float], x0: float, width: float = 1.0,
                    max_doublings: int = 60) -> RootBracket:
    """Grow a symmetric interval around x0 until g changes sign."""
    lo, hi = x0 - width, x0 + width
    for _ in range(max_doublings):
        if g(lo) * g(hi) <= 0:
            return RootBracket(lo, hi)
        width *= 2
        lo, hi = x0 - width, x0 + width
    raise ConvergenceError(f'No sign change found around {x0:g}')

def find_root_1d(f: Callable[[float], float], bracket: RootBracket, tol: float = 1e-12,
                 maxiter: int = 500) -> float:
    """Root of a monotone function inside a bracket (Brent's method, bisection safeguarded)."""
    f_lo, f_hi = f(bracket.lo), f(bracket.hi)
    if f_lo == 0:
        return bracket.lo
    if f_hi == 0:
        return bracket.hi
    if f_lo * f_hi > 0:
        raise InvalidBracketError(f'No sign change on [{bracket.lo:g}, {bracket.hi:g}]: '
                                  f'f = ({f_lo:g}, {f_hi:g})')
    try:
        root = scipy.optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, maxiter=maxiter)
    except RuntimeError as err:
        raise ConvergenceError(f'Root search did not converge: {err}') from err
    return float(root)

def find_root_2d(F: Callable[[np.ndarray], np.ndarray], guess, tol: float = 1e-10,
                 maxiter: int = 200) -> tuple[float, float]:
    """
    Solve F(x, y) = 0.

    The first attempt is Powell's hybrid method (a damped Newton iteration with a
    finite-difference Jacobian). If the residual is still above tol, alternating 1D solves
    (Gauss-Seidel sweeps with Brent's method) take over from the best point found.
    """
    def residual(point) -> np.ndarray:
        return np.asarray(F(np.asarray(point, dtype=float)), dtype=float)

    x = np.asarray(guess, dtype=float)
    result = scipy.optimize.root(residual, x, method='hybr', tol=tol * 1e-2,
                                 options={'maxfev': 100 * maxiter})
    if np.all(np.isfinite(result.x)) and np.linalg.norm(residual(result.x)) <= tol:
        return float(result.x[0]), float(result.x[1])

    logger.debug('Hybrid 2D solver stalled (%s), switching to alternating 1D solves', result.message)
    if np.all(np.isfinite(result.x)) and (np.linalg.norm(residual(result.x)) < np.linalg.norm(residual(x))):
        x = result.x.copy()

    for sweep in range(maxiter):
        for i in (0, 1):
            def component(value: float, i=i) -> float:
                trial = x.copy()
                trial[i] = value
                return residual(trial)[i]
            bracket = _expand_bracket(component, x[i], width=max(1e-3, 1e-2 * abs(x[i])))
            x[i] = find_root_1d(component, bracket, tol=tol * 1e-2)
        norm = np.linalg.norm(residual(x))
        if norm <= tol:
            logger.debug('Alternating 1D solves converged after %d sweeps', sweep + 1)
            return float(x[0]), float(x[1])

    raise ConvergenceError(f'2D root search diverged: residual {norm:.3e} after {maxiter} sweeps')

def fit_polynomial(ts, ys, degree: int) -> PolynomialFit:
    """Least-squares polynomial fit of degree 1 or 2 with its coefficient of determination."""
    if degree not in (1, 2):
        raise InputError(f'Polynomial degree must be 1 or 2, got {degree}')
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ts.shape != ys.shape or ts.ndim != 1:
        raise InputError('ts and ys must be 1D arrays of equal length')
    if ts.size < degree + 2:
        raise InputError(f'Need at least {degree + 2} samples for a degree-{degree} fit')

    design = np.vander(ts, degree + 1)
    if np.linalg.matrix_rank(design) < degree + 1:
        raise DegenerateFitError('Degenerate design matrix (too few distinct sample points)')
    coefficients, *_ = np.linalg.lstsq(design, ys, rcond=None)

    ss_res = float(np.sum((ys - design @ coefficients) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0:
        r_squared = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r_squared = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)

    return PolynomialFit(coefficients, r_squared)

def von_neumann_entropy(probabilities, negative_tol: float = 1e-10) -> float:
    """Shannon entropy (nats) of an eigenvalue/probability vector, 0 log 0 := 0."""
    p = np.asarray(probabilities, dtype=float)
    if p.size and p.min() < -negative_tol:
        raise UnphysicalStateError(f'Negative eigenvalue {p.min():.3e} in density matrix')
    return float(np.sum(scipy.special.entr(np.clip(p, 0.0, None))))

def schmidt_entropy(amplitudes: np.ndarray) -> float:
    """Entanglement entropy of a pure bipartite state given as its amplitude matrix."""
    singular_values = scipy.linalg.svd(amplitudes, compute_uv=False)
    return von_neumann_entropy(singular_values ** 2)
