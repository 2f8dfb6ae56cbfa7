"""
Miscellaneous utility functions and classes: formatting helpers, the exception hierarchy
and the warning categories used throughout the package.
"""

import datetime
import math


def format_date(date: datetime.datetime) -> str:
    """Return a formatted date string."""
    return f'{date :%d %b %Y, %H:%M}'

def format_float(value: float) -> str:
    """Return the value with 17 significant digits (exact round trip for doubles)."""
    value = float(value)
    if math.isnan(value):
        return 'nan'
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.17g}'

def format_duration(seconds: float) -> str:
    """Return a short human-readable duration."""
    if seconds < 60:
        return f'{seconds:.2f} s'
    minutes, seconds = divmod(seconds, 60)
    return f'{int(minutes)} min {seconds:.0f} s'


class ZeroModeError(Exception):
    """
    Base class of all errors raised by the package.
    """

    pass


class InputError(ZeroModeError, ValueError):
    """
    Exception used if an argument violates the precondition of an operation.
    """

    pass


class ConfigError(InputError):
    """
    Exception used for invalid run configurations. Carries the config file path and line
    number (if known) so the command line can point at the offending entry.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.message = message
        self.path = path
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        if self.path and self.line:
            return f'{self.path}:{self.line}: {self.message}'
        elif self.path:
            return f'{self.path}: {self.message}'
        return self.message


class NotSymmetricError(InputError):
    """Matrix handed to a symmetric eigensolver is not symmetric."""

    pass


class InvalidBracketError(InputError):
    """Root bracket without sign change."""

    pass


class UnsupportedSectorError(InputError):
    """
    Exception used if a quench places a mode in the unstable (inverted oscillator) sector,
    which the library does not simulate.
    """

    pass


class GridTooCoarseError(InputError):
    """Position grid too coarse for the truncated Fourier series."""

    pass


class DimensionError(InputError):
    """Dimension mismatch or Hilbert space over budget."""

    pass


class IncorrectFileFormatError(ZeroModeError):
    """
    Exception used if the file format is detected to be of an incorrect format.
    """

    pass


class NumericalError(ZeroModeError, ArithmeticError):
    """
    Base class of numerical failures (non-convergence, unphysical states, ...).
    """

    pass


class ConvergenceError(NumericalError):
    pass


class StepUnderflowError(NumericalError):
    pass


class DegenerateFitError(NumericalError):
    pass


class UnphysicalStateError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class UnreachableEnergyError(NumericalError):
    pass


class TruncationWarning(UserWarning):
    """Boundary weight of a truncated momentum basis above tolerance."""

    pass


class DeepQuenchWarning(UserWarning):
    """Initial zero-mode variance not small against the uniform-circle variance."""

    pass


class PrecisionWarning(UserWarning):
    """Floating point saturation (e.g. 1 - xi below machine resolution)."""

    pass
