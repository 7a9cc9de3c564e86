"""Exception types shared across the package."""


class VegtoxError(Exception):
    """Base class for all package errors."""


class ParameterError(VegtoxError, ValueError):
    """A model parameter violates its constraints."""


class DomainError(VegtoxError, ValueError):
    """A function argument lies outside the function's domain."""


class ConfigError(VegtoxError, ValueError):
    """Bad experiment configuration; carries an optional source line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(VegtoxError, RuntimeError):
    """A numerical routine reached a state the theory excludes."""


class BlowUpError(NumericalError):
    """A time integration produced non-finite values.

    Carries the failure time, the flat cell index and the partial trajectory
    recorded up to the failure.
    """

    def __init__(self, t, cell, trajectory=None):
        self.t = t
        self.cell = cell
        self.trajectory = trajectory
        super().__init__(f"non-finite field value at t={t:.6g} in cell {cell}")


class NewtonError(NumericalError):
    """Newton iteration failed to converge."""

    def __init__(self, message, residual_norm=None, last_iterate=None):
        self.residual_norm = residual_norm
        self.last_iterate = last_iterate
        super().__init__(message)


class ContinuationError(NumericalError):
    """A continuation step or branch switch could not be completed."""


class ModelWarning(UserWarning):
    """Non-fatal notice about an unusual but admissible parameter choice."""
