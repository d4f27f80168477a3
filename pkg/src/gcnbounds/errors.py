"""Exception types shared across the package."""


class GcnBoundsError(Exception):
    """Base class for all package errors."""


class DimensionError(GcnBoundsError, ValueError):
    """Operands have incompatible or invalid shapes."""


class NonFiniteError(GcnBoundsError, ValueError):
    """An array that must be finite contains NaN or infinity."""


class PowerIterationError(GcnBoundsError, RuntimeError):
    """Power iteration failed to converge within the iteration budget.

    Carries the last singular-value estimate, the last residual
    |sigma_t - sigma_{t-1}| and the number of iterations performed.
    """

    def __init__(self, message, sigma, residual, iterations):
        super().__init__(message)
        self.sigma = sigma
        self.residual = residual
        self.iterations = iterations


class FilterError(GcnBoundsError, ValueError):
    """A graph filter cannot be constructed (e.g. isolated node under a
    degree-normalized kind)."""


class DataFormatError(GcnBoundsError, ValueError):
    """A dataset file failed to parse; message names the file and line."""


class DomainError(GcnBoundsError, ValueError):
    """A value lies outside its contracted domain (labels, delta, ...)."""


class TrainingError(GcnBoundsError, RuntimeError):
    """Training failed; message carries iteration context."""


class UsageError(GcnBoundsError, ValueError):
    """Invalid CLI or config usage."""
