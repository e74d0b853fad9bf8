"""Exception types raised by viscowave."""


class ViscowaveError(Exception):
    """Base class for all library errors."""


class DomainError(ViscowaveError, ValueError):
    """Argument lies on a branch cut or hits a pole."""


class BranchCutError(DomainError):
    """Matrix has an eigenvalue on the closed negative real axis."""


class AccuracyError(ViscowaveError, ArithmeticError):
    """A numerical procedure did not reach the requested accuracy."""


class ConditioningError(ViscowaveError, ArithmeticError):
    """A matrix is singular or too ill-conditioned to invert."""


class RangeError(ViscowaveError, OverflowError):
    """Result overflowed the floating point range."""


class SolverError(ViscowaveError, RuntimeError):
    """An iterative solver failed to converge."""

    def __init__(self, message, last_residual=None):
        super().__init__(message)
        self.last_residual = last_residual
