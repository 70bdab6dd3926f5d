"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition or invariant."""


class SolverError(RuntimeError):
    """Raised when an iterative solver fails to meet its contract.

    Carries the best candidate produced so far (if any) so callers can
    report partial results instead of discarding the computation.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
