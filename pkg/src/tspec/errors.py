"""Exception types shared across the package."""


class TspecError(Exception):
    """Base class for all tspec failures."""


class DomainError(TspecError, ValueError):
    """Input outside the domain an operation is defined on."""


class HypothesisMismatchError(DomainError):
    """Potential scalars do not satisfy the hypotheses of the requested formula."""


class IntegrationFailureError(TspecError):
    """Adaptive ODE integration could not proceed.

    Attributes:
        x: position at which the step size underflowed.
    """

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class KernelConvergenceError(TspecError):
    """Fixed-point iteration for the kernel did not converge.

    Attributes:
        residual: sup-norm of the last successive-iterate difference.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class BoundaryTooCloseError(TspecError):
    """A zero sits too close to a contour boundary even after perturbation."""


class PhaseResolutionError(TspecError):
    """Boundary phase sampling could not be refined below the jump threshold."""


class IndexingConflictError(TspecError):
    """Two computed zeros competed for the same asymptotic index."""


class ProbeTooCloseError(TspecError):
    """A probe point sits too close to a listed eigenvalue."""


class UnstableLimitError(TspecError):
    """A limit extrapolation did not stabilize.

    Attributes:
        diagnostics: dict with the extrapolant ladder and gap.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(TspecError):
    """Run configuration failed schema validation."""


class TruncationWarning(UserWarning):
    """A series was truncated before its bound reached the requested tolerance."""
