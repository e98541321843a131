"""Exception types raised by squeezelab."""


class SqueezeLabError(Exception):
    """Base class for all library errors."""


class DomainError(SqueezeLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class PropagationError(SqueezeLabError, RuntimeError):
    """A propagator failed to produce a state to the requested accuracy."""


class EigensolverError(PropagationError):
    """The eigensolver did not converge.

    Carries the generator dimension and a rough conditioning figure
    (ratio of largest coupling to smallest) so failures can be triaged.
    """

    def __init__(self, message, dim=None, condition=None):
        super().__init__(message)
        self.dim = dim
        self.condition = condition


class KrylovConvergenceError(PropagationError):
    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step


class StepSizeError(PropagationError):
    """Adaptive integrator step size underflowed."""


class FitError(SqueezeLabError, ValueError):
    """Data are degenerate for a least-squares fit."""
