"""Shared exception types."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Caller violated an interface contract (grids, derivative orders, ...)."""


class UnsupportedOrderError(ContractError):
    """Requested derivative order exceeds the implemented cap."""


class IntegrationError(RuntimeError):
    """ODE integration failed (step-size underflow, chart exit).

    Carries the last valid state reached, when available.
    """

    def __init__(self, message, last_state=None, t=None):
        super().__init__(message)
        self.last_state = last_state
        self.t = t


class ConvergenceError(RuntimeError):
    """Iterative solve did not converge; carries the best residual seen."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResolutionError(ValueError):
    """A grid is too coarse for the requested computation.

    ``required`` names the sample count (or padding) that would suffice.
    """

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class TruncationError(RuntimeError):
    """A truncated integral has a numerically divergent tail.

    ``tail_estimate`` is the estimated contribution beyond the grid.
    """

    def __init__(self, message, tail_estimate=None):
        super().__init__(message)
        self.tail_estimate = tail_estimate
