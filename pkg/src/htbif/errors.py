"""Typed errors shared by all modules.

Domain hypotheses are hard preconditions: violations raise, nothing is
silently clamped.
"""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class NoSolutionError(RuntimeError):
    """The requested solution does not exist for these parameters."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach tolerance within its panel budget."""


class IntegrationError(RuntimeError):
    """ODE integration failed its accuracy watchdog."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed to converge."""


class PositivityError(ConvergenceError):
    """Newton iterate or limit left the positive cone.

    Carries the final iterate so callers can inspect semitrivial or
    sign-changing limits.
    """

    def __init__(self, message, w=None, v=None, residual_sup=None, iterations=None):
        super().__init__(message)
        self.w = w
        self.v = v
        self.residual_sup = residual_sup
        self.iterations = iterations


class GridMismatchError(ValueError):
    """Profiles that must share a grid do not."""


class DegenerateError(RuntimeError):
    """A linearization is (numerically) singular where the method needs invertibility."""


class InsufficientDataError(RuntimeError):
    """Too few converged data points to run the requested fit."""


class DegeneracyWarning(UserWarning):
    """An eigenvalue sits within the degeneracy tolerance of zero."""
