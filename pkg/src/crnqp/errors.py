"""Exception hierarchy.

Input problems derive from :class:`InputError`; failures of a numerical
method derive from :class:`NumericalError`. The CLI maps the first family to
exit code 1 and the second to exit code 2.
"""


class CRNError(Exception):
    """Base class for all package errors."""


class InputError(CRNError, ValueError):
    """Malformed or inadmissible input."""


class ParseError(InputError):
    """Syntax error in network text, with 1-based line and column."""

    def __init__(self, message, line, column, expected=None):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"line {line}, column {column}: {message}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class NetworkError(InputError):
    """A network violates a structural invariant."""


class NotComplexBalancedError(InputError):
    """An operation that requires complex balance was called without it."""


class NumericalError(CRNError):
    """A numerical method failed."""


class OverflowGuardError(NumericalError):
    """An exponent <zeta, p> exceeded the overflow guard."""


class NonConvergenceError(NumericalError):
    """An iterative method hit its iteration cap."""


class StepSizeUnderflowError(NumericalError):
    """Adaptive step size fell below the resolvable spacing."""

    def __init__(self, message, t, state):
        self.t = t
        self.state = state
        super().__init__(message)


class OrthantExitError(NumericalError):
    """A Hamiltonian trajectory left the positive orthant."""

    def __init__(self, message, t, state):
        self.t = t
        self.state = state
        super().__init__(message)


class EnergyDriftError(NumericalError):
    """Energy drifted more than the allowed bound along a Hamiltonian flow."""


class SteadyStateError(NumericalError):
    """Steady-state search did not converge."""


class BoundarySteadyStateError(SteadyStateError):
    """Dynamics converged to a state on the boundary of the orthant."""

    def __init__(self, message, state):
        self.state = state
        super().__init__(message)


class ReducibleChainError(NumericalError):
    """Truncated chain has several closed classes."""

    def __init__(self, message, classes):
        self.classes = classes
        super().__init__(message)


class TruncationError(NumericalError):
    """The truncation leaves no meaningful stationary problem."""


class BranchError(NumericalError):
    """Zero-level root selection failed or became ambiguous."""

    def __init__(self, message, x):
        self.x = x
        super().__init__(message)


class QuadratureSingularityError(NumericalError):
    """A log singularity lies on the integration range."""


class BoundaryContactError(NumericalError):
    """An optimized path touched the boundary of the orthant."""


class ShootingDivergenceError(NumericalError):
    """Shooting failed to match the terminal condition."""

    def __init__(self, message, best_mismatch, best_p0):
        self.best_mismatch = best_mismatch
        self.best_p0 = best_p0
        super().__init__(message)
