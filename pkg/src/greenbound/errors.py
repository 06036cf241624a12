"""Exception hierarchy shared by all greenbound modules."""


class GreenboundError(Exception):
    """Base class for all library errors."""


class InvalidGridError(GreenboundError):
    """Grid construction violated a precondition (e.g. n < 3)."""


class NotIntegrableError(GreenboundError):
    """An integrand is non-finite where finiteness is required."""


class DomainError(GreenboundError):
    """Argument outside the domain of the requested operation."""


class DegenerateSourceError(GreenboundError):
    """Source potential h is zero or negative at an interior node."""


class InvalidHError(GreenboundError):
    """Comparison profile h fails positivity or superharmonicity."""


class InvalidSignError(GreenboundError):
    """Potential V violates the sign condition of the requested regime."""


class InvalidScenarioError(GreenboundError):
    """Scenario parameters outside their admissible range."""


class DivergingBracketError(GreenboundError):
    """Scalar recurrence has no fixed point in (0,1): a > a*."""


class PreconditionFailedError(GreenboundError):
    """A nodewise condition required before iterating is violated.

    Carries the indices of offending nodes in ``nodes``.
    """

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = list(nodes) if nodes is not None else []


class SolverFailureError(GreenboundError):
    """Newton linear algebra failed beyond rescue."""


class InfeasibleStartError(GreenboundError):
    """Positivity of iterates could not be restored by damping."""


class NotOrderedError(GreenboundError):
    """Sub/supersolution pair is not ordered."""


class WindowTooSmallError(GreenboundError):
    """Fewer than the minimum number of fit nodes in the window."""


class ResolutionInsufficientError(GreenboundError):
    """Oscillatory quadrature could not certify the requested accuracy."""


class ConfigError(GreenboundError):
    """Malformed CLI configuration."""
