class ContainmentError(Exception):
    """Base exception for containment library errors."""

    pass


class ValidationError(ContainmentError):
    """Exception raised when an input violates a precondition."""

    pass


class LimitExceeded(ContainmentError):
    """Exception raised when a brute-force computation exceeds its size limit."""

    pass


class NumericalError(ContainmentError):
    """Exception raised when a numerical routine cannot produce a result."""

    pass


class BadShape(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EpsilonOutOfRange(ValidationError):
    pass


class InvalidBody(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class ZeroDirection(ValidationError):
    pass


class StartNotInterior(ValidationError):
    pass


class DependentSubset(ValidationError):
    pass


class UnsupportedBody(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class TooManyGenerators(LimitExceeded):
    pass


class TooManySubsets(LimitExceeded):
    pass


class TooManyVertices(LimitExceeded):
    pass


class SampleBudgetOverflow(LimitExceeded):
    """Raised when a recommended sample count does not fit in 62 bits."""

    pass


class RankDeficient(NumericalError):
    pass


class LPNumerical(NumericalError):
    pass


class LPInfeasible(NumericalError):
    pass


class Unbounded(NumericalError):
    """Raised when a body or linear program has no finite bound."""

    pass


class UnboundedBody(Unbounded):
    pass


class NoConvergence(NumericalError):
    pass


class BarrierStall(NumericalError):
    pass


class OracleInconsistent(NumericalError):
    pass


class DegenerateLog(NumericalError):
    pass


class NoWitnessFound(ContainmentError):
    """Raised when no scale separates the inner body from the outer body."""

    pass
