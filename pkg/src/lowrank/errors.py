"""Exception types raised across the package."""


class LowRankError(Exception):
    """Base class for all package errors."""


class DimensionError(LowRankError, ValueError):
    """Operands have incompatible shapes."""


class ValidationError(LowRankError, ValueError):
    """Input violates a precondition (sign, symmetry, finiteness, ...)."""


class DomainError(LowRankError, ValueError):
    """Argument lies outside the domain of a function (e.g. log of zero)."""


class DegenerateClusterError(LowRankError, ValueError):
    """A cluster indicator column is identically zero."""


class SplitError(LowRankError, ValueError):
    """Observation mask cannot be partitioned as requested."""


class NoDataError(LowRankError, ValueError):
    """No observed entries are available for fitting."""


class SolverError(LowRankError, RuntimeError):
    """A linear sub-problem could not be solved."""


class DivergenceError(LowRankError, RuntimeError):
    """The objective became non-finite during iteration."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"objective became non-finite at iteration {iteration}")


class ParseError(LowRankError, ValueError):
    """Malformed matrix file."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
