"""Exception hierarchy shared by every module."""


class QlithoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QlithoError, ValueError):
    """An argument lies outside the physically admissible domain."""


class ConstructionError(QlithoError, ValueError):
    """A state or experiment could not be built from the given parameters."""


class CapabilityError(QlithoError):
    """The requested computation path does not support this input."""


class ResolutionError(QlithoError, ValueError):
    """A sampling grid is too coarse for the requested computation."""


class ConvergenceError(QlithoError):
    """Adaptive quadrature failed to reach tolerance.

    The best available estimate is kept on ``best`` so callers can decide
    whether it is good enough.
    """

    def __init__(self, message, best=None, error=None):
        super().__init__(message)
        self.best = best
        self.error = error


class ScenarioError(QlithoError):
    """Base class for scenario file problems."""


class ScenarioParseError(ScenarioError):
    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class ScenarioValidationError(ScenarioError):
    """Collects every parameter violation found in a scenario."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"scenario failed validation:\n{lines}")
