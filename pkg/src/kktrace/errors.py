"""Exception hierarchy shared by all kktrace modules."""


class KKTraceError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidWeightError(KKTraceError, ValueError):
    pass


class DomainError(KKTraceError, ValueError):
    pass


class ConfigurationError(KKTraceError, ValueError):
    pass


class IntegrationError(KKTraceError, RuntimeError):
    """Raised when the adaptive integrator cannot continue.

    ``blowup_time`` is the last time the solution was known.
    """

    def __init__(self, message, blowup_time=None):
        super().__init__(message)
        self.blowup_time = blowup_time


class ConditioningError(KKTraceError, ArithmeticError):
    pass


class PrecisionNotReached(KKTraceError, RuntimeError):
    """Monte Carlo estimate did not reach the requested relative error."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IncompleteWindowError(KKTraceError, ValueError):
    def __init__(self, message, m=None):
        super().__init__(message)
        self.m = m


class ResolutionError(KKTraceError, ArithmeticError):
    pass


class ThresholdNotFound(KKTraceError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SchemaError(KKTraceError, ValueError):
    """Malformed model/scenario file; ``line`` points at the offending entry."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
