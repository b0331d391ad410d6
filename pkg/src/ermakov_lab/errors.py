"""Exception hierarchy shared by every module."""


class ErmakovLabError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(ErmakovLabError, ValueError):
    """A time or parameter lies outside the admissible domain."""


class DegeneratePairError(ErmakovLabError, ValueError):
    """The two TDHO solutions are linearly dependent (zero Wronskian)."""


class IntegrationError(ErmakovLabError, RuntimeError):
    """The ODE integrator failed; ``diagnostics`` carries solver details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InsufficientGridError(ErmakovLabError, ValueError):
    pass


class DimensionError(ErmakovLabError, ValueError):
    """Truncated space too small, or operator shapes do not match."""


class NumericalError(ErmakovLabError, ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class TruncationRiskError(ErmakovLabError, ValueError):
    """Requested state would not be represented faithfully in the truncated basis."""


class InvalidFrequencyError(ErmakovLabError, ValueError):
    pass


class UnsupportedNormalizationError(ErmakovLabError, ValueError):
    pass


class MatchingError(ErmakovLabError, ValueError):
    """Frequency-matching condition of a conversion process is violated."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class ConfigError(ErmakovLabError, ValueError):
    """Invalid scenario configuration. ``field`` is a dotted path when known."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line
