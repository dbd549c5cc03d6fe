"""Exception hierarchy shared by every module."""


class IgeoError(Exception):
    """Base class for all package errors."""


class DomainError(IgeoError, ValueError):
    """Input outside the domain of a formula (e.g. sigma <= 0, r outside (0, 1))."""


class RangeError(DomainError):
    """A coordinate map produced a point that is not on the manifold."""


class ChartError(IgeoError, TypeError):
    """Macrostates from different coordinate charts were mixed."""


class ArgumentError(IgeoError, ValueError):
    """Malformed argument: wrong length, empty input, bad option."""


class IntegrationError(IgeoError, RuntimeError):
    """The ODE integrator could not continue.

    ``last_state`` holds the last accepted state so callers can report it.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class SingularityError(IntegrationError):
    """A sigma component crossed the floor during integration."""


class AccuracyError(IgeoError, ArithmeticError):
    """A numerical routine could not reach its requested accuracy."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class DataError(IgeoError, ValueError):
    """Data handed to a fit or report violates its preconditions."""


class ConfigError(IgeoError, ValueError):
    """Configuration file could not be parsed or validated.

    ``diagnostics`` lists one message per offending field.
    """

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
