"""Exception hierarchy shared by all modules."""


class DysonError(Exception):
    """Base class for all library errors."""


class ConfigError(DysonError):
    """Invalid or unresolvable configuration."""


class DomainError(DysonError, ValueError):
    """A formula was evaluated outside its real domain.

    Attributes
    ----------
    t : float or None
        First offending time, when known.
    """

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.6g})")
        self.t = t


class DegenerateConstantError(DomainError):
    """An integration constant takes a value where the closed form divides by it."""


class SingularConfigurationError(DysonError, ZeroDivisionError):
    """A right-hand side divides by a vanishing coefficient."""


class QuadratureError(DysonError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


class IntegrationError(DysonError):
    """A fixed-step integration produced a non-finite state."""

    def __init__(self, message, t):
        super().__init__(f"{message} at t={t:.6g}")
        self.t = t


class ConditioningError(DysonError):
    """A Dyson map is too ill-conditioned for the requested evaluation."""

    def __init__(self, message, exponent_norm):
        super().__init__(f"{message} (exponent norm {exponent_norm:.3e})")
        self.exponent_norm = exponent_norm


class UnsatisfiableError(DysonError):
    """A linear commutator equation has no solution."""


class ExceptionalPointError(DysonError):
    """Parameters sit on an exceptional point where the formula is undefined."""
