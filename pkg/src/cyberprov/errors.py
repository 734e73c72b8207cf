"""Exception types shared across the package."""


class CyberProvError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CyberProvError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceFailure(CyberProvError):
    """A root-finding bracket could not be established or refined."""


class NumericalInstability(CyberProvError):
    """A numerical routine produced values outside its guaranteed bounds.

    Raised by the aggregate-loss transform when probabilities come out
    materially negative or total mass drifts from one, which signals a
    misconfigured grid or tilting parameter rather than roundoff.
    """


class AdmissibilityViolation(CyberProvError):
    """A decision tuple violates the rule that claims require active cover."""


class ConfigError(CyberProvError):
    """An experiment configuration failed validation.

    The message names the offending field so callers can surface
    field-level diagnostics.
    """
