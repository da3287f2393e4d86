"""Exception hierarchy. Everything raised on purpose derives from ScarkitError."""


class ScarkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ScarkitError, ValueError):
    """Invalid parameter bundle or run configuration."""


class InvalidElementError(ScarkitError, ValueError):
    """Matrix is not in SL(2, R) within tolerance."""


class SingularConfigurationError(ScarkitError, ArithmeticError):
    """A closed-form denominator degenerated."""


class DomainError(ScarkitError, ValueError):
    """Argument outside the domain of the operation (e.g. not in the upper half-plane)."""


class PrecisionError(ScarkitError, ArithmeticError):
    """Quadrature failed to reach its tolerance.

    ``estimate`` carries the achieved error estimate when one is available.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class TailModelRequired(ScarkitError, ValueError):
    """Spectral data is not negligible at the end of its grid and no tail model was given."""


class CalibrationError(ScarkitError, ArithmeticError):
    """Two independent computation paths disagree beyond tolerance."""


class ResolutionError(ScarkitError, ArithmeticError):
    """Grid too coarse for the requested quantity; increase the resolution."""


class DifferentiationError(ScarkitError, ArithmeticError):
    """Finite-difference derivative is unstable under step halving."""


class InterfaceError(ScarkitError, ValueError):
    """Inputs built from incompatible grids or configurations."""


class IngestionError(ScarkitError, ValueError):
    """Basis file is malformed or violates the spectral window."""
