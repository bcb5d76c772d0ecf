"""Exception and warning types shared across the package."""


class WhquantError(Exception):
    """Base class for all errors raised by whquant."""


class DomainError(WhquantError, ValueError):
    """Argument outside the domain where a special function is defined."""


class GridError(WhquantError, ValueError):
    """Incompatible or malformed discretization grids."""


class InvalidWindow(WhquantError, ValueError):
    """Window parameters violate their admissibility constraints."""


class NormError(WhquantError, ValueError):
    """A state vector is not normalized to the required tolerance."""


class MassFloorError(WhquantError, ArithmeticError):
    """Evaluation needs the reciprocal of an inverse mass below the floor."""


class StepError(WhquantError, ArithmeticError):
    """Integrator step produced an unacceptable energy jump."""


class OrderError(WhquantError, ValueError):
    """Requested polynomial order in momentum is not supported."""


class QuadratureError(WhquantError, ArithmeticError):
    """Phase-space quadrature failed its trace sanity check."""


class CalibrationError(WhquantError, ArithmeticError):
    """No candidate reading of a closed form matches the numerical oracle."""


class ConfigError(WhquantError, ValueError):
    """Malformed or inconsistent run configuration."""


class EdgeLeakage(UserWarning):
    """A field does not decay to numerical zero at the grid boundary."""


class AsymmetryWarning(UserWarning):
    """Quantization rule yields a non-symmetric operator (lambda'(0) != 0)."""
