"""Exception hierarchy shared by all modules."""


class CigselError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(CigselError, ValueError):
    """Malformed or out-of-domain argument (non-symmetric ACF, bad rho, ...)."""


class AliasingError(InvalidInputError):
    """Frequency grid too coarse for the ACF support."""


class ConditioningError(CigselError, ArithmeticError):
    """A matrix that must be invertible is (numerically) singular."""


class InvalidConfigurationError(InvalidInputError):
    """Sampling configuration violates the finite-support requirement K - 1 < N/2."""


class OracleSizeError(CigselError, MemoryError):
    """Brute-force oracle requested beyond desk scale."""


class InternalInvariantError(CigselError, AssertionError):
    """An identity that holds by construction was violated numerically."""
