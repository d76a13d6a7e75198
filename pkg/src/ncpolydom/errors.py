class NcPolydomError(Exception):
    """Base class for all library errors."""


class ValidationError(NcPolydomError, ValueError):
    """Malformed or out-of-contract input (CLI exit status 1)."""


class CertificationError(NcPolydomError, ArithmeticError):
    """A quantity was computed but could not be certified (CLI exit status 2)."""
