"""Exception hierarchy shared across the package."""


class PdpError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(PdpError, ValueError):
    """Parameters outside their validity domain."""


class InvalidPartitionError(PdpError, ValueError):
    """A partition, multiplicity or indicator vector violates its invariants."""


class DegeneratePochhammerError(PdpError, ArithmeticError):
    """A rising-factorial product contains an exactly zero factor."""


class ResourceCapError(PdpError, MemoryError):
    """A requested table would exceed the configured memory cap."""


class CoverageError(PdpError, LookupError):
    """A precomputed table does not cover a required coordinate."""

    def __init__(self, n, t, detail=""):
        self.n = n
        self.t = t
        msg = f"table does not cover (n={n}, t={t})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
