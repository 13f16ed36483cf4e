"""Exception hierarchy shared by all modules."""


class SpatialPermError(Exception):
    """Base class for errors raised by spatialperm."""


class DomainError(SpatialPermError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class PositivityError(DomainError):
    """The Fourier transform of a jump weight is not strictly positive."""


class UnsupportedExactError(DomainError):
    """No exact evaluation exists for this parameter regime."""


class ResourceCapError(SpatialPermError, RuntimeError):
    """A configured memory or work budget would be exceeded."""


class PeriodizationError(SpatialPermError, RuntimeError):
    """An image sum over the torus failed to converge."""
