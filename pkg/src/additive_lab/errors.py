class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""


class ResourceError(MemoryError):
    """A table or scan could not be allocated."""


class UsageError(Exception):
    """Bad command line or configuration input."""
