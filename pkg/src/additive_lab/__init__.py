"""Numerical laboratory for additive arithmetic functions with regularly varying prime weights."""

__version__ = "0.1.0"

from .errors import DomainError, NumericError, ResourceError, UsageError  # noqa: F401
