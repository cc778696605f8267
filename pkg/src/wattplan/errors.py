"""Exception types shared across the toolkit."""


class WattplanError(Exception):
    """Base class for all wattplan errors."""


class DomainError(WattplanError):
    """A value violates a documented precondition or invariant."""


class DataFormatError(WattplanError):
    """An input file is malformed or does not match its schema."""
