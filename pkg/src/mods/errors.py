"""Exception types shared across the package."""


class ModsError(Exception):
    """Base class for all package errors."""


class InvariantError(ModsError):
    """A data invariant was violated; the message names the offending id."""


class FormatError(ModsError):
    """A file could not be parsed; the message carries the location."""
