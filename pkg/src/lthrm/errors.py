"""Exception hierarchy shared across the package."""


class ManometryError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(ManometryError):
    """An argument value violates an operation's preconditions."""


class InvalidDataError(ManometryError):
    """Input data content is unusable for the requested operation."""


class InvalidStateError(ManometryError):
    """Operation applied to an object in the wrong state."""


class FormatError(ManometryError):
    """A persisted artifact is malformed or violates its schema."""
