"""Exception types shared across the package."""


class EcghfError(Exception):
    """Base class for every error raised by this package."""


class DataFormatError(EcghfError):
    """Malformed input: parse failures, missing or unexpected channels, ragged rows."""


class InsufficientDataError(EcghfError):
    """Well-formed input that is too short or too small for the requested operation."""


class DomainError(EcghfError):
    """Arguments outside an operation's mathematical domain."""


class NumericalError(EcghfError):
    """A computation failed for numerical reasons, e.g. a singular matrix."""
