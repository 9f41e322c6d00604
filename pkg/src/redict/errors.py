"""Exception hierarchy shared by all modules."""


class RedictError(Exception):
    """Base class for library errors."""


class InvalidArgumentError(RedictError, ValueError):
    """Raised on malformed inputs (dimension mismatch, bad domain, ...)."""


class ValidationError(RedictError, ValueError):
    """Raised when a mathematical hypothesis fails on supplied data.

    The measured defect is kept on ``defect`` so callers can report it.
    """

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class ResourceError(RedictError):
    """Raised when a request exceeds the configured memory/work budget."""


class UnsupportedError(RedictError):
    """Raised when a method is not available for the given input kind."""


class PreconditionError(RedictError, ValueError):
    """Raised when a documented precondition of a bound does not hold."""
