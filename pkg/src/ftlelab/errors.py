"""Exception hierarchy shared across the package."""


class FtleLabError(Exception):
    """Base class for all package errors."""


class DomainError(FtleLabError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class RangeOverflowError(FtleLabError, OverflowError):
    """An integer quantity grew past the exactly-representable range."""


class PreconditionError(FtleLabError, ValueError):
    """A documented operation precondition was violated by the caller."""


class ConfigurationError(FtleLabError, ValueError):
    """A model constant or configuration document is inconsistent."""


class ModelInconsistencyError(FtleLabError, RuntimeError):
    """An orbit or image left the region the model guarantees it stays in."""


class BoundViolationError(FtleLabError, RuntimeError):
    """A certified entry bound failed; ``entry`` names the offender."""

    def __init__(self, message: str, entry: str | None = None):
        super().__init__(message)
        self.entry = entry


class SearchExhaustedError(FtleLabError, RuntimeError):
    """A bounded numeric search ended without an admissible result."""

    def __init__(self, message: str, first_violation: str | None = None):
        super().__init__(message)
        self.first_violation = first_violation
