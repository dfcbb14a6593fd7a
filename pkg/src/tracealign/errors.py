"""Exception types shared across the package.

The CLI maps these onto exit codes: parse errors -> 2, resource errors -> 3,
configuration errors -> 4.
"""


class TraceAlignError(Exception):
    """Base class for every error raised by this package."""


class TraceParseError(TraceAlignError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConfigurationError(TraceAlignError):
    """Invalid combination of costs, modes or flags."""


class ContractError(TraceAlignError):
    """A caller broke a precondition (out-of-order write, bad shape, ...)."""


class ResourceError(TraceAlignError):
    """Base for errors caused by memory, disk or cell-width limits."""


class CellOverflowError(ResourceError):
    pass


class CapacityError(ResourceError):
    pass


class QuotaError(ResourceError):
    pass


class CorruptionError(TraceAlignError):
    """The stored cost matrix is not consistent with the recurrence."""
