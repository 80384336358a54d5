"""Exception hierarchy shared by all modules.

Each class maps onto one CLI exit code (see ``cfdigits.cli``).
"""


class CFError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CFError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShortfallError(CFError, ValueError):
    """A digit stream has fewer digits than an operation requires."""

    def __init__(self, required, available):
        super().__init__(f"need {required} digits, stream has {available}")
        self.required = required
        self.available = available


class InsufficientDataError(CFError, ValueError):
    """Not enough data (digits, samples, blocks) for a statistic."""


class CapacityError(CFError):
    """A source cannot deliver the requested precision."""

    def __init__(self, required, available, unit="decimal digits"):
        super().__init__(f"source capacity exceeded: need {required} {unit}, have {available}")
        self.required = required
        self.available = available


class ParseError(CFError, ValueError):
    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)
        self.offset = offset


class ValidationError(CFError, ValueError):
    """Input parsed but is inconsistent (header mismatch, empty, bad checksum)."""


class EntropyError(CFError):
    """A random stream ran out of bits."""
