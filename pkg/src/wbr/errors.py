"""Exception hierarchy shared by all wbr modules."""


class WbrError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(WbrError, ValueError):
    """Operand dimensions are incompatible; message names both shapes."""


class FormatError(WbrError, ValueError):
    """A binary file does not match its documented layout."""


class ConsistencyError(FormatError):
    """Structurally valid files that disagree with each other or themselves."""


class ConfigError(WbrError, ValueError):
    """Invalid experiment configuration. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class ProtocolError(WbrError, RuntimeError):
    """The class-incremental protocol was violated (label leakage etc.)."""


class EstimationError(WbrError, ValueError):
    """A statistic cannot be estimated (e.g. a class with no samples)."""


class NumericError(WbrError, ArithmeticError):
    """Non-finite values reached an operation that requires finite input."""


class MetricError(WbrError, ValueError):
    """A metric is undefined for the given input (e.g. empty prediction set)."""


class ComparabilityError(WbrError, ValueError):
    """Runs cannot be compared (different scenarios or class orders)."""
