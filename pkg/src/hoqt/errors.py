"""Exception hierarchy shared by every module."""


class HoqtError(Exception):
    """Base class for all toolkit errors."""


class TheoryError(HoqtError):
    """Malformed wire declaration or theory file."""


class ParseError(HoqtError):
    """Syntax error in a projector expression."""

    def __init__(self, message, position=None, expected=()):
        self.position = position
        self.expected = tuple(expected)
        if position is not None:
            message = f"{message} at position {position}"
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message)


class WellFormednessError(HoqtError):
    """Undeclared wire, reused wire, or mismatched operand wire sets."""


class WireMismatchError(HoqtError):
    """Two expressions compared over different wire sets."""


class UnsupportedExpressionError(HoqtError):
    """Expression uses a connective the requested operation does not cover."""


class NotRepresentableError(HoqtError):
    """No canonical prec-chain decomposition exists for the expression."""

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)


class WireLimitError(HoqtError):
    """Permutation enumeration would exceed the configured wire count."""


class InstantiationError(HoqtError):
    """Expression cannot be materialized as a concrete matrix."""


class DimensionError(HoqtError):
    """Operator shapes or wire splits do not line up."""


class NormalizationError(HoqtError):
    """A probabilistic family is not properly normalized."""

    def __init__(self, message, family=None):
        self.family = family
        super().__init__(message)


class ScenarioError(HoqtError):
    """Unknown scenario name or unsupported scenario parameters."""
