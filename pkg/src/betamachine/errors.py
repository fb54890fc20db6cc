"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so the classes carry no behaviour of
their own beyond a readable message.
"""


class BetaError(Exception):
    """Base class for all library errors."""


class ValidationError(BetaError, ValueError):
    """Structurally invalid input (odd dimension, duplicate index, ...)."""


class DomainError(BetaError, ValueError):
    """Input outside the mathematical domain of an operation."""


class DimensionError(ValidationError):
    """Operand shapes do not agree."""


class CapacityError(BetaError):
    """A size limit (dimension cap, exact integer range) would be exceeded."""


class NumericError(BetaError, ArithmeticError):
    """Singular input, non-convergence or a non-finite result."""


class DegeneracyError(NumericError):
    """A vector is linearly dependent on the basis it should extend."""


class EncodingError(BetaError):
    """An operator output does not decode back to a basis index."""
