"""Event-state machine toolkit: subspace logic, combined states and a
spectrum-driven hypothesis machine, with a small language on top."""

from .errors import (BetaError, CapacityError, DegeneracyError, DimensionError, DomainError,
                     EncodingError, NumericError, ValidationError)

__version__ = "0.1.0"

__all__ = [
    "BetaError", "CapacityError", "DegeneracyError", "DimensionError", "DomainError",
    "EncodingError", "NumericError", "ValidationError", "__version__",
]
