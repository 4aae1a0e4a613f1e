from .errors import ArgumentError, CapacityError, NumericalError, ParseError, SpotError, ValidationError

__all__ = [
    "ArgumentError",
    "CapacityError",
    "NumericalError",
    "ParseError",
    "SpotError",
    "ValidationError",
]
