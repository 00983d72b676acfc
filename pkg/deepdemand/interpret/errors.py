"""Errors for the interpret package."""
from ..errors import DeepDemandException, InputError

__all__ = ("InterpretException", "EmptyUniverse", "InvalidGrid")


class InterpretException(DeepDemandException):
    """Base exception for this package."""


class EmptyUniverse(InterpretException, InputError):
    """There are no OD pairs to compute potentials over."""


class InvalidGrid(InterpretException, InputError):
    """A travel-time grid is empty, decreasing or negative."""
