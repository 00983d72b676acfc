"""Root errors for the deepdemand package."""

__all__ = ("DeepDemandException", "InputError", "ComputationError")


class DeepDemandException(Exception):
    """Base exception for this package."""


class InputError(DeepDemandException):
    """The inputs to an operation were missing, malformed or inconsistent.

    The command-line interface exits with code 2 for these.
    """


class ComputationError(DeepDemandException):
    """A computation failed.

    The command-line interface exits with code 1 for these.
    """
