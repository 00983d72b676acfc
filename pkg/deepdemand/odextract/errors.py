"""Errors for the odextract package."""
from typing import Any

from ..errors import DeepDemandException, InputError

__all__ = (
    "ODExtractionException",
    "InvalidTarget",
    "InvalidParameter",
    "ContextFormatError",
    "StaleContext",
)


class ODExtractionException(DeepDemandException):
    """Base exception for this package."""


class InvalidTarget(ODExtractionException, InputError):
    """The target edge cannot be used for extraction.

    Attributes
    ----------
    edge_id : int
        The target edge id.
    reason : str
        Why the target was rejected.

    """

    def __init__(self, edge_id: int, reason: str, *args: Any):
        self.edge_id = edge_id
        self.reason = reason
        super().__init__(*(args or (f"Target edge {edge_id}: {reason}",)))


class InvalidParameter(ODExtractionException, InputError):
    """A search parameter (cutoff, tolerance, worker count) is out of range."""


class ContextFormatError(ODExtractionException, InputError):
    """An OD-context file could not be parsed."""


class StaleContext(ODExtractionException, InputError):
    """An OD-context file was extracted under a different configuration.

    Attributes
    ----------
    edge_id : int
        The target edge id of the context.
    expected : str
        The extraction hash of the current configuration.
    actual : str
        The extraction hash recorded in the file.

    """

    def __init__(self, edge_id: int, expected: str, actual: str, *args: Any):
        self.edge_id = edge_id
        self.expected = expected
        self.actual = actual
        super().__init__(
            *(
                args
                or (
                    f"Context for edge {edge_id} has extraction hash {actual}, "
                    f"expected {expected}. Re-run extract-od.",
                )
            )
        )
