"""Errors for the featurebank package."""
from typing import Any

from ..errors import DeepDemandException, InputError

__all__ = (
    "FeatureBankException",
    "InvalidFeatureTable",
    "EmptyGraph",
    "MissingFeature",
    "ChecksumMismatch",
)


class FeatureBankException(DeepDemandException):
    """Base exception for this package."""


class InvalidFeatureTable(FeatureBankException, InputError):
    """The raw feature or centroid table cannot be used."""


class EmptyGraph(FeatureBankException, InputError):
    """Tried to attach features to a graph with no nodes."""


class MissingFeature(FeatureBankException, InputError):
    """A node was expected to carry a feature vector but does not.

    Attributes
    ----------
    node : int
        The node without features.

    """

    def __init__(self, node: int, *args: Any):
        self.node = node
        super().__init__(*(args or (f"Node {node} has no feature vector.",)))


class ChecksumMismatch(FeatureBankException, InputError):
    """A feature bank does not match the one an artifact was built against.

    Attributes
    ----------
    expected : str
        The checksum recorded in the artifact.
    actual : str
        The checksum of the bank in hand.

    """

    def __init__(self, expected: str, actual: str, *args: Any):
        self.expected = expected
        self.actual = actual
        super().__init__(
            *(
                args
                or (
                    f"Feature bank checksum {actual[:16]} does not match the "
                    f"expected {expected[:16]}.",
                )
            )
        )
