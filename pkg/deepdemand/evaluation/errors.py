"""Errors for the evaluation package."""
from typing import Any, Iterable

from ..errors import ComputationError, DeepDemandException, InputError

__all__ = (
    "EvaluationException",
    "EmptyInput",
    "InvalidProtocol",
    "MissingRegions",
    "SingularDesign",
    "InvalidMasses",
)


class EvaluationException(DeepDemandException):
    """Base exception for this package."""


class EmptyInput(EvaluationException, InputError):
    """Metrics were requested for an empty or inconsistent set of edges."""


class InvalidProtocol(EvaluationException, InputError):
    """The cross-validation protocol or its fold count is not usable."""


class MissingRegions(EvaluationException, InputError):
    """Spatial cross-validation was requested for targets without a region.

    Attributes
    ----------
    edge_ids : List[int]
        The unlabeled target edges, ascending.

    """

    def __init__(self, edge_ids: Iterable[int], *args: Any):
        self.edge_ids = sorted(edge_ids)
        shown = ", ".join(map(str, self.edge_ids[:10]))
        more = "" if len(self.edge_ids) <= 10 else f" and {len(self.edge_ids) - 10} more"
        super().__init__(
            *(args or (f"Targets without a region label: {shown}{more}.",))
        )


class SingularDesign(EvaluationException, ComputationError):
    """The least-squares design matrix is rank deficient.

    Use a positive ridge penalty instead.
    """


class InvalidMasses(EvaluationException, InputError):
    """Gravity masses are missing, negative or all zero."""
