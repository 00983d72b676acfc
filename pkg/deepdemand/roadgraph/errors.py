"""Errors for the roadgraph package."""
from typing import Any, Iterable, List

from ..errors import DeepDemandException, InputError

__all__ = (
    "RoadGraphException",
    "InvalidEdges",
    "EdgeNotFound",
    "InvalidSyntheticSpec",
)


class RoadGraphException(DeepDemandException):
    """Base exception for this package."""


class InvalidEdges(RoadGraphException, InputError):
    """One or more edges failed validation.

    Attributes
    ----------
    edge_ids : List[int]
        The offending edge ids, sorted.

    """

    def __init__(self, edge_ids: Iterable[int], *args: Any):
        self.edge_ids: List[int] = sorted(edge_ids)
        if not args:
            shown = ", ".join(map(str, self.edge_ids[:20]))
            more = "" if len(self.edge_ids) <= 20 else f" (+{len(self.edge_ids) - 20})"
            args = (f"Invalid edges: {shown}{more}",)
        super().__init__(*args)


class EdgeNotFound(RoadGraphException, InputError):
    """The edge id does not exist in the graph.

    Attributes
    ----------
    edge_id : int
        The missing edge id.

    """

    def __init__(self, edge_id: int, *args: Any):
        self.edge_id = edge_id
        super().__init__(*(args or (f"Edge {edge_id} is not in the graph.",)))


class InvalidSyntheticSpec(RoadGraphException, InputError):
    """The synthetic network specification is degenerate."""
