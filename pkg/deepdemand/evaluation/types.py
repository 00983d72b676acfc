"""Module containing the value types used in evaluation."""
import enum
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from ..demandmodel import EdgeInputs
from ..odextract import ODContext
from ..roadgraph import TargetEdge
from .errors import InvalidProtocol

__all__ = ("Protocol", "Split", "FoldPlan", "EdgeRecord", "Summary", "EvalEdge")


class Protocol(str, enum.Enum):
    """Cross-validation protocol."""

    random = "random"
    spatial = "spatial"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: str) -> "Protocol":
        try:
            # noinspection PyArgumentList
            return cls(str(value).lower())
        except ValueError:
            raise InvalidProtocol(
                f'Unknown protocol "{value}"; use "random" or "spatial".'
            ) from None


class Split(str, enum.Enum):
    train = "train"
    test = "test"

    def __str__(self) -> str:
        return self.value


class FoldPlan:
    """Assignment of target edges to test folds.

    Attributes
    ----------
    protocol : Protocol
        How the folds were drawn.
    k : int
        Number of folds.
    seed : Optional[int]
        Shuffle seed (random protocol).
    regions : List[str]
        Distinct region labels, one fold each (spatial protocol).
    assignment : Dict[int, str]
        Edge id to fold id.

    """

    __slots__ = ("protocol", "k", "seed", "regions", "assignment")

    def __init__(
        self,
        protocol: Protocol,
        assignment: Dict[int, str],
        *,
        k: int,
        seed: Optional[int] = None,
        regions: Sequence[str] = (),
    ):
        self.protocol = protocol
        self.assignment = dict(sorted(assignment.items()))
        self.k = k
        self.seed = seed
        self.regions = list(regions)

    @property
    def folds(self) -> List[str]:
        """(List[str]) : Fold ids in report order."""
        if self.protocol is Protocol.spatial:
            return list(self.regions)
        return [str(i) for i in range(self.k)]

    def test_edges(self, fold: str) -> List[int]:
        return [e for e, f in self.assignment.items() if f == fold]

    def train_edges(self, fold: str) -> List[int]:
        return [e for e, f in self.assignment.items() if f != fold]

    def to_dict(self) -> Dict[str, object]:
        return {
            "protocol": str(self.protocol),
            "k": self.k,
            "seed": self.seed,
            "regions": self.regions,
            "assignment": {str(e): f for e, f in self.assignment.items()},
        }

    def __repr__(self) -> str:
        return f"<FoldPlan protocol={self.protocol} k={self.k} edges={len(self.assignment)}>"


class EdgeRecord(NamedTuple):
    """One model's prediction for one edge in one fold."""

    model: str
    edge_id: int
    fold: str
    split: Split
    y: float
    yhat: float
    geh: float
    road_class: str
    region: Optional[str]

    @property
    def residual(self) -> float:
        return self.y - self.yhat


class Summary(NamedTuple):
    """Mean and standard deviation of a metric across folds.

    ``None`` where no fold defines the metric.
    """

    mean: Optional[float]
    std: Optional[float]
    n_folds: int

    def __str__(self) -> str:
        if self.mean is None:
            return "-"
        return f"{self.mean:,.3f} ({self.std:,.3f})"


class EvalEdge(NamedTuple):
    """A target edge with everything the models need to predict it.

    ``design`` is the baseline design vector: mean reduced origin features,
    mean reduced destination features, screened pair count and mean pair
    travel time.
    """

    target: TargetEdge
    context: ODContext
    inputs: EdgeInputs
    design: np.ndarray

    @property
    def edge_id(self) -> int:
        return self.target.edge_id

    @property
    def y(self) -> float:
        return float(self.target.aadt)
