"""Module containing the value types used in odextract."""
import enum
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

__all__ = ("Side", "Territory", "ODPair", "ODContext", "ExtractionManifest")


class Side(enum.IntEnum):
    """Search side. The origin side sorts first on equal-time ties."""

    ORIGIN = 0
    DESTINATION = 1

    def __str__(self) -> str:
        return "O" if self is Side.ORIGIN else "D"


class Territory(NamedTuple):
    """Result of the competitive two-source search.

    Attributes
    ----------
    origins : Dict[int, float]
        Feature-carrying origin-side nodes and their time to ``u``.
    destinations : Dict[int, float]
        Feature-carrying destination-side nodes and their time from ``v``.
    winners : Dict[int, Side]
        Every claimed node, including pass-through nodes without features.
    arrivals : Dict[int, float]
        Claim time of every claimed node.
    predecessors : Optional[Tuple[Dict[int, int], Dict[int, int]]]
        Origin-side and destination-side predecessor maps, if requested.

    """

    origins: Dict[int, float]
    destinations: Dict[int, float]
    winners: Dict[int, Side]
    arrivals: Dict[int, float]
    predecessors: Optional[Tuple[Dict[int, int], Dict[int, int]]] = None


class ODPair(NamedTuple):
    """A screened origin-destination pair."""

    origin: int
    destination: int
    t_origin: float
    t_destination: float
    travel_time: float


class ODContext:
    """Everything extracted for one target edge.

    This is the unit persisted per target by the context store.
    """

    __slots__ = (
        "target_edge_id",
        "u",
        "v",
        "target_time_s",
        "cutoff_s",
        "epsilon_s",
        "graph_checksum",
        "extraction_hash",
        "origins",
        "destinations",
        "pairs",
    )

    def __init__(
        self,
        *,
        target_edge_id: int,
        u: int,
        v: int,
        target_time_s: float,
        cutoff_s: float,
        epsilon_s: float,
        graph_checksum: str,
        origins: Dict[int, float],
        destinations: Dict[int, float],
        pairs: List[ODPair],
        extraction_hash: str = "",
    ):
        self.target_edge_id = target_edge_id
        self.u = u
        self.v = v
        self.target_time_s = target_time_s
        self.cutoff_s = cutoff_s
        self.epsilon_s = epsilon_s
        self.graph_checksum = graph_checksum
        self.extraction_hash = extraction_hash
        self.origins = origins
        self.destinations = destinations
        self.pairs = pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def pair_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Get origin nodes, destination nodes and travel times as arrays."""
        origins = np.array([p.origin for p in self.pairs], dtype=np.int64)
        destinations = np.array([p.destination for p in self.pairs], dtype=np.int64)
        times = np.array([p.travel_time for p in self.pairs], dtype=float)
        return origins, destinations, times

    def to_dict(self) -> Dict[str, Any]:
        """Return this context as a JSON-serializable dict."""
        return {
            "header": {
                "target_edge_id": self.target_edge_id,
                "u": self.u,
                "v": self.v,
                "target_time_s": self.target_time_s,
                "cutoff_s": self.cutoff_s,
                "epsilon_s": self.epsilon_s,
                "graph_checksum": self.graph_checksum,
                "extraction_hash": self.extraction_hash,
            },
            "origins": [[n, t] for n, t in self.origins.items()],
            "destinations": [[n, t] for n, t in self.destinations.items()],
            "pairs": [list(p) for p in self.pairs],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ODContext":
        header = data["header"]
        return cls(
            target_edge_id=int(header["target_edge_id"]),
            u=int(header["u"]),
            v=int(header["v"]),
            target_time_s=float(header["target_time_s"]),
            cutoff_s=float(header["cutoff_s"]),
            epsilon_s=float(header["epsilon_s"]),
            graph_checksum=str(header["graph_checksum"]),
            extraction_hash=str(header.get("extraction_hash", "")),
            origins={int(n): float(t) for n, t in data["origins"]},
            destinations={int(n): float(t) for n, t in data["destinations"]},
            pairs=[
                ODPair(int(o), int(d), float(to), float(td), float(t))
                for o, d, to, td, t in data["pairs"]
            ],
        )

    def __repr__(self) -> str:
        return (
            f"<ODContext edge={self.target_edge_id} origins={len(self.origins)} "
            f"destinations={len(self.destinations)} pairs={len(self.pairs)}>"
        )


class ExtractionManifest(NamedTuple):
    """Outcome of a batch extraction."""

    written: List[int]
    skipped: List[int]
    failed: Dict[int, str]
    pair_counts: Dict[int, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "written": len(self.written),
            "skipped": len(self.skipped),
            "failed": len(self.failed),
            "summary": (
                f"wrote {len(self.written)}, skipped {len(self.skipped)} existing, "
                f"failed {len(self.failed)}"
            ),
            "failures": {str(k): v for k, v in sorted(self.failed.items())},
            "pair_counts": {str(k): v for k, v in sorted(self.pair_counts.items())},
        }
