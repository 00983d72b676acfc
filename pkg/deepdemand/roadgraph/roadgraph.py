"""Module for the directed road network."""
import hashlib
import logging
import math
import pathlib
import re
from typing import (
    Dict,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import networkx as nx
import numpy as np
import pandas as pd

from .errors import EdgeNotFound, InvalidEdges
from .types import MPH_TO_MPS, Edge, RoadClass, TargetEdge

__all__ = (
    "RoadGraph",
    "assign_travel_times",
    "parse_speed_mph",
    "load_targets",
    "write_targets",
)

log = logging.getLogger("deepdemand.roadgraph")

PathLike = Union[str, pathlib.Path]
Adjacency = Dict[int, Tuple[Tuple[int, float], ...]]

EDGE_COLUMNS = ("edge_id", "u", "v", "length_m", "highway_class", "maxspeed_mph", "region")
NODE_COLUMNS = ("node_id", "x_m", "y_m")
TARGET_COLUMNS = ("edge_id", "aadt", "region")

_SPEED_RE = re.compile(
    r"^\s*(?P<value>\d+(?:\.\d+)?)\s*(?P<unit>mph|km/h|kmh|kph)?\s*$", re.IGNORECASE
)
_KMH_TO_MPH = 1 / 1.609344


class RoadGraph:
    """A directed multigraph of junctions and road segments.

    The graph is treated as immutable once constructed: derived graphs
    (for instance with travel times assigned) are new objects. Parallel
    edges between the same pair of nodes are distinguished by edge id.

    Parameters
    ----------
    nodes : Mapping[int, Tuple[float, float]]
        Node ids mapped to projected planar coordinates in meters.
    edges : Iterable[Edge]
        The directed edges.

    Raises
    ------
    InvalidEdges
        If any edge references a missing node, repeats an edge id, has a
        non-positive length or a non-positive travel time.

    """

    __slots__ = ("_coords", "_edges", "_nx", "_succ", "_pred", "_checksum")

    def __init__(self, nodes: Mapping[int, Tuple[float, float]], edges: Iterable[Edge]):
        self._coords: Dict[int, Tuple[float, float]] = {
            int(n): (float(x), float(y)) for n, (x, y) in sorted(nodes.items())
        }
        self._edges: Dict[int, Edge] = {}
        bad: List[int] = []
        for edge in edges:
            if (
                edge.edge_id in self._edges
                or edge.u not in self._coords
                or edge.v not in self._coords
                or not edge.length_m > 0
                or not math.isfinite(edge.length_m)
                or (edge.travel_time_s is not None and not edge.travel_time_s > 0)
            ):
                bad.append(edge.edge_id)
                continue
            self._edges[edge.edge_id] = edge
        if bad:
            raise InvalidEdges(bad)

        graph = nx.MultiDiGraph()
        for node, (x, y) in self._coords.items():
            graph.add_node(node, x=x, y=y)
        for edge in self._edges.values():
            graph.add_edge(
                edge.u,
                edge.v,
                key=edge.edge_id,
                travel_time=edge.travel_time_s,
                length=edge.length_m,
                highway=str(edge.road_class),
            )
        self._nx: nx.MultiDiGraph = graph
        self._succ: Optional[Adjacency] = None
        self._pred: Optional[Adjacency] = None
        self._checksum: Optional[str] = None

    @classmethod
    def from_files(cls, edges_path: PathLike, nodes_path: PathLike) -> "RoadGraph":
        """Load a graph from an edge-list file and a node file.

        Edge file columns are ``edge_id,u,v,length_m,highway_class`` followed by
        the optional ``maxspeed_mph`` and ``region``. Node file columns are
        ``node_id,x_m,y_m``.
        """
        node_frame = pd.read_csv(nodes_path)
        edge_frame = pd.read_csv(
            edges_path, dtype={"maxspeed_mph": str, "region": str, "highway_class": str}
        )
        missing = [c for c in EDGE_COLUMNS[:5] if c not in edge_frame.columns]
        missing += [c for c in NODE_COLUMNS if c not in node_frame.columns]
        if missing:
            raise InvalidEdges([], f"Missing columns: {', '.join(missing)}")

        node_values = node_frame[list(NODE_COLUMNS)].apply(pd.to_numeric, errors="coerce")
        unreadable = _bad_rows(
            node_values.isna().any(axis=1) | (node_values["node_id"] % 1 != 0)
        )
        if unreadable:
            raise InvalidEdges([], f"Non-numeric node values on data rows {unreadable}.")
        nodes = {
            int(row.node_id): (float(row.x_m), float(row.y_m))
            for row in node_values.itertuples(index=False)
        }

        # unparsable lengths become NaN and are rejected with their edge ids
        numbers = edge_frame[["edge_id", "u", "v", "length_m"]].apply(
            pd.to_numeric, errors="coerce"
        )
        unreadable = _bad_rows(numbers["edge_id"] % 1 != 0)
        if unreadable:
            raise InvalidEdges([], f"Non-integer edge ids on data rows {unreadable}.")
        dangling = (numbers["u"] % 1 != 0) | (numbers["v"] % 1 != 0)
        if dangling.any():
            raise InvalidEdges(numbers.loc[dangling, "edge_id"].astype(int).tolist())

        maxspeeds = _optional_column(edge_frame, "maxspeed_mph")
        regions = _optional_column(edge_frame, "region")
        edges = [
            Edge(
                edge_id=int(number.edge_id),
                u=int(number.u),
                v=int(number.v),
                length_m=float(number.length_m),
                road_class=RoadClass.parse(_none_if_nan(row.highway_class)),
                maxspeed=maxspeed,
                region=region,
            )
            for row, number, maxspeed, region in zip(
                edge_frame.itertuples(index=False),
                numbers.itertuples(index=False),
                maxspeeds,
                regions,
            )
        ]
        return cls(nodes, edges)

    def to_files(self, edges_path: PathLike, nodes_path: PathLike) -> None:
        """Write this graph in the format read by `from_files`."""
        pd.DataFrame(
            [(n, x, y) for n, (x, y) in self._coords.items()], columns=NODE_COLUMNS
        ).to_csv(nodes_path, index=False)
        pd.DataFrame(
            [
                (
                    e.edge_id,
                    e.u,
                    e.v,
                    repr(e.length_m),
                    str(e.road_class),
                    e.maxspeed or "",
                    e.region or "",
                )
                for e in self._edges.values()
            ],
            columns=EDGE_COLUMNS,
        ).to_csv(edges_path, index=False)

    @property
    def nx_graph(self) -> nx.MultiDiGraph:
        """(nx.MultiDiGraph) : The underlying graph. Do not mutate it."""
        return self._nx

    @property
    def nodes(self) -> Sequence[int]:
        """(Sequence[int]) : Node ids in ascending order."""
        return list(self._coords)

    @property
    def edges(self) -> Mapping[int, Edge]:
        """(Mapping[int, Edge]) : Edges keyed by edge id."""
        return self._edges

    def __len__(self) -> int:
        return len(self._coords)

    def __contains__(self, node: object) -> bool:
        return node in self._coords

    def coordinates(self, node: int) -> Tuple[float, float]:
        return self._coords[node]

    def coordinate_array(self) -> Tuple[np.ndarray, np.ndarray]:
        """Get node ids (ascending) and an ``(N, 2)`` array of coordinates."""
        ids = np.fromiter(self._coords.keys(), dtype=np.int64, count=len(self._coords))
        xy = np.array(list(self._coords.values()), dtype=float).reshape(-1, 2)
        return ids, xy

    def edge(self, edge_id: int) -> Edge:
        """Get an edge by its id.

        Raises
        ------
        EdgeNotFound
            If there is no such edge.

        """
        try:
            return self._edges[edge_id]
        except KeyError:
            raise EdgeNotFound(edge_id) from None

    @property
    def has_travel_times(self) -> bool:
        """(bool) : Whether every edge carries a travel time."""
        return all(e.travel_time_s is not None for e in self._edges.values())

    def successors(self, node: int) -> Tuple[Tuple[int, float], ...]:
        """Out-neighbours of a node as ``(head, travel_time)`` per edge."""
        if self._succ is None:
            self._build_adjacency()
        return self._succ.get(node, ())

    def predecessors(self, node: int) -> Tuple[Tuple[int, float], ...]:
        """In-neighbours of a node as ``(tail, travel_time)`` per edge."""
        if self._pred is None:
            self._build_adjacency()
        return self._pred.get(node, ())

    def _build_adjacency(self) -> None:
        if not self.has_travel_times:
            raise InvalidEdges(
                [e.edge_id for e in self._edges.values() if e.travel_time_s is None],
                "Travel times have not been assigned.",
            )
        succ: Dict[int, List[Tuple[int, float]]] = {}
        pred: Dict[int, List[Tuple[int, float]]] = {}
        # edge-id order keeps relaxation order reproducible
        for edge_id in sorted(self._edges):
            edge = self._edges[edge_id]
            succ.setdefault(edge.u, []).append((edge.v, edge.travel_time_s))
            pred.setdefault(edge.v, []).append((edge.u, edge.travel_time_s))
        self._succ = {k: tuple(v) for k, v in succ.items()}
        self._pred = {k: tuple(v) for k, v in pred.items()}

    def checksum(self) -> str:
        """Get a SHA-256 digest of the nodes and edges, as hex."""
        if self._checksum is None:
            digest = hashlib.sha256()
            for node, (x, y) in self._coords.items():
                digest.update(f"n,{node},{x!r},{y!r}\n".encode())
            for edge_id in sorted(self._edges):
                e = self._edges[edge_id]
                digest.update(
                    f"e,{e.edge_id},{e.u},{e.v},{e.length_m!r},{e.road_class},"
                    f"{e.maxspeed or ''},{e.travel_time_s!r}\n".encode()
                )
            self._checksum = digest.hexdigest()
        return self._checksum

    def target(
        self, edge_id: int, aadt: Optional[float] = None, region: Optional[str] = None
    ) -> TargetEdge:
        """Build a `TargetEdge` for one of this graph's edges."""
        edge = self.edge(edge_id)
        if edge.travel_time_s is None:
            raise InvalidEdges([edge_id], "Travel times have not been assigned.")
        return TargetEdge(
            edge_id=edge.edge_id,
            u=edge.u,
            v=edge.v,
            travel_time_s=edge.travel_time_s,
            aadt=aadt,
            region=region if region is not None else edge.region,
            road_class=edge.road_class,
        )

    def __repr__(self) -> str:
        return f"<RoadGraph nodes={len(self._coords)} edges={len(self._edges)}>"


def parse_speed_mph(value: Optional[str]) -> Optional[float]:
    """Parse a posted speed into mph.

    Bare numbers are taken as mph; ``km/h``, ``kmh`` and ``kph`` suffixes
    are converted.

    Returns
    -------
    Optional[float]
        ``None`` if the value is missing, unparsable or not positive.

    """
    if value is None:
        return None
    match = _SPEED_RE.match(str(value))
    if match is None:
        return None
    speed = float(match["value"])
    unit = (match["unit"] or "mph").lower()
    if unit != "mph":
        speed *= _KMH_TO_MPH
    return speed if speed > 0 else None


def assign_travel_times(graph: RoadGraph) -> RoadGraph:
    """Assign a travel time to every edge from its length and speed.

    The posted speed is used when valid, otherwise the fallback speed of the
    edge's road class. Unparsable posted speeds are logged and fall back.

    Returns
    -------
    RoadGraph
        A new graph in which every edge has ``travel_time_s``.

    """
    edges: List[Edge] = []
    for edge in graph.edges.values():
        mph = parse_speed_mph(edge.maxspeed)
        if mph is None:
            if edge.maxspeed not in (None, ""):
                log.warning(
                    "Edge %s has unusable posted speed %r, using the %s fallback.",
                    edge.edge_id,
                    edge.maxspeed,
                    edge.road_class,
                )
            mph = edge.road_class.fallback_mph
        edges.append(edge._replace(travel_time_s=edge.length_m / (mph * MPH_TO_MPS)))
    return RoadGraph({n: graph.coordinates(n) for n in graph.nodes}, edges)


def load_targets(path: PathLike, graph: RoadGraph) -> List[TargetEdge]:
    """Load target edges with ground truth from ``edge_id,aadt,region``.

    Raises
    ------
    InvalidEdges
        If an edge id is unknown or an observed volume is negative.

    """
    frame = pd.read_csv(path, dtype={"region": str})
    if "edge_id" not in frame.columns:
        raise InvalidEdges([], "Missing column: edge_id")
    aadts = _optional_column(frame, "aadt")
    regions = _optional_column(frame, "region")
    bad: List[int] = []
    targets: List[TargetEdge] = []
    for edge_id, aadt, region in zip(frame["edge_id"], aadts, regions):
        edge_id = int(edge_id)
        y = None if aadt is None else float(aadt)
        if edge_id not in graph.edges or (y is not None and y < 0):
            bad.append(edge_id)
            continue
        targets.append(graph.target(edge_id, aadt=y, region=region))
    if bad:
        raise InvalidEdges(bad)
    return targets


def write_targets(path: PathLike, targets: Iterable[TargetEdge]) -> None:
    """Write target edges in the format read by `load_targets`."""
    pd.DataFrame(
        [
            (t.edge_id, "" if t.aadt is None else repr(t.aadt), t.region or "")
            for t in targets
        ],
        columns=TARGET_COLUMNS,
    ).to_csv(path, index=False)


def _bad_rows(mask: pd.Series) -> str:
    # 1-based data row numbers, at most 20
    rows = [str(i + 1) for i in mask.to_numpy().nonzero()[0]]
    return ", ".join(rows[:20]) + (f" (+{len(rows) - 20})" if len(rows) > 20 else "")


def _optional_column(frame: pd.DataFrame, column: str) -> Iterator[Optional[str]]:
    if column not in frame.columns:
        return iter([None] * len(frame))
    return (_none_if_nan(v) for v in frame[column])


def _none_if_nan(value: object) -> Optional[str]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    value = str(value).strip()
    return value or None
