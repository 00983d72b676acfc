"""Local OD region extraction and OD pair screening."""
import heapq
import logging
import math
import pathlib
from concurrent.futures import ProcessPoolExecutor
from typing import (
    AbstractSet,
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import networkx as nx

from ..roadgraph import RoadGraph, TargetEdge
from .errors import InvalidParameter, InvalidTarget
from .store import ContextStore
from .types import ExtractionManifest, ODContext, ODPair, Side, Territory

__all__ = (
    "DEFAULT_CUTOFF_S",
    "DEFAULT_EPSILON_S",
    "two_source_dijkstra",
    "screen_od_pairs",
    "extract_context",
    "extract_all",
    "territory_path",
)

log = logging.getLogger("deepdemand.odextract")

PathLike = Union[str, pathlib.Path]

DEFAULT_CUTOFF_S = 3600.0
DEFAULT_EPSILON_S = 1e-6


def _validate_target(graph: RoadGraph, target: TargetEdge) -> float:
    edge = graph.edges.get(target.edge_id)
    if edge is None:
        raise InvalidTarget(target.edge_id, "edge is not in the graph")
    if edge.u == edge.v:
        raise InvalidTarget(target.edge_id, "self-loop targets have no OD territories")
    if edge.travel_time_s is None:
        raise InvalidTarget(target.edge_id, "travel times have not been assigned")
    return edge.travel_time_s


def two_source_dijkstra(
    graph: RoadGraph,
    target: TargetEdge,
    cutoff_s: float = DEFAULT_CUTOFF_S,
    *,
    feature_nodes: Optional[AbstractSet[int]] = None,
    predecessors: bool = False,
) -> Territory:
    """Partition the network around a target edge into O and D territories.

    Both searches share one priority queue ordered by ``(time, side, node)``,
    the origin side sorting first. The origin side expands reversed edges
    from ``u``, the destination side original edges from ``v``. The first
    side to settle a node claims it for good; claimed nodes are never
    relaxed by the other side. Popped entries for claimed nodes are skipped.

    Parameters
    ----------
    graph : RoadGraph
        The weighted network.
    target : TargetEdge
        The target edge ``(u, v)``.
    cutoff_s : float
        Travel-time cutoff for both sides.
    feature_nodes : Optional[AbstractSet[int]]
        Nodes allowed in the returned origin/destination sets. ``None``
        means every node qualifies.
    predecessors : bool
        Whether to record predecessor maps.

    Returns
    -------
    Territory
        The partition. ``u`` is always claimed by the origin side and ``v``
        by the destination side.

    Raises
    ------
    InvalidTarget
        If the edge is missing, a self-loop, or unweighted.
    InvalidParameter
        If the cutoff is negative or not a number.

    """
    _validate_target(graph, target)
    if not cutoff_s >= 0:
        raise InvalidParameter(f"Cutoff must be non-negative, got {cutoff_s}.")
    edge = graph.edge(target.edge_id)
    u, v = edge.u, edge.v

    expand: Tuple[Callable[[int], Tuple[Tuple[int, float], ...]], ...] = (
        graph.predecessors,
        graph.successors,
    )
    tentative: Tuple[Dict[int, float], Dict[int, float]] = ({u: 0.0}, {v: 0.0})
    preds: Tuple[Dict[int, int], Dict[int, int]] = ({}, {})
    winners: Dict[int, Side] = {}
    arrivals: Dict[int, float] = {}
    queue: List[Tuple[float, int, int]] = [(0.0, Side.ORIGIN, u), (0.0, Side.DESTINATION, v)]
    heapq.heapify(queue)

    while queue:
        t, side, i = heapq.heappop(queue)
        if t > cutoff_s or i in winners:
            continue
        winners[i] = Side(side)
        arrivals[i] = t
        best = tentative[side]
        for j, t_ij in expand[side](i):
            if j in winners:
                continue
            t_j = t + t_ij
            if t_j <= cutoff_s and t_j < best.get(j, math.inf):
                best[j] = t_j
                if predecessors:
                    preds[side][j] = i
                heapq.heappush(queue, (t_j, side, j))

    def _keep(node: int) -> bool:
        return feature_nodes is None or node in feature_nodes

    origins = {
        n: arrivals[n]
        for n in sorted(winners)
        if winners[n] is Side.ORIGIN and _keep(n)
    }
    destinations = {
        n: arrivals[n]
        for n in sorted(winners)
        if winners[n] is Side.DESTINATION and _keep(n)
    }
    return Territory(
        origins=origins,
        destinations=destinations,
        winners=winners,
        arrivals=arrivals,
        predecessors=preds if predecessors else None,
    )


def territory_path(territory: Territory, node: int) -> List[int]:
    """Reconstruct the search route for a claimed node.

    For an origin-side node this is the route from the node to ``u``; for
    a destination-side node, the route from ``v`` to the node.
    """
    if territory.predecessors is None:
        raise InvalidParameter("The territory was extracted without predecessors.")
    side = territory.winners[node]
    pred = territory.predecessors[side]
    path = [node]
    while path[-1] in pred:
        path.append(pred[path[-1]])
    return path if side is Side.ORIGIN else path[::-1]


def screen_od_pairs(
    graph: RoadGraph,
    target: TargetEdge,
    territory: Territory,
    epsilon_s: float = DEFAULT_EPSILON_S,
) -> List[ODPair]:
    """Keep the OD pairs whose fastest route runs through the target edge.

    A pair ``(o, d)`` is kept iff the unconstrained shortest time from ``o``
    to ``d`` is within ``epsilon_s`` of ``t_O(o) + t_e + t_D(d)``. One
    bounded Dijkstra is run per origin, covering every destination.

    Returns
    -------
    List[ODPair]
        Retained pairs sorted by ``(origin, destination)``, each carrying
        ``t_O(o) + t_e + t_D(d)`` as its travel time.

    """
    t_target = _validate_target(graph, target)
    if not epsilon_s >= 0:
        raise InvalidParameter(f"Epsilon must be non-negative, got {epsilon_s}.")
    if not territory.origins or not territory.destinations:
        return []

    destinations = sorted(territory.destinations.items())
    max_t_d = max(t for _, t in destinations)
    pairs: List[ODPair] = []
    for o, t_o in sorted(territory.origins.items()):
        radius = t_o + t_target + max_t_d + epsilon_s
        dist = nx.single_source_dijkstra_path_length(
            graph.nx_graph, o, cutoff=radius, weight="travel_time"
        )
        for d, t_d in destinations:
            through = t_o + t_target + t_d
            t_od = dist.get(d)
            if t_od is not None and abs(through - t_od) <= epsilon_s:
                pairs.append(ODPair(o, d, t_o, t_d, through))
    return pairs


def extract_context(
    graph: RoadGraph,
    target: TargetEdge,
    cutoff_s: float = DEFAULT_CUTOFF_S,
    epsilon_s: float = DEFAULT_EPSILON_S,
    *,
    feature_nodes: Optional[AbstractSet[int]] = None,
    extraction_hash: str = "",
) -> ODContext:
    """Run the competitive search and screening for one target."""
    territory = two_source_dijkstra(graph, target, cutoff_s, feature_nodes=feature_nodes)
    pairs = screen_od_pairs(graph, target, territory, epsilon_s)
    edge = graph.edge(target.edge_id)
    return ODContext(
        target_edge_id=edge.edge_id,
        u=edge.u,
        v=edge.v,
        target_time_s=edge.travel_time_s,
        cutoff_s=float(cutoff_s),
        epsilon_s=float(epsilon_s),
        graph_checksum=graph.checksum(),
        extraction_hash=extraction_hash,
        origins=territory.origins,
        destinations=territory.destinations,
        pairs=pairs,
    )


# Per-process state for worker pools; set by _init_worker.
_worker_state: Optional[tuple] = None


def _init_worker(
    graph: RoadGraph,
    feature_nodes: Optional[AbstractSet[int]],
    cutoff_s: float,
    epsilon_s: float,
    directory: str,
    extraction_hash: str,
) -> None:
    global _worker_state
    _worker_state = (graph, feature_nodes, cutoff_s, epsilon_s, directory, extraction_hash)


def _extract_one(target: TargetEdge) -> Tuple[int, Optional[int], Optional[str]]:
    graph, feature_nodes, cutoff_s, epsilon_s, directory, extraction_hash = _worker_state
    try:
        context = extract_context(
            graph,
            target,
            cutoff_s,
            epsilon_s,
            feature_nodes=feature_nodes,
            extraction_hash=extraction_hash,
        )
        ContextStore(directory).write(context)
    except Exception as exc:  # recorded per target, the batch carries on
        return target.edge_id, None, f"{type(exc).__name__}: {exc}"
    return target.edge_id, len(context.pairs), None


def extract_all(
    graph: RoadGraph,
    targets: Sequence[TargetEdge],
    out_dir: PathLike,
    cutoff_s: float = DEFAULT_CUTOFF_S,
    epsilon_s: float = DEFAULT_EPSILON_S,
    *,
    workers: int = 1,
    feature_nodes: Optional[AbstractSet[int]] = None,
    extraction_hash: str = "",
) -> ExtractionManifest:
    """Extract and persist contexts for many targets.

    Targets whose context file already exists are skipped, so an
    interrupted batch can be resumed by running it again. Failures are
    recorded per target without aborting the batch.

    Parameters
    ----------
    workers : int
        Number of worker processes. ``1`` runs in this process.

    Returns
    -------
    ExtractionManifest
        Written, skipped and failed targets with per-target pair counts.

    """
    if not targets:
        raise InvalidParameter("No target edges to extract.")
    if workers < 1:
        raise InvalidParameter(f"Workers must be at least 1, got {workers}.")
    store = ContextStore(out_dir)
    store.directory.mkdir(parents=True, exist_ok=True)

    pending: List[TargetEdge] = []
    skipped: List[int] = []
    for target in targets:
        (skipped if target.edge_id in store else pending).append(target)
    if skipped:
        log.info("Skipping %d targets with existing contexts.", len(skipped))

    init_args = (
        graph,
        feature_nodes,
        cutoff_s,
        epsilon_s,
        str(store.directory),
        extraction_hash,
    )
    if workers == 1 or len(pending) <= 1:
        _init_worker(*init_args)
        results = [_extract_one(t) for t in pending]
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=init_args
        ) as pool:
            results = list(pool.map(_extract_one, pending, chunksize=1))

    written: List[int] = []
    failed: Dict[int, str] = {}
    pair_counts: Dict[int, int] = {}
    for edge_id, n_pairs, error in results:
        if error is not None:
            log.error("Extraction failed for edge %s: %s", edge_id, error)
            failed[edge_id] = error
        else:
            written.append(edge_id)
            pair_counts[edge_id] = n_pairs
            log.debug("Edge %s: %d screened pairs.", edge_id, n_pairs)
    return ExtractionManifest(
        written=written, skipped=skipped, failed=failed, pair_counts=pair_counts
    )
