"""Deterministic synthetic road networks for desk-scale runs and tests."""
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import InvalidSyntheticSpec
from .roadgraph import RoadGraph, assign_travel_times
from .types import Edge, RoadClass, SyntheticSpec, TargetEdge

__all__ = (
    "SyntheticAreas",
    "generate_synthetic_network",
    "spine_rows",
    "synthetic_areas",
)

POPULATION_COLUMN = "population"


class SyntheticAreas(NamedTuple):
    """Raw feature table and centroid table planted on a synthetic network."""

    features: pd.DataFrame
    centroids: pd.DataFrame


def spine_rows(size: int, count: int) -> List[int]:
    """Get the grid rows carrying the motorway spine."""
    count = max(1, min(count, size))
    return sorted({min(size - 1, int((i + 1) * size / (count + 1))) for i in range(count)})


def generate_synthetic_network(spec: SyntheticSpec) -> Tuple[RoadGraph, List[TargetEdge]]:
    """Generate a square grid network with a motorway spine.

    Node ``r * size + c`` sits near ``(c * spacing, r * spacing)``. Every pair
    of horizontally or vertically adjacent nodes is joined in both
    directions, so a grid of size ``n`` has ``n**2`` nodes and
    ``4n(n-1)`` directed edges. The same spec always yields the same graph.

    Raises
    ------
    InvalidSyntheticSpec
        If ``size < 2`` or the class mix is empty.

    """
    n = spec.size
    if n < 2:
        raise InvalidSyntheticSpec(f"Grid size must be at least 2, got {n}.")
    classes = [RoadClass.parse(name) for name, _ in spec.class_mix]
    weights = np.array([w for _, w in spec.class_mix], dtype=float)
    if not classes or weights.sum() <= 0 or (weights < 0).any():
        raise InvalidSyntheticSpec("The class mix needs at least one positive weight.")
    weights /= weights.sum()

    rng = np.random.default_rng(spec.seed)
    jitter = rng.uniform(-spec.jitter_m, spec.jitter_m, size=(n * n, 2))
    nodes: Dict[int, Tuple[float, float]] = {}
    for r in range(n):
        for c in range(n):
            node = r * n + c
            nodes[node] = (
                c * spec.spacing_m + float(jitter[node, 0]),
                r * spec.spacing_m + float(jitter[node, 1]),
            )

    spines = set(spine_rows(n, spec.spine_rows))
    width = (n - 1) * spec.spacing_m
    edges: List[Edge] = []
    target_ids: List[int] = []

    def _add(a: int, b: int, road_class: RoadClass, region: str) -> int:
        edge_id = len(edges)
        (xa, ya), (xb, yb) = nodes[a], nodes[b]
        edges.append(
            Edge(
                edge_id=edge_id,
                u=a,
                v=b,
                length_m=float(np.hypot(xb - xa, yb - ya)),
                road_class=road_class,
                region=region,
            )
        )
        return edge_id

    for r in range(n):
        for c in range(n):
            a = r * n + c
            if c + 1 < n:
                b = a + 1
                region = _region(nodes[a][0] + nodes[b][0], width, spec.n_regions)
                if r in spines:
                    forward = _add(a, b, RoadClass.motorway, region)
                    backward = _add(b, a, RoadClass.motorway, region)
                    target_ids.append(forward)
                    if spec.both_directions:
                        target_ids.append(backward)
                else:
                    road_class = classes[rng.choice(len(classes), p=weights)]
                    _add(a, b, road_class, region)
                    _add(b, a, road_class, region)
            if r + 1 < n:
                b = a + n
                region = _region(2 * nodes[a][0], width, spec.n_regions)
                road_class = classes[rng.choice(len(classes), p=weights)]
                _add(a, b, road_class, region)
                _add(b, a, road_class, region)

    graph = assign_travel_times(RoadGraph(nodes, edges))
    targets = [graph.target(edge_id) for edge_id in target_ids]
    return graph, targets


def _region(twice_x: float, width: float, n_regions: int) -> str:
    if width <= 0 or n_regions <= 1:
        return "R0"
    band = int(0.5 * twice_x / width * n_regions)
    return f"R{min(max(band, 0), n_regions - 1)}"


def synthetic_areas(
    graph: RoadGraph,
    *,
    fraction: float = 0.5,
    n_features: int = 12,
    n_latent: int = 3,
    seed: int = 0,
) -> SyntheticAreas:
    """Plant area units on a fraction of the graph's nodes.

    Each area's centroid sits exactly on its node, so attachment recovers
    the planting. Features are a noisy linear image of a few latent factors;
    the first column is a positive population count usable as gravity mass.

    Returns
    -------
    SyntheticAreas
        ``features`` has columns ``area_id`` and ``population``, ``f01``..;
        ``centroids`` has ``area_id,x_m,y_m,land_area_km2``.

    """
    if not 0 < fraction <= 1:
        raise InvalidSyntheticSpec(f"Area fraction must be in (0, 1], got {fraction}.")
    rng = np.random.default_rng(seed)
    node_ids: Sequence[int] = graph.nodes
    count = max(2, int(round(fraction * len(node_ids))))
    chosen = np.sort(rng.choice(len(node_ids), size=min(count, len(node_ids)), replace=False))
    area_ids = [f"A{i:05d}" for i in range(len(chosen))]

    latent = rng.normal(size=(len(chosen), n_latent))
    mixing = rng.normal(size=(n_latent, n_features - 1))
    values = latent @ mixing + 0.1 * rng.normal(size=(len(chosen), n_features - 1))
    population = np.round(1000.0 * np.exp(0.5 * latent[:, 0])) + 50.0

    features = pd.DataFrame(values, columns=[f"f{j + 1:02d}" for j in range(n_features - 1)])
    features.insert(0, POPULATION_COLUMN, population)
    features.insert(0, "area_id", area_ids)

    coords = [graph.coordinates(node_ids[i]) for i in chosen]
    centroids = pd.DataFrame(
        {
            "area_id": area_ids,
            "x_m": [x for x, _ in coords],
            "y_m": [y for _, y in coords],
            "land_area_km2": rng.uniform(0.5, 3.0, size=len(chosen)),
        }
    )
    return SyntheticAreas(features, centroids)
