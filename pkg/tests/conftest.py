import itertools
from typing import Iterable, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import pytest

from deepdemand.demandmodel import ModelConfig
from deepdemand.featurebank import FeatureBank, attach_to_nodes, fit_transform
from deepdemand.odextract import extract_context
from deepdemand.roadgraph import (
    Edge,
    RoadClass,
    RoadGraph,
    SyntheticSpec,
    generate_synthetic_network,
    synthetic_areas,
)


def make_graph(
    arcs: Iterable[Tuple[int, int, float]],
    nodes: Optional[Mapping[int, Tuple[float, float]]] = None,
) -> RoadGraph:
    """Build a weighted graph from ``(u, v, travel_time)`` arcs, ids in order."""
    arcs = list(arcs)
    if nodes is None:
        ids = sorted({n for u, v, _ in arcs for n in (u, v)})
        nodes = {n: (100.0 * n, 0.0) for n in ids}
    edges = [
        Edge(i, u, v, 100.0, RoadClass.residential, travel_time_s=float(t))
        for i, (u, v, t) in enumerate(arcs)
    ]
    return RoadGraph(nodes, edges)


def random_graph(rng: np.random.Generator, n_nodes: int, p: float, symmetric: bool = False):
    """A random digraph with travel times drawn from U(1, 10).

    Edge 0 always joins node 0 to node 1 so it can serve as the target.
    """
    arcs = [(0, 1, float(rng.uniform(1.0, 10.0)))]
    for u, v in itertools.permutations(range(n_nodes), 2):
        if (u, v) in ((0, 1), (1, 0)) or (symmetric and u > v):
            continue
        if rng.random() < p:
            t = float(rng.uniform(1.0, 10.0))
            arcs.append((u, v, t))
            if symmetric:
                arcs.append((v, u, t))
    if symmetric:
        arcs.append((1, 0, arcs[0][2]))
    nodes = {n: (float(n), 0.0) for n in range(n_nodes)}
    return make_graph(arcs, nodes)


def small_model_config(k: int, **changes) -> ModelConfig:
    fields = dict(k=k, encoder_dims=(6, 4), od_dims=(5,), time_dims=(4,), gamma=10.0)
    fields.update(changes)
    return ModelConfig(**fields)


@pytest.fixture(scope="session")
def grid():
    """A 6x6 synthetic grid, its spine targets, areas and a fitted bank."""
    graph, targets = generate_synthetic_network(SyntheticSpec(size=6, seed=3))
    areas = synthetic_areas(graph, fraction=0.5, n_features=8, n_latent=2, seed=3)
    bank = attach_to_nodes(fit_transform(areas.features, 4), graph, areas.centroids)
    return graph, targets, areas, bank


@pytest.fixture(scope="session")
def grid_contexts(grid):
    graph, targets, _, bank = grid
    return {
        t.edge_id: extract_context(graph, t, 3600.0, feature_nodes=bank.feature_nodes)
        for t in targets
    }


@pytest.fixture
def toy_bank() -> FeatureBank:
    """Three areas with two features, attached to nodes 0, 1 and 2 of a line."""
    raw = pd.DataFrame(
        {
            "area_id": ["a", "b", "c"],
            "population": [100.0, 300.0, 200.0],
            "jobs": [10.0, 5.0, 40.0],
        }
    )
    centroids = pd.DataFrame(
        {
            "area_id": ["a", "b", "c"],
            "x_m": [0.0, 100.0, 200.0],
            "y_m": [0.0, 0.0, 0.0],
            "land_area_km2": [1.0, 2.0, 4.0],
        }
    )
    graph = make_graph([(0, 1, 10.0), (1, 2, 10.0), (2, 3, 10.0)])
    return attach_to_nodes(fit_transform(raw, 2), graph, centroids)
