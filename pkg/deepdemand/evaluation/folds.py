"""Fold plans for random and spatial cross-validation."""
from typing import Dict, Optional, Sequence

import numpy as np

from ..roadgraph import TargetEdge
from .errors import InvalidProtocol, MissingRegions
from .types import FoldPlan, Protocol

__all__ = ("make_folds",)


def make_folds(
    targets: Sequence[TargetEdge],
    protocol="random",
    k: int = 5,
    seed: Optional[int] = 0,
) -> FoldPlan:
    """Assign target edges to test folds.

    The random protocol shuffles the edges (sorted by id) with ``seed`` and
    stripes them over ``k`` folds, so fold sizes differ by at most one. The
    spatial protocol makes one fold per distinct region label.

    Raises
    ------
    InvalidProtocol
        For an unknown protocol, fewer than two folds, or no targets.
    MissingRegions
        Under the spatial protocol, if any target has no region.

    """
    protocol = Protocol.parse(protocol)
    if not targets:
        raise InvalidProtocol("No target edges to split into folds.")
    edge_ids = sorted({t.edge_id for t in targets})

    if protocol is Protocol.spatial:
        unlabeled = [t.edge_id for t in targets if not t.region]
        if unlabeled:
            raise MissingRegions(unlabeled)
        regions = sorted({str(t.region) for t in targets})
        if len(regions) < 2:
            raise InvalidProtocol(
                f"Spatial cross-validation needs at least 2 regions, got {regions}."
            )
        assignment = {t.edge_id: str(t.region) for t in targets}
        return FoldPlan(protocol, assignment, k=len(regions), regions=regions)

    if k < 2:
        raise InvalidProtocol(f"Random cross-validation needs k >= 2, got {k}.")
    order = np.random.default_rng(seed).permutation(len(edge_ids))
    assignment: Dict[int, str] = {
        edge_ids[idx]: str(pos % k) for pos, idx in enumerate(order)
    }
    return FoldPlan(protocol, assignment, k=k, seed=seed)
