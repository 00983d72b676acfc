"""Frozen random models that generate synthetic observed volumes."""
from typing import List, Mapping, Sequence

import numpy as np

from ..featurebank import FeatureBank
from ..odextract import ODContext
from ..roadgraph import TargetEdge
from .demandmodel import ModelParams, predict_edge
from .types import ModelConfig

__all__ = ("planted_params", "plant_volumes")

# planted models draw from their own stream, never equal to a training init
PLANTED_STREAM = 2


def planted_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Draw random parameters whose deterrence strictly decreases with time.

    For the ``mlp`` and ``logit`` forms every deterrence weight is made
    positive except the last layer's, which is made negative; with monotone
    activations the logit is then decreasing in travel time. The
    ``exponential`` form decreases for any rate.
    """
    params = ModelParams.init(config, [seed, PLANTED_STREAM])
    if params.f_time is not None:
        weights = params.f_time.weights
        for w in weights[:-1]:
            np.abs(w, out=w)
            w += 0.1
        np.abs(weights[-1], out=weights[-1])
        weights[-1] *= -1.0
        weights[-1] -= 0.1
    return params


def plant_volumes(
    params: ModelParams,
    targets: Sequence[TargetEdge],
    contexts: Mapping[int, ODContext],
    bank: FeatureBank,
    *,
    noise: float = 0.05,
    seed: int = 0,
) -> List[TargetEdge]:
    """Set each target's volume to ``yhat * (1 + eta)``, ``eta ~ N(0, noise)``.

    Volumes are floored at 0. Targets without a context are returned as is.
    """
    rng = np.random.default_rng(seed)
    planted = []
    for target in sorted(targets, key=lambda t: t.edge_id):
        context = contexts.get(target.edge_id)
        if context is None:
            planted.append(target)
            continue
        yhat = predict_edge(params, context, bank)
        y = max(0.0, yhat * (1.0 + noise * float(rng.standard_normal())))
        planted.append(target._replace(aadt=round(y, 6)))
    return planted
