"""Module containing the value types used in demandmodel."""
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .errors import InvalidModelConfig

__all__ = (
    "ACTIVATIONS",
    "OUTPUT_TRANSFORMS",
    "DETERRENCE_FORMS",
    "ModelConfig",
    "TrainConfig",
    "EdgeInputs",
    "Evaluation",
    "TrainingLog",
)

ACTIVATIONS = ("relu", "tanh")
OUTPUT_TRANSFORMS = ("sqrt", "identity", "log1p")
DETERRENCE_FORMS = ("mlp", "logit", "exponential")


class ModelConfig(NamedTuple):
    """Architecture and fixed constants of the demand model.

    Attributes
    ----------
    k : int
        Feature vector dimension.
    encoder_dims : Tuple[int, ...]
        Hidden and output widths of the origin and destination encoders.
    od_dims : Tuple[int, ...]
        Hidden widths of the OD scorer; a 1-unit head is appended.
    time_dims : Tuple[int, ...]
        Hidden widths of the deterrence network; a 1-unit head is appended.
    mu_s, scale_s : float
        Travel-time normalization ``(t - mu) / scale``.
    gamma : float
        Output scaling constant.
    output_transform : str
        One of `OUTPUT_TRANSFORMS`.
    hidden_activation : str
        Activation of the encoders and OD scorer.
    time_activation : str
        Activation of the deterrence network.
    deterrence_form : str
        ``mlp``, ``logit`` (affine logit) or ``exponential``.

    """

    k: int
    encoder_dims: Tuple[int, ...] = (16, 16)
    od_dims: Tuple[int, ...] = (16, 8)
    time_dims: Tuple[int, ...] = (16, 16)
    mu_s: float = 3600.0
    scale_s: float = 1000.0
    gamma: float = 100.0
    output_transform: str = "sqrt"
    hidden_activation: str = "relu"
    time_activation: str = "tanh"
    deterrence_form: str = "mlp"

    def validate(self) -> "ModelConfig":
        if self.k < 1 or not self.encoder_dims:
            raise InvalidModelConfig("k and encoder widths must be positive.")
        if any(d < 1 for d in (*self.encoder_dims, *self.od_dims, *self.time_dims)):
            raise InvalidModelConfig("Layer widths must be positive.")
        if self.hidden_activation not in ACTIVATIONS or self.time_activation not in ACTIVATIONS:
            raise InvalidModelConfig(f"Activations must be one of {ACTIVATIONS}.")
        if self.output_transform not in OUTPUT_TRANSFORMS:
            raise InvalidModelConfig(f"Output transform must be one of {OUTPUT_TRANSFORMS}.")
        if self.deterrence_form not in DETERRENCE_FORMS:
            raise InvalidModelConfig(f"Deterrence form must be one of {DETERRENCE_FORMS}.")
        if not self.scale_s > 0 or not self.gamma > 0:
            raise InvalidModelConfig("scale_s and gamma must be positive.")
        return self


class TrainConfig(NamedTuple):
    """Optimizer and early-stopping settings."""

    seed: int = 0
    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    eval_every: int = 1000
    patience: int = 20
    min_delta: float = 0.1
    max_iterations: int = 200_000
    batch_size: int = 1
    validation_fraction: float = 0.1


class EdgeInputs(NamedTuple):
    """Model-ready inputs of one target edge.

    Origins and destinations are stored once each; pairs index into them.

    Attributes
    ----------
    edge_id : int
        Target edge id.
    y : Optional[float]
        Observed volume, if known.
    x_origin : np.ndarray
        ``(U, k)`` features of the distinct origins.
    x_destination : np.ndarray
        ``(V, k)`` features of the distinct destinations.
    origin_index : np.ndarray
        ``(P,)`` row of each pair's origin in ``x_origin``.
    destination_index : np.ndarray
        ``(P,)`` row of each pair's destination in ``x_destination``.
    travel_time : np.ndarray
        ``(P,)`` pair travel times in seconds.

    """

    edge_id: int
    y: Optional[float]
    x_origin: np.ndarray
    x_destination: np.ndarray
    origin_index: np.ndarray
    destination_index: np.ndarray
    travel_time: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.travel_time)


class Evaluation(NamedTuple):
    """One early-stopping evaluation."""

    iteration: int
    validation_mgeh: float
    best_mgeh: float
    mean_loss: float


class TrainingLog(NamedTuple):
    """Record of a training run."""

    evaluations: List[Evaluation]
    iterations: int
    best_iteration: int
    stopped_early: bool
    train_edges: List[int]
    validation_edges: List[int]

    def to_dict(self) -> Dict[str, object]:
        return {
            "iterations": self.iterations,
            "best_iteration": self.best_iteration,
            "stopped_early": self.stopped_early,
            "train_edges": self.train_edges,
            "validation_edges": self.validation_edges,
            "evaluations": [e._asdict() for e in self.evaluations],
        }
