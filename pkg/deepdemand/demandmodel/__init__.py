"""DemandModel - The differentiable edge demand predictor and its training loop."""
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .demandmodel import (
    ModelParams,
    batch_loss_and_grad,
    deterrence,
    edge_loss_and_grad,
    encode,
    od_score,
    predict_edge,
    predict_edges,
    prepare_edge,
    sigmoid,
    softplus,
)
from .errors import (
    CheckpointError,
    DemandModelException,
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidModelConfig,
    TrainingDiverged,
)
from .mlp import MLP
from .planted import plant_volumes, planted_params
from .train import (
    TrainState,
    adamw_update,
    clip_gradients,
    global_norm,
    split_validation,
    train,
    train_step,
)
from .types import (
    ACTIVATIONS,
    DETERRENCE_FORMS,
    OUTPUT_TRANSFORMS,
    EdgeInputs,
    Evaluation,
    ModelConfig,
    TrainConfig,
    TrainingLog,
)

__all__ = (
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "ModelParams",
    "batch_loss_and_grad",
    "deterrence",
    "edge_loss_and_grad",
    "encode",
    "od_score",
    "predict_edge",
    "predict_edges",
    "prepare_edge",
    "sigmoid",
    "softplus",
    "CheckpointError",
    "DemandModelException",
    "DimensionMismatch",
    "EmptyTrainingSet",
    "InvalidModelConfig",
    "TrainingDiverged",
    "MLP",
    "plant_volumes",
    "planted_params",
    "TrainState",
    "adamw_update",
    "clip_gradients",
    "global_norm",
    "split_validation",
    "train",
    "train_step",
    "ACTIVATIONS",
    "DETERRENCE_FORMS",
    "OUTPUT_TRANSFORMS",
    "EdgeInputs",
    "Evaluation",
    "ModelConfig",
    "TrainConfig",
    "TrainingLog",
)
