"""Errors for the demandmodel package."""
from typing import Any, Optional

from ..errors import ComputationError, DeepDemandException, InputError

__all__ = (
    "DemandModelException",
    "DimensionMismatch",
    "InvalidModelConfig",
    "EmptyTrainingSet",
    "TrainingDiverged",
    "CheckpointError",
)


class DemandModelException(DeepDemandException):
    """Base exception for this package."""


class DimensionMismatch(DemandModelException, InputError):
    """An input vector does not have the dimension the model expects."""


class InvalidModelConfig(DemandModelException, InputError):
    """A model or training setting is not supported."""


class EmptyTrainingSet(DemandModelException, InputError):
    """There are no training edges with an observed volume."""


class TrainingDiverged(DemandModelException, ComputationError):
    """The loss or gradient became non-finite.

    Attributes
    ----------
    step : int
        Optimizer step at which it happened.
    edge_id : Optional[int]
        First edge of the offending batch.
    loss : float
        The loss value.
    grad_norm : float
        The global gradient norm before clipping.

    """

    def __init__(
        self,
        step: int,
        edge_id: Optional[int],
        loss: float,
        grad_norm: float,
        *args: Any,
    ):
        self.step = step
        self.edge_id = edge_id
        self.loss = loss
        self.grad_norm = grad_norm
        super().__init__(
            *(
                args
                or (
                    f"Training diverged at step {step} (edge {edge_id}): "
                    f"loss={loss!r}, gradient norm={grad_norm!r}.",
                )
            )
        )


class CheckpointError(DemandModelException, InputError):
    """A checkpoint file is missing, malformed or of an unknown version."""
