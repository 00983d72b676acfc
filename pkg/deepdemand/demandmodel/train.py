"""Stochastic training of the demand model with AdamW and early stopping."""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .demandmodel import ModelParams, batch_loss_and_grad, predict_edges
from .errors import EmptyTrainingSet, InvalidModelConfig, TrainingDiverged
from .types import EdgeInputs, Evaluation, TrainConfig, TrainingLog

__all__ = (
    "TrainState",
    "global_norm",
    "clip_gradients",
    "adamw_update",
    "train_step",
    "split_validation",
    "train",
)

log = logging.getLogger("deepdemand.demandmodel")


class TrainState:
    """Optimizer state carried between steps.

    Attributes
    ----------
    m, v : Dict[str, np.ndarray]
        First and second moments, shaped like the parameter blocks.
    step : int
        Number of optimizer steps taken.
    best_mgeh : float
        Best validation MGEH so far; ``inf`` before the first evaluation.
    bad_evaluations : int
        Evaluations since the last improvement.
    seed : int
        Seed of `rng`.
    rng : np.random.Generator
        Source of edge sampling.

    """

    __slots__ = ("m", "v", "step", "best_mgeh", "bad_evaluations", "seed", "rng")

    def __init__(self, params: ModelParams, seed: int = 0):
        blocks = params.blocks()
        self.m: Dict[str, np.ndarray] = {n: np.zeros_like(a) for n, a in blocks.items()}
        self.v: Dict[str, np.ndarray] = {n: np.zeros_like(a) for n, a in blocks.items()}
        self.step = 0
        self.best_mgeh = math.inf
        self.bad_evaluations = 0
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def __repr__(self) -> str:
        return f"<TrainState step={self.step} best_mgeh={self.best_mgeh:.4f}>"


def global_norm(grads: Dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(
    grads: Dict[str, np.ndarray], clip_norm: float
) -> Tuple[Dict[str, np.ndarray], float]:
    """Scale gradients so their global norm is at most ``clip_norm``.

    Returns
    -------
    Tuple[Dict[str, np.ndarray], float]
        The clipped gradients and the norm before clipping.

    """
    norm = global_norm(grads)
    if norm <= clip_norm or norm == 0:
        return grads, norm
    scale = clip_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


def adamw_update(
    params: ModelParams,
    state: TrainState,
    grads: Dict[str, np.ndarray],
    config: TrainConfig,
) -> None:
    """Apply one decoupled-weight-decay Adam step in place."""
    state.step += 1
    t = state.step
    correction1 = 1.0 - config.beta1 ** t
    correction2 = 1.0 - config.beta2 ** t
    for name, theta in params.blocks().items():
        g = grads[name]
        theta *= 1.0 - config.lr * config.weight_decay
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * g * g
        theta -= config.lr * (m / correction1) / (np.sqrt(v / correction2) + config.eps)


def train_step(
    params: ModelParams,
    state: TrainState,
    batch: Sequence[EdgeInputs],
    config: TrainConfig,
) -> Tuple[ModelParams, TrainState, float]:
    """Take one optimizer step on the squared error of a batch of edges.

    Raises
    ------
    TrainingDiverged
        If the loss or the gradient is not finite.

    """
    loss, grads = batch_loss_and_grad(params, batch)
    norm = global_norm(grads)
    if not (math.isfinite(loss) and math.isfinite(norm)):
        raise TrainingDiverged(state.step + 1, batch[0].edge_id, loss, norm)
    grads, _ = clip_gradients(grads, config.clip_norm)
    adamw_update(params, state, grads, config)
    return params, state, loss


def split_validation(
    edges: Sequence[EdgeInputs], fraction: float, seed: int
) -> Tuple[List[EdgeInputs], List[EdgeInputs]]:
    """Carve a seeded validation subset off the training edges.

    With fewer than two edges, or a zero fraction, nothing is carved and
    validation falls back to the training edges themselves.
    """
    if not 0 <= fraction < 1:
        raise InvalidModelConfig(f"Validation fraction must be in [0, 1), got {fraction}.")
    n_val = int(round(fraction * len(edges)))
    if len(edges) < 2 or n_val == 0:
        return list(edges), list(edges)
    n_val = min(n_val, len(edges) - 1)
    order = np.random.default_rng([seed, 1]).permutation(len(edges))
    held = set(order[:n_val].tolist())
    train_edges = [e for i, e in enumerate(edges) if i not in held]
    validation = [e for i, e in enumerate(edges) if i in held]
    return train_edges, validation


def train(
    params: ModelParams,
    edges: Sequence[EdgeInputs],
    config: TrainConfig = TrainConfig(),
    validation: Optional[Sequence[EdgeInputs]] = None,
) -> Tuple[ModelParams, TrainingLog]:
    """Train on edges sampled uniformly with replacement.

    Validation MGEH is evaluated every ``config.eval_every`` steps. Training
    stops once ``config.patience`` consecutive evaluations fail to improve on
    the best by more than ``config.min_delta``, or after
    ``config.max_iterations`` steps.

    Parameters
    ----------
    params : ModelParams
        Starting parameters; left untouched.
    edges : Sequence[EdgeInputs]
        Training edges. Edges without an observed volume are ignored.
    config : TrainConfig
        Optimizer and stopping settings.
    validation : Optional[Sequence[EdgeInputs]]
        Early-stopping set. When omitted, ``config.validation_fraction`` of
        the training edges is carved off with ``config.seed``.

    Returns
    -------
    Tuple[ModelParams, TrainingLog]
        Parameters from the best evaluation, and the run record.

    Raises
    ------
    EmptyTrainingSet
        If no edge has an observed volume.

    """
    # evaluation imports this package
    from ..evaluation.metrics import metrics

    labelled = [e for e in edges if e.y is not None]
    if not labelled:
        raise EmptyTrainingSet("No training edges with observed volumes.")
    if config.eval_every < 1 or config.batch_size < 1:
        raise InvalidModelConfig("eval_every and batch_size must be at least 1.")
    if validation is None:
        labelled, validation = split_validation(
            labelled, config.validation_fraction, config.seed
        )
    validation = [e for e in validation if e.y is not None] or labelled
    y_val = np.array([e.y for e in validation], dtype=float)

    params = params.copy()
    state = TrainState(params, config.seed)
    best = params.copy()
    best_iteration = 0
    evaluations: List[Evaluation] = []
    stopped_early = False
    running_loss = 0.0
    since_eval = 0

    def _evaluate(iteration: int) -> None:
        nonlocal best, best_iteration, running_loss, since_eval
        mgeh = metrics(y_val, predict_edges(params, validation)).mgeh
        if not math.isfinite(state.best_mgeh) or mgeh < state.best_mgeh - config.min_delta:
            state.best_mgeh = mgeh
            state.bad_evaluations = 0
            best = params.copy()
            best_iteration = iteration
        else:
            state.bad_evaluations += 1
        mean_loss = running_loss / since_eval if since_eval else math.nan
        evaluations.append(Evaluation(iteration, mgeh, state.best_mgeh, mean_loss))
        log.info(
            "Iteration %d: validation MGEH %.4f (best %.4f), mean loss %.4g.",
            iteration,
            mgeh,
            state.best_mgeh,
            mean_loss,
        )
        running_loss = 0.0
        since_eval = 0

    iteration = 0
    while iteration < config.max_iterations:
        picks = state.rng.integers(0, len(labelled), size=config.batch_size)
        _, _, loss = train_step(params, state, [labelled[i] for i in picks], config)
        iteration += 1
        running_loss += loss
        since_eval += 1
        if iteration % config.eval_every == 0:
            _evaluate(iteration)
            if state.bad_evaluations >= config.patience:
                stopped_early = True
                break
    if not evaluations or evaluations[-1].iteration != iteration:
        _evaluate(iteration)

    validation_ids = [e.edge_id for e in validation]
    return best, TrainingLog(
        evaluations=evaluations,
        iterations=iteration,
        best_iteration=best_iteration,
        stopped_early=stopped_early,
        train_edges=sorted(e.edge_id for e in labelled),
        validation_edges=sorted(validation_ids),
    )
