"""The differentiable demand model: encoders, OD scorer, deterrence, aggregation."""
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from ..featurebank import FeatureBank
from ..odextract import ODContext
from .errors import DimensionMismatch
from .mlp import MLP, Cache
from .types import EdgeInputs, ModelConfig

__all__ = (
    "ModelParams",
    "softplus",
    "sigmoid",
    "encode",
    "od_score",
    "deterrence",
    "prepare_edge",
    "predict_edge",
    "predict_edges",
    "edge_loss_and_grad",
    "batch_loss_and_grad",
)

SQRT_GUARD = 1e-12
_SOFTPLUS_LINEAR = 20.0


def softplus(z: np.ndarray) -> np.ndarray:
    """Overflow-safe ``log(1 + exp(z))``: ``z`` above 20, ``exp(z)`` below -20."""
    z = np.asarray(z, dtype=float)
    mid = np.clip(z, -_SOFTPLUS_LINEAR, _SOFTPLUS_LINEAR)
    return np.where(
        z > _SOFTPLUS_LINEAR,
        z,
        np.where(z < -_SOFTPLUS_LINEAR, np.exp(mid), np.log1p(np.exp(mid))),
    )


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


class ModelParams:
    """Learnable functions and fixed constants of the demand model.

    Attributes
    ----------
    config : ModelConfig
        Architecture and constants.
    f_origin, f_destination : MLP
        Origin and destination encoders; they share no parameters.
    f_od : MLP
        OD pair scorer on the concatenated embeddings.
    f_time : Optional[MLP]
        Deterrence network (``mlp`` and ``logit`` forms).
    decay : Optional[np.ndarray]
        ``(1,)`` raw decay rate (``exponential`` form).

    """

    __slots__ = ("config", "f_origin", "f_destination", "f_od", "f_time", "decay")

    def __init__(
        self,
        config: ModelConfig,
        f_origin: MLP,
        f_destination: MLP,
        f_od: MLP,
        f_time: Optional[MLP] = None,
        decay: Optional[np.ndarray] = None,
    ):
        self.config = config.validate()
        if f_origin.in_dim != config.k or f_destination.in_dim != config.k:
            raise DimensionMismatch(
                f"Encoders take width {f_origin.in_dim}/{f_destination.in_dim}, "
                f"features have k={config.k}."
            )
        if f_od.in_dim != f_origin.out_dim + f_destination.out_dim or f_od.out_dim != 1:
            raise DimensionMismatch("The OD scorer must map concatenated embeddings to 1.")
        if config.deterrence_form == "exponential":
            if decay is None or decay.shape != (1,):
                raise DimensionMismatch("The exponential form needs a (1,) decay array.")
        elif f_time is None or f_time.in_dim != 1 or f_time.out_dim != 1:
            raise DimensionMismatch("The deterrence network must map 1 to 1.")
        self.f_origin = f_origin
        self.f_destination = f_destination
        self.f_od = f_od
        self.f_time = f_time
        self.decay = decay

    @staticmethod
    def layer_dims(config: ModelConfig) -> Dict[str, List[int]]:
        """Get the layer widths of each network for a config."""
        enc = [config.k, *config.encoder_dims]
        dims = {
            "f_O": enc,
            "f_D": list(enc),
            "f_OD": [2 * enc[-1], *config.od_dims, 1],
        }
        if config.deterrence_form == "mlp":
            dims["f_t"] = [1, *config.time_dims, 1]
        elif config.deterrence_form == "logit":
            dims["f_t"] = [1, 1]
        return dims

    @classmethod
    def init(cls, config: ModelConfig, seed: Union[int, Sequence[int]] = 0) -> "ModelParams":
        """Initialize every network independently from one seed or seed sequence."""
        config = config.validate()
        rng = np.random.default_rng(seed)
        dims = cls.layer_dims(config)
        f_origin = MLP.init(dims["f_O"], rng, config.hidden_activation)
        f_destination = MLP.init(dims["f_D"], rng, config.hidden_activation)
        f_od = MLP.init(dims["f_OD"], rng, config.hidden_activation)
        f_time = None
        decay = None
        if "f_t" in dims:
            f_time = MLP.init(dims["f_t"], rng, config.time_activation)
        else:
            decay = np.zeros(1)
        return cls(config, f_origin, f_destination, f_od, f_time, decay)

    @classmethod
    def zeros(cls, config: ModelConfig) -> "ModelParams":
        """All-zero parameters; useful for checking degenerate outputs."""
        dims = cls.layer_dims(config)
        f_time = MLP.zeros(dims["f_t"], config.time_activation) if "f_t" in dims else None
        return cls(
            config,
            MLP.zeros(dims["f_O"], config.hidden_activation),
            MLP.zeros(dims["f_D"], config.hidden_activation),
            MLP.zeros(dims["f_OD"], config.hidden_activation),
            f_time,
            None if f_time is not None else np.zeros(1),
        )

    def blocks(self) -> Dict[str, np.ndarray]:
        """Get every parameter array by name, in a fixed order.

        The arrays are the live parameters; updating them in place updates
        the model.
        """
        out: Dict[str, np.ndarray] = {}
        out.update(self.f_origin.named_arrays("f_O"))
        out.update(self.f_destination.named_arrays("f_D"))
        out.update(self.f_od.named_arrays("f_OD"))
        if self.f_time is not None:
            out.update(self.f_time.named_arrays("f_t"))
        if self.decay is not None:
            out["decay"] = self.decay
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.config,
            self.f_origin.copy(),
            self.f_destination.copy(),
            self.f_od.copy(),
            None if self.f_time is None else self.f_time.copy(),
            None if self.decay is None else self.decay.copy(),
        )

    def n_parameters(self) -> int:
        return sum(a.size for a in self.blocks().values())

    def __repr__(self) -> str:
        return (
            f"<ModelParams k={self.config.k} form={self.config.deterrence_form} "
            f"parameters={self.n_parameters()}>"
        )


def encode(
    params: ModelParams, x_o: np.ndarray, x_d: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Embed origin and destination feature vectors.

    Accepts single vectors of shape ``(k,)`` or batches ``(N, k)``.

    Raises
    ------
    DimensionMismatch
        If a vector is not of width ``k``.

    """
    single = np.ndim(x_o) == 1
    h_o = params.f_origin(np.atleast_2d(np.asarray(x_o, dtype=float)))
    h_d = params.f_destination(np.atleast_2d(np.asarray(x_d, dtype=float)))
    return (h_o[0], h_d[0]) if single else (h_o, h_d)


def od_score(params: ModelParams, h_o: np.ndarray, h_d: np.ndarray) -> np.ndarray:
    """Flow potential ``Softplus(f_OD([h_o || h_d]))``; scalar for single pairs."""
    single = np.ndim(h_o) == 1
    joined = np.concatenate([np.atleast_2d(h_o), np.atleast_2d(h_d)], axis=1)
    s = softplus(params.f_od(joined)[:, 0])
    return s[0] if single else s


def _deterrence_logit(params: ModelParams, t_od: np.ndarray) -> Tuple[np.ndarray, Optional[Cache]]:
    cfg = params.config
    if cfg.deterrence_form == "exponential":
        return -softplus(params.decay[0]) * t_od / cfg.scale_s, None
    t_norm = ((t_od - cfg.mu_s) / cfg.scale_s)[:, None]
    out, cache = params.f_time.forward(t_norm)
    return out[:, 0], cache


def deterrence(params: ModelParams, t_od) -> np.ndarray:
    """Fraction of flow potential surviving a travel time of ``t_od`` seconds.

    ``sigmoid(f_t((t_od - mu) / scale))`` for the ``mlp`` and ``logit``
    forms; ``exp(-softplus(decay) * t_od / scale)`` for ``exponential``.
    """
    scalar = np.ndim(t_od) == 0
    t = np.atleast_1d(np.asarray(t_od, dtype=float))
    logit, _ = _deterrence_logit(params, t)
    p = np.exp(logit) if params.config.deterrence_form == "exponential" else sigmoid(logit)
    return p[0] if scalar else p


def _output(cfg: ModelConfig, total: float) -> Tuple[float, float]:
    # returns (yhat, d yhat / d S)
    if cfg.output_transform == "sqrt":
        return cfg.gamma * np.sqrt(total), cfg.gamma / (2.0 * np.sqrt(total + SQRT_GUARD))
    if cfg.output_transform == "log1p":
        return cfg.gamma * np.log1p(total), cfg.gamma / (1.0 + total)
    return cfg.gamma * total, cfg.gamma


def prepare_edge(
    context: ODContext, bank: FeatureBank, y: Optional[float] = None
) -> EdgeInputs:
    """Gather the features and travel times of an edge's screened pairs.

    Raises
    ------
    MissingFeature
        If a pair endpoint has no feature vector.

    """
    origins, destinations, times = context.pair_arrays()
    origin_nodes, origin_index = np.unique(origins, return_inverse=True)
    dest_nodes, dest_index = np.unique(destinations, return_inverse=True)
    return EdgeInputs(
        edge_id=context.target_edge_id,
        y=y,
        x_origin=bank.matrix(origin_nodes.tolist()),
        x_destination=bank.matrix(dest_nodes.tolist()),
        origin_index=origin_index.astype(np.int64).reshape(-1),
        destination_index=dest_index.astype(np.int64).reshape(-1),
        travel_time=times,
    )


class _ForwardCache(NamedTuple):
    inputs: EdgeInputs
    cache_o: Cache
    cache_d: Cache
    cache_od: Cache
    cache_t: Optional[Cache]
    z: np.ndarray
    s: np.ndarray
    p: np.ndarray
    total: float


def _forward(params: ModelParams, inputs: EdgeInputs) -> Tuple[float, Optional[_ForwardCache]]:
    cfg = params.config
    if inputs.n_pairs == 0:
        return 0.0, None
    h_o, cache_o = params.f_origin.forward(inputs.x_origin)
    h_d, cache_d = params.f_destination.forward(inputs.x_destination)
    joined = np.concatenate(
        [h_o[inputs.origin_index], h_d[inputs.destination_index]], axis=1
    )
    z, cache_od = params.f_od.forward(joined)
    z = z[:, 0]
    s = softplus(z)
    logit, cache_t = _deterrence_logit(params, inputs.travel_time)
    p = np.exp(logit) if cfg.deterrence_form == "exponential" else sigmoid(logit)
    total = float(np.sum(s * p))
    yhat, _ = _output(cfg, total)
    return float(yhat), _ForwardCache(
        inputs, cache_o, cache_d, cache_od, cache_t, z, s, p, total
    )


def predict_edge(
    params: ModelParams, context_or_inputs, bank: Optional[FeatureBank] = None
) -> float:
    """Predict the daily volume of one target edge.

    Parameters
    ----------
    params : ModelParams
        Model parameters.
    context_or_inputs : Union[ODContext, EdgeInputs]
        The edge's screened pairs, raw or already prepared.
    bank : Optional[FeatureBank]
        Needed when a raw `ODContext` is given.

    Returns
    -------
    float
        ``gamma * f_S(sum of s_od * p_od)``; ``0`` when there are no pairs.

    """
    inputs = context_or_inputs
    if isinstance(inputs, ODContext):
        inputs = prepare_edge(inputs, bank)
    return _forward(params, inputs)[0]


def predict_edges(params: ModelParams, edges: Sequence[EdgeInputs]) -> np.ndarray:
    return np.array([_forward(params, e)[0] for e in edges], dtype=float)


def _zero_grads(params: ModelParams) -> Dict[str, np.ndarray]:
    return {name: np.zeros_like(a) for name, a in params.blocks().items()}


def _store(grads: Dict[str, np.ndarray], prefix: str, layer_grads) -> None:
    for i, (dw, db) in layer_grads.items():
        grads[f"{prefix}.W{i}"] += dw
        grads[f"{prefix}.b{i}"] += db


def edge_loss_and_grad(
    params: ModelParams, inputs: EdgeInputs
) -> Tuple[float, float, Dict[str, np.ndarray]]:
    """Squared error of one edge and its gradient w.r.t. every block.

    Returns
    -------
    Tuple[float, float, Dict[str, np.ndarray]]
        ``(loss, yhat, grads)`` with grads keyed like `ModelParams.blocks`.

    """
    cfg = params.config
    yhat, fc = _forward(params, inputs)
    residual = float(inputs.y) - yhat
    loss = residual * residual
    grads = _zero_grads(params)
    if fc is None:
        return loss, yhat, grads

    _, d_out = _output(cfg, fc.total)
    d_total = -2.0 * residual * d_out
    d_s = d_total * fc.p
    d_p = d_total * fc.s

    d_z = d_s * sigmoid(fc.z)
    d_joined, od_grads = params.f_od.backward(fc.cache_od, d_z[:, None])
    _store(grads, "f_OD", od_grads)

    width = params.f_origin.out_dim
    d_h_o = np.zeros((len(fc.inputs.x_origin), width))
    d_h_d = np.zeros((len(fc.inputs.x_destination), params.f_destination.out_dim))
    np.add.at(d_h_o, fc.inputs.origin_index, d_joined[:, :width])
    np.add.at(d_h_d, fc.inputs.destination_index, d_joined[:, width:])
    _store(grads, "f_O", params.f_origin.backward(fc.cache_o, d_h_o)[1])
    _store(grads, "f_D", params.f_destination.backward(fc.cache_d, d_h_d)[1])

    if cfg.deterrence_form == "exponential":
        # p = exp(-softplus(r) * t / scale)
        d_rate = float(np.sum(d_p * fc.p * (-fc.inputs.travel_time / cfg.scale_s)))
        grads["decay"] += d_rate * sigmoid(params.decay)
    else:
        d_logit = d_p * fc.p * (1.0 - fc.p)
        _store(grads, "f_t", params.f_time.backward(fc.cache_t, d_logit[:, None])[1])
    return loss, yhat, grads


def batch_loss_and_grad(
    params: ModelParams, batch: Sequence[EdgeInputs]
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean squared error over a batch of edges and its gradient."""
    total_loss = 0.0
    grads = _zero_grads(params)
    for inputs in batch:
        loss, _, edge_grads = edge_loss_and_grad(params, inputs)
        total_loss += loss
        for name, g in edge_grads.items():
            grads[name] += g
    n = len(batch)
    return total_loss / n, {name: g / n for name, g in grads.items()}
