"""Baseline predictors compared against the demand model."""
import logging
from typing import Any, Callable, Dict, Mapping, NamedTuple, Sequence

import numpy as np

from ..featurebank import FeatureBank
from ..odextract import ODContext
from .errors import EmptyInput, InvalidMasses, SingularDesign
from .types import EvalEdge

__all__ = (
    "DESIGN_DESCRIPTION",
    "Predictor",
    "ModelSpec",
    "LinearModel",
    "GravityEdge",
    "GravityModel",
    "edge_design",
    "baseline_linear",
    "gravity_edge",
    "baseline_gravity",
    "ConstantSpec",
    "OracleSpec",
    "LinearSpec",
    "GravitySpec",
)

log = logging.getLogger("deepdemand.evaluation")

DESIGN_DESCRIPTION = (
    "mean reduced origin features, mean reduced destination features, "
    "screened pair count, mean pair travel time (s)"
)
MASS_FLOOR = 1.0

Predictor = Callable[[Sequence[EvalEdge]], np.ndarray]


class ModelSpec:
    """A model row of the comparison: knows how to fit itself on a fold.

    Subclasses set `name` and implement `fit`.
    """

    name = ""

    def fit(self, train: Sequence[EvalEdge], fold: str) -> Predictor:
        raise NotImplementedError

    def fitted(self) -> Dict[str, Any]:
        """Get fitted parameters worth reporting, keyed by fold."""
        return {}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} name={self.name!r}>"


def edge_design(context: ODContext, bank: FeatureBank) -> np.ndarray:
    """Build the ``2k + 2`` baseline design vector of one target edge."""
    feature_nodes = bank.feature_nodes
    origins = [n for n in context.origins if n in feature_nodes]
    destinations = [n for n in context.destinations if n in feature_nodes]
    mean_o = bank.matrix(origins).mean(axis=0) if origins else np.zeros(bank.k)
    mean_d = bank.matrix(destinations).mean(axis=0) if destinations else np.zeros(bank.k)
    times = [p.travel_time for p in context.pairs]
    mean_t = float(np.mean(times)) if times else 0.0
    return np.concatenate([mean_o, mean_d, [float(len(context.pairs)), mean_t]])


class LinearModel(NamedTuple):
    """A fitted linear predictor ``intercept + X @ coef``."""

    intercept: float
    coef: np.ndarray
    ridge: float

    def predict(self, design: np.ndarray) -> np.ndarray:
        return self.intercept + np.atleast_2d(design) @ self.coef


def baseline_linear(design: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> LinearModel:
    """Fit ordinary least squares or ridge regression in closed form.

    Solves ``(AᵀA + P) β = Aᵀy`` where ``A`` is the design with a leading
    column of ones and ``P`` penalizes every coefficient but the intercept
    by ``ridge``.

    Raises
    ------
    EmptyInput
        If there are no rows or ``ridge`` is negative.
    SingularDesign
        If ``ridge`` is 0 and the design is rank deficient.

    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if design.shape[0] == 0 or design.shape[0] != y.size:
        raise EmptyInput("Linear fit needs one design row per observation.")
    if ridge < 0:
        raise EmptyInput(f"Ridge penalty must be non-negative, got {ridge}.")
    a = np.hstack([np.ones((design.shape[0], 1)), design])
    if ridge == 0 and np.linalg.matrix_rank(a) < a.shape[1]:
        raise SingularDesign(
            f"The {a.shape[0]}x{a.shape[1]} design (with intercept) is rank "
            "deficient; use ridge regression with a positive penalty."
        )
    penalty = np.full(a.shape[1], float(ridge))
    penalty[0] = 0.0
    try:
        beta = np.linalg.solve(a.T @ a + np.diag(penalty), a.T @ y)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign(f"Normal equations are singular: {exc}") from exc
    return LinearModel(intercept=float(beta[0]), coef=beta[1:], ridge=float(ridge))


class GravityEdge(NamedTuple):
    """Per-pair masses and travel times of one target edge.

    Masses are kept as given; they are floored at 1 only inside the model.
    """

    mass_origin: np.ndarray
    mass_destination: np.ndarray
    travel_time: np.ndarray


def gravity_edge(context: ODContext, masses: Mapping[int, float]) -> GravityEdge:
    """Look up the pair masses of an edge.

    Raises
    ------
    InvalidMasses
        If a pair endpoint has no mass or a negative one.

    """
    try:
        mo = np.array([masses[p.origin] for p in context.pairs], dtype=float)
        md = np.array([masses[p.destination] for p in context.pairs], dtype=float)
    except KeyError as exc:
        raise InvalidMasses(f"No mass for node {exc.args[0]}.") from None
    if (mo < 0).any() or (md < 0).any():
        raise InvalidMasses(f"Negative mass on target edge {context.target_edge_id}.")
    times = np.array([p.travel_time for p in context.pairs], dtype=float)
    return GravityEdge(mo, md, times)


class GravityModel(NamedTuple):
    """``exp(b0) Σ (m_o/M)^b1 (m_d/M)^b2 (t/T)^-b3`` over an edge's pairs.

    ``M`` and ``T`` are fixed scales chosen at fit time; the exponents are
    the same as on unscaled masses and times.
    """

    beta: np.ndarray
    mass_scale: float = 1.0
    time_scale: float = 1.0

    def predict(self, edges: Sequence[GravityEdge]) -> np.ndarray:
        logs, segments = _gravity_logs(edges, self.mass_scale, self.time_scale)
        w = np.exp(np.minimum(self.beta[0] + logs @ self.beta[1:], 700.0))
        return np.bincount(segments, weights=w, minlength=len(edges))

    @property
    def intercept(self) -> float:
        """(float) : ``b0`` on unscaled masses and times."""
        b0, b1, b2, b3 = self.beta
        return float(
            b0 - (b1 + b2) * np.log(self.mass_scale) + b3 * np.log(self.time_scale)
        )


def _gravity_logs(edges: Sequence[GravityEdge], mass_scale: float, time_scale: float):
    sizes = [len(e.travel_time) for e in edges]
    segments = np.repeat(np.arange(len(edges)), sizes)
    if not segments.size:
        return np.zeros((0, 3)), segments
    mo = np.maximum(np.concatenate([e.mass_origin for e in edges]), MASS_FLOOR)
    md = np.maximum(np.concatenate([e.mass_destination for e in edges]), MASS_FLOOR)
    t = np.concatenate([e.travel_time for e in edges])
    logs = np.column_stack(
        [np.log(mo / mass_scale), np.log(md / mass_scale), -np.log(t / time_scale)]
    )
    return logs, segments


def baseline_gravity(
    edges: Sequence[GravityEdge],
    y: np.ndarray,
    *,
    steps: int = 5000,
    lr: float = 0.01,
    init: Sequence[float] = (0.0, 1.0, 1.0, 1.0),
) -> GravityModel:
    """Fit the gravity model by Adam on the edge-level squared error.

    The loss is divided by the mean squared volume so one learning rate
    suits any volume scale. Masses are scaled by their mean and times by
    theirs.

    Raises
    ------
    InvalidMasses
        If every pair mass is zero.
    EmptyInput
        If there are no edges or no pairs.

    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if not edges or len(edges) != y.size:
        raise EmptyInput("Gravity fit needs one observation per edge.")
    pairs = [e for e in edges if len(e.travel_time)]
    if not pairs:
        raise EmptyInput("No screened pairs to fit the gravity model on.")
    masses = np.concatenate([np.r_[e.mass_origin, e.mass_destination] for e in pairs])
    if not masses.any():
        raise InvalidMasses("All gravity masses are zero.")
    mass_scale = float(np.maximum(masses, MASS_FLOOR).mean())
    time_scale = float(np.concatenate([e.travel_time for e in pairs]).mean())
    logs, segments = _gravity_logs(edges, mass_scale, time_scale)
    y_scale = float(np.mean(y * y)) or 1.0

    beta = np.asarray(init, dtype=float).copy()
    m = np.zeros(4)
    v = np.zeros(4)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    design = np.hstack([np.ones((len(logs), 1)), logs])
    for t in range(1, steps + 1):
        w = np.exp(np.minimum(beta[0] + logs @ beta[1:], 700.0))
        yhat = np.bincount(segments, weights=w, minlength=len(edges))
        residual = 2.0 * (yhat - y) / (len(edges) * y_scale)
        grad = (residual[segments] * w) @ design
        if not np.isfinite(grad).all():
            log.warning("Gravity fit stopped at step %d: non-finite gradient.", t)
            break
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        beta -= lr * (m / (1.0 - beta1 ** t)) / (np.sqrt(v / (1.0 - beta2 ** t)) + eps)
    return GravityModel(beta=beta, mass_scale=mass_scale, time_scale=time_scale)


class ConstantSpec(ModelSpec):
    """Predicts the mean training volume everywhere."""

    name = "Constant (mean)"

    def fit(self, train: Sequence[EvalEdge], fold: str) -> Predictor:
        mean = float(np.mean([e.y for e in train]))
        return lambda edges: np.full(len(edges), mean)


class OracleSpec(ModelSpec):
    """Predicts the stored observation; a sanity reference."""

    name = "Oracle"

    def fit(self, train: Sequence[EvalEdge], fold: str) -> Predictor:
        return lambda edges: np.array([e.y for e in edges], dtype=float)


class LinearSpec(ModelSpec):
    """Linear regression on the edge design vector; ridge when ``ridge > 0``."""

    def __init__(self, ridge: float = 0.0):
        self.ridge = ridge
        self.name = "Ridge regression" if ridge > 0 else "Linear regression"

    def fit(self, train: Sequence[EvalEdge], fold: str) -> Predictor:
        model = baseline_linear(
            np.vstack([e.design for e in train]), np.array([e.y for e in train]), self.ridge
        )
        return lambda edges: model.predict(np.vstack([e.design for e in edges]))


class GravitySpec(ModelSpec):
    """The gravity-style interaction model with masses from a raw feature column."""

    name = "Gravity (log-linear)"

    def __init__(
        self,
        bank: FeatureBank,
        mass_column: str,
        *,
        steps: int = 5000,
        lr: float = 0.01,
    ):
        self.masses: Dict[int, float] = bank.node_column(mass_column)
        self.steps = steps
        self.lr = lr
        self.models: Dict[str, GravityModel] = {}

    def fit(self, train: Sequence[EvalEdge], fold: str) -> Predictor:
        model = baseline_gravity(
            [gravity_edge(e.context, self.masses) for e in train],
            np.array([e.y for e in train]),
            steps=self.steps,
            lr=self.lr,
        )
        self.models[fold] = model
        log.info(
            "Fold %s gravity fit: b0=%.4g on raw units, exponents %s.",
            fold,
            model.intercept,
            model.beta[1:].tolist(),
        )
        return lambda edges: model.predict([gravity_edge(e.context, self.masses) for e in edges])

    def fitted(self) -> Dict[str, Any]:
        return {
            fold: {
                "b0": m.intercept,
                "mass_origin_exponent": float(m.beta[1]),
                "mass_destination_exponent": float(m.beta[2]),
                "time_exponent": float(m.beta[3]),
            }
            for fold, m in sorted(self.models.items())
        }
