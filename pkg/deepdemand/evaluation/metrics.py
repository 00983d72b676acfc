"""Volume comparison metrics: GEH, MGEH, MAE and R²."""
from typing import Iterable, NamedTuple, Optional, Tuple

import numpy as np

from .errors import EmptyInput

__all__ = ("Metrics", "geh", "metrics", "pair_metrics")


class Metrics(NamedTuple):
    """Aggregate agreement between observed and predicted volumes."""

    mgeh: float
    mae: float
    r2: Optional[float]
    n: int


def geh(y, yhat) -> np.ndarray:
    """GEH statistic ``sqrt(2 (y - yhat)² / (y + yhat))``, elementwise.

    Where ``y + yhat == 0`` the statistic is 0.
    """
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    total = y + yhat
    safe = np.where(total == 0, 1.0, total)
    return np.where(total == 0, 0.0, np.sqrt(2.0 * (y - yhat) ** 2 / safe))


def metrics(y, yhat) -> Metrics:
    """Compute MGEH, MAE and R² over a set of edges.

    R² uses the mean of ``y`` over the same set and is ``None`` when ``y``
    is constant.

    Raises
    ------
    EmptyInput
        If there are no edges.

    """
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.size == 0:
        raise EmptyInput("Cannot compute metrics over zero edges.")
    if y.shape != yhat.shape:
        raise EmptyInput(f"Got {y.size} observations for {yhat.size} predictions.")
    residual = y - yhat
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = None if sst == 0 else 1.0 - float(np.sum(residual ** 2)) / sst
    return Metrics(
        mgeh=float(np.mean(geh(y, yhat))),
        mae=float(np.mean(np.abs(residual))),
        r2=r2,
        n=int(y.size),
    )


def pair_metrics(pairs: Iterable[Tuple[float, float]]) -> Metrics:
    """Like `metrics`, from ``(y, yhat)`` pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("Cannot compute metrics over zero edges.")
    y, yhat = zip(*pairs)
    return metrics(y, yhat)
