"""Deterrence curve export and origin/destination potential maps."""
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..demandmodel import ModelParams, deterrence, encode, od_score
from ..featurebank import FeatureBank
from ..odextract import ODContext
from .errors import EmptyUniverse, InvalidGrid
from .types import POTENTIAL_COLUMNS, DeterrenceCurve, PotentialMap

__all__ = (
    "time_grid",
    "export_deterrence",
    "combine_curves",
    "pair_universe",
    "compute_potentials",
)

log = logging.getLogger("deepdemand.interpret")

_SCORE_CHUNK = 4096


def time_grid(
    start_min: float = 0.0, stop_min: float = 120.0, step_min: float = 0.5
) -> np.ndarray:
    """Build an evenly spaced travel-time grid in minutes, both ends included.

    Raises
    ------
    InvalidGrid
        If the grid would be empty, decreasing or start below zero.

    """
    if start_min < 0 or step_min <= 0 or stop_min < start_min:
        raise InvalidGrid(
            f"Grid {start_min}..{stop_min} step {step_min} is not a non-negative increasing grid."
        )
    count = int(round((stop_min - start_min) / step_min)) + 1
    return start_min + step_min * np.arange(count, dtype=float)


def export_deterrence(
    params: ModelParams,
    grid_min: Optional[np.ndarray] = None,
    fold: Optional[str] = None,
) -> DeterrenceCurve:
    """Evaluate the learned deterrence over a grid of travel times.

    Each grid point is passed through `deterrence` on its own, so exported
    values equal direct evaluations at the same time exactly.
    """
    grid = time_grid() if grid_min is None else np.asarray(grid_min, dtype=float)
    if grid.size == 0 or (np.diff(grid) <= 0).any() or grid[0] < 0:
        raise InvalidGrid("The grid must be non-empty, non-negative and strictly increasing.")
    values = np.array([deterrence(params, float(t) * 60.0) for t in grid])
    return DeterrenceCurve(grid, values, [fold])


def combine_curves(curves: Sequence[DeterrenceCurve]) -> DeterrenceCurve:
    """Stack per-fold curves on a shared grid into one multi-fold curve."""
    if not curves:
        raise InvalidGrid("No curves to combine.")
    grid = curves[0].t_min
    if any(c.t_min.shape != grid.shape or (c.t_min != grid).any() for c in curves):
        raise InvalidGrid("Curves must share one grid to be combined.")
    folds = [f for c in curves for f in c.folds]
    return DeterrenceCurve(grid, np.vstack([c.values for c in curves]), folds)


def pair_universe(contexts: Iterable[ODContext]) -> List[Tuple[int, int]]:
    """Get every distinct screened ``(origin, destination)`` pair, sorted."""
    return sorted({(p.origin, p.destination) for c in contexts for p in c.pairs})


def _scores(params: ModelParams, bank: FeatureBank, pairs: np.ndarray) -> np.ndarray:
    origins, o_index = np.unique(pairs[:, 0], return_inverse=True)
    dests, d_index = np.unique(pairs[:, 1], return_inverse=True)
    h_o, h_d = encode(params, bank.matrix(origins.tolist()), bank.matrix(dests.tolist()))
    o_index = o_index.reshape(-1)
    d_index = d_index.reshape(-1)
    out = np.empty(len(pairs))
    for start in range(0, len(pairs), _SCORE_CHUNK):
        stop = start + _SCORE_CHUNK
        out[start:stop] = od_score(params, h_o[o_index[start:stop]], h_d[d_index[start:stop]])
    return out


def _quintiles(density: pd.Series) -> pd.Series:
    present = density.dropna()
    out = pd.Series(pd.NA, index=density.index, dtype="Int64")
    if present.empty:
        return out
    ranks = present.rank(method="first")
    out.loc[present.index] = np.ceil(ranks * 5 / len(present)).astype(int).clip(1, 5)
    return out


def compute_potentials(
    params: ModelParams,
    bank: FeatureBank,
    contexts: Iterable[ODContext],
    *,
    sample_size: Optional[int] = None,
    seed: int = 0,
    universe: Optional[Sequence[Tuple[int, int]]] = None,
) -> PotentialMap:
    """Aggregate raw flow potentials into per-area O and D potentials.

    Parameters
    ----------
    params : ModelParams
        Trained parameters.
    bank : FeatureBank
        The node-attached feature bank the model was trained with.
    contexts : Iterable[ODContext]
        Contexts whose screened pairs form the pair universe.
    sample_size : Optional[int]
        Sample this many pairs uniformly without replacement. ``None`` (or a
        size at least the universe's) uses every pair.
    seed : int
        Sampling seed.
    universe : Optional[Sequence[Tuple[int, int]]]
        An explicit pair universe, overriding ``contexts``.

    Returns
    -------
    PotentialMap
        One row per node-attached area. Densities divide by land area in km²;
        quintiles rank areas with data by density, 1 lowest.

    Raises
    ------
    EmptyUniverse
        If there are no pairs.

    """
    pairs_list = list(universe) if universe is not None else pair_universe(contexts)
    if not pairs_list:
        raise EmptyUniverse("No OD pairs to compute potentials over.")
    pairs = np.array(sorted(set(pairs_list)), dtype=np.int64).reshape(-1, 2)
    universe_size = len(pairs)
    if sample_size is not None and sample_size < universe_size:
        pick = np.random.default_rng(seed).choice(universe_size, size=sample_size, replace=False)
        pairs = pairs[np.sort(pick)]
    log.info("Scoring %d of %d OD pairs.", len(pairs), universe_size)
    scores = _scores(params, bank, pairs)

    area_ids = sorted(set(bank.node_areas.values()))
    area_index = {a: i for i, a in enumerate(area_ids)}
    o_rows = np.array([area_index[bank.node_areas[n]] for n in pairs[:, 0]], dtype=np.int64)
    d_rows = np.array([area_index[bank.node_areas[n]] for n in pairs[:, 1]], dtype=np.int64)
    n = len(area_ids)
    o_count = np.bincount(o_rows, minlength=n)
    d_count = np.bincount(d_rows, minlength=n)
    o_sum = np.bincount(o_rows, weights=scores, minlength=n)
    d_sum = np.bincount(d_rows, weights=scores, minlength=n)

    with np.errstate(invalid="ignore", divide="ignore"):
        o_potential = np.where(o_count > 0, o_sum / np.maximum(o_count, 1), np.nan)
        d_potential = np.where(d_count > 0, d_sum / np.maximum(d_count, 1), np.nan)
    land = np.array([bank.land_area.get(a, np.nan) for a in area_ids], dtype=float)
    bad_land = ~(land > 0)
    if bad_land.any():
        log.warning("%d areas have no positive land area; densities left empty.", bad_land.sum())
    land = np.where(bad_land, np.nan, land)

    frame = pd.DataFrame(
        {
            "area_id": area_ids,
            "o_potential": o_potential,
            "d_potential": d_potential,
            "o_density": o_potential / land,
            "d_density": d_potential / land,
            "n_pairs_o": o_count,
            "n_pairs_d": d_count,
        }
    )
    frame["quintile_o"] = _quintiles(frame["o_density"])
    frame["quintile_d"] = _quintiles(frame["d_density"])
    return PotentialMap(frame[list(POTENTIAL_COLUMNS)], universe_size, len(pairs))
