"""Module containing the value types used in interpret."""
import pathlib
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

__all__ = ("DeterrenceCurve", "PotentialMap", "POTENTIAL_COLUMNS")

PathLike = Union[str, pathlib.Path]

POTENTIAL_COLUMNS = (
    "area_id",
    "o_potential",
    "d_potential",
    "o_density",
    "d_density",
    "quintile_o",
    "quintile_d",
    "n_pairs_o",
    "n_pairs_d",
)


class DeterrenceCurve:
    """Learned deterrence over a travel-time grid, for one or more folds.

    Attributes
    ----------
    t_min : np.ndarray
        ``(G,)`` strictly increasing travel times in minutes.
    values : np.ndarray
        ``(C, G)`` deterrence per curve and grid point.
    folds : List[Optional[str]]
        Fold id of each curve; ``[None]`` for a single unnamed curve.

    """

    __slots__ = ("t_min", "values", "folds")

    def __init__(
        self,
        t_min: np.ndarray,
        values: np.ndarray,
        folds: Sequence[Optional[str]] = (None,),
    ):
        self.t_min = np.asarray(t_min, dtype=float)
        self.values = np.atleast_2d(np.asarray(values, dtype=float))
        self.folds: List[Optional[str]] = list(folds)

    @property
    def p_od(self) -> np.ndarray:
        """(np.ndarray) : The single curve, or the pointwise mean of several."""
        return self.values[0] if len(self.folds) == 1 else self.mean

    @property
    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    @property
    def lower(self) -> np.ndarray:
        return self.values.min(axis=0)

    @property
    def upper(self) -> np.ndarray:
        return self.values.max(axis=0)

    def to_frame(self) -> pd.DataFrame:
        """Tabulate as ``t_min,p_od``; several folds add per-fold, mean, min and max columns."""
        if len(self.folds) == 1:
            return pd.DataFrame({"t_min": self.t_min, "p_od": self.values[0]})
        columns = {"t_min": self.t_min}
        for fold, row in zip(self.folds, self.values):
            columns[f"fold_{fold}"] = row
        columns.update(mean=self.mean, min=self.lower, max=self.upper)
        return pd.DataFrame(columns)

    def to_csv(self, path: PathLike) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def __repr__(self) -> str:
        return f"<DeterrenceCurve points={len(self.t_min)} folds={self.folds}>"


class PotentialMap:
    """Per-area origin and destination potentials.

    Potentials are the mean raw flow potential over the sampled pairs in
    which the area is the origin (O) or destination (D). Areas with no such
    pair have no data: their potential, density and quintile are missing.
    """

    __slots__ = ("frame", "universe_size", "sampled")

    def __init__(self, frame: pd.DataFrame, universe_size: int, sampled: int):
        self.frame = frame
        self.universe_size = universe_size
        self.sampled = sampled

    def __len__(self) -> int:
        return len(self.frame)

    def row(self, area_id: str) -> pd.Series:
        return self.frame.set_index("area_id").loc[area_id]

    @property
    def no_data_o(self) -> List[str]:
        """(List[str]) : Areas never sampled as an origin."""
        return self.frame.loc[self.frame["n_pairs_o"] == 0, "area_id"].tolist()

    @property
    def no_data_d(self) -> List[str]:
        """(List[str]) : Areas never sampled as a destination."""
        return self.frame.loc[self.frame["n_pairs_d"] == 0, "area_id"].tolist()

    def to_csv(self, path: PathLike) -> None:
        self.frame.to_csv(path, index=False, float_format="%.17g")

    def __repr__(self) -> str:
        return (
            f"<PotentialMap areas={len(self.frame)} pairs={self.sampled}"
            f"/{self.universe_size}>"
        )
