"""Interpret - Learned deterrence curves and origin/destination potential maps."""
from .errors import EmptyUniverse, InterpretException, InvalidGrid
from .interpret import (
    combine_curves,
    compute_potentials,
    export_deterrence,
    pair_universe,
    time_grid,
)
from .types import POTENTIAL_COLUMNS, DeterrenceCurve, PotentialMap

__all__ = (
    "EmptyUniverse",
    "InterpretException",
    "InvalidGrid",
    "combine_curves",
    "compute_potentials",
    "export_deterrence",
    "pair_universe",
    "time_grid",
    "POTENTIAL_COLUMNS",
    "DeterrenceCurve",
    "PotentialMap",
)
