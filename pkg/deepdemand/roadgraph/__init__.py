"""RoadGraph - Load, validate and weight the directed road network."""
from .errors import EdgeNotFound, InvalidEdges, InvalidSyntheticSpec, RoadGraphException
from .roadgraph import (
    RoadGraph,
    assign_travel_times,
    load_targets,
    parse_speed_mph,
    write_targets,
)
from .synthetic import (
    POPULATION_COLUMN,
    SyntheticAreas,
    generate_synthetic_network,
    synthetic_areas,
)
from .types import MPH_TO_MPS, Edge, RoadClass, SyntheticSpec, TargetEdge

__all__ = (
    "EdgeNotFound",
    "InvalidEdges",
    "InvalidSyntheticSpec",
    "RoadGraphException",
    "RoadGraph",
    "assign_travel_times",
    "load_targets",
    "parse_speed_mph",
    "write_targets",
    "POPULATION_COLUMN",
    "SyntheticAreas",
    "generate_synthetic_network",
    "synthetic_areas",
    "MPH_TO_MPS",
    "Edge",
    "RoadClass",
    "SyntheticSpec",
    "TargetEdge",
)
