"""Module containing the value types used in roadgraph."""
import enum
from typing import Dict, NamedTuple, Optional, Tuple

__all__ = ("MPH_TO_MPS", "RoadClass", "Edge", "TargetEdge", "SyntheticSpec")

MPH_TO_MPS = 0.44704


class RoadClass(str, enum.Enum):
    """OSM-style road class (the ``highway`` tag), with its fallback speed."""

    motorway = "motorway"
    motorway_link = "motorway_link"
    trunk = "trunk"
    trunk_link = "trunk_link"
    primary = "primary"
    primary_link = "primary_link"
    secondary = "secondary"
    secondary_link = "secondary_link"
    tertiary = "tertiary"
    tertiary_link = "tertiary_link"
    residential = "residential"
    unclassified = "unclassified"
    service = "service"
    other = "other"

    def __str__(self) -> str:
        return self.value

    @property
    def fallback_mph(self) -> float:
        """(float) : Assumed speed when no valid posted speed exists."""
        return _FALLBACK_MPH[self]

    @classmethod
    def parse(cls, value: Optional[str]) -> "RoadClass":
        """Map a raw ``highway`` value onto a class, ``other`` if unknown."""
        if value is None:
            return cls.other
        try:
            # noinspection PyArgumentList
            return cls(str(value).strip().lower())
        except ValueError:
            return cls.other


_FALLBACK_MPH: Dict[RoadClass, float] = {
    RoadClass.motorway: 70.0,
    RoadClass.motorway_link: 60.0,
    RoadClass.trunk: 60.0,
    RoadClass.trunk_link: 50.0,
    RoadClass.primary: 45.0,
    RoadClass.primary_link: 40.0,
    RoadClass.secondary: 35.0,
    RoadClass.secondary_link: 30.0,
    RoadClass.tertiary: 25.0,
    RoadClass.tertiary_link: 20.0,
    RoadClass.residential: 15.0,
    RoadClass.unclassified: 15.0,
    RoadClass.service: 15.0,
    RoadClass.other: 30.0,
}


class Edge(NamedTuple):
    """A directed road segment.

    Attributes
    ----------
    edge_id : int
        Stable id, unique across parallel edges.
    u : int
        Tail node.
    v : int
        Head node.
    length_m : float
        Length in meters.
    road_class : RoadClass
        The road class.
    maxspeed : Optional[str]
        The posted speed as given in the input, or ``None``.
    travel_time_s : Optional[float]
        ``None`` until travel times are assigned.
    region : Optional[str]
        Region label, if any.

    """

    edge_id: int
    u: int
    v: int
    length_m: float
    road_class: RoadClass
    maxspeed: Optional[str] = None
    travel_time_s: Optional[float] = None
    region: Optional[str] = None


class TargetEdge(NamedTuple):
    """An edge for which demand is predicted, with its observed volume."""

    edge_id: int
    u: int
    v: int
    travel_time_s: float
    aadt: Optional[float] = None
    region: Optional[str] = None
    road_class: RoadClass = RoadClass.other


class SyntheticSpec(NamedTuple):
    """Parameters for `generate_synthetic_network`.

    ``class_mix`` weights the classes drawn for non-spine edges. Spine rows
    are motorway in both directions; their west-to-east edges are targets,
    and with ``both_directions`` the east-to-west edges are targets too.
    """

    size: int
    seed: int = 0
    class_mix: Tuple[Tuple[str, float], ...] = (
        ("residential", 0.5),
        ("tertiary", 0.2),
        ("secondary", 0.15),
        ("primary", 0.1),
        ("unclassified", 0.05),
    )
    spacing_m: float = 400.0
    jitter_m: float = 40.0
    spine_rows: int = 1
    both_directions: bool = False
    n_regions: int = 3
