"""ODExtract - Competitive two-source Dijkstra and OD pair screening."""
from .errors import (
    ContextFormatError,
    InvalidParameter,
    InvalidTarget,
    ODExtractionException,
    StaleContext,
)
from .odextract import (
    DEFAULT_CUTOFF_S,
    DEFAULT_EPSILON_S,
    extract_all,
    extract_context,
    screen_od_pairs,
    territory_path,
    two_source_dijkstra,
)
from .store import ContextStore
from .types import ExtractionManifest, ODContext, ODPair, Side, Territory

__all__ = (
    "ContextFormatError",
    "InvalidParameter",
    "InvalidTarget",
    "ODExtractionException",
    "StaleContext",
    "DEFAULT_CUTOFF_S",
    "DEFAULT_EPSILON_S",
    "extract_all",
    "extract_context",
    "screen_od_pairs",
    "territory_path",
    "two_source_dijkstra",
    "ContextStore",
    "ExtractionManifest",
    "ODContext",
    "ODPair",
    "Side",
    "Territory",
)
