"""FeatureBank - Normalized, PCA-reduced area features attached to graph nodes."""
from .errors import (
    ChecksumMismatch,
    EmptyGraph,
    FeatureBankException,
    InvalidFeatureTable,
    MissingFeature,
)
from .featurebank import DEFAULT_K, FeatureBank, attach_to_nodes, fit_transform

__all__ = (
    "ChecksumMismatch",
    "EmptyGraph",
    "FeatureBankException",
    "InvalidFeatureTable",
    "MissingFeature",
    "DEFAULT_K",
    "FeatureBank",
    "attach_to_nodes",
    "fit_transform",
)
