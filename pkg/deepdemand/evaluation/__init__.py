"""Evaluation - Metrics, fold plans, baselines and cross-validated reports."""
from .baselines import (
    DESIGN_DESCRIPTION,
    ConstantSpec,
    GravityEdge,
    GravityModel,
    GravitySpec,
    LinearModel,
    LinearSpec,
    ModelSpec,
    OracleSpec,
    baseline_gravity,
    baseline_linear,
    edge_design,
    gravity_edge,
)
from .errors import (
    EmptyInput,
    EvaluationException,
    InvalidMasses,
    InvalidProtocol,
    MissingRegions,
    SingularDesign,
)
from .evaluation import TABLE_ROWS, DeepDemandSpec, EvalReport, build_eval_edges, run_cv
from .folds import make_folds
from .metrics import Metrics, geh, metrics, pair_metrics
from .types import EdgeRecord, EvalEdge, FoldPlan, Protocol, Split, Summary

__all__ = (
    "DESIGN_DESCRIPTION",
    "ConstantSpec",
    "GravityEdge",
    "GravityModel",
    "GravitySpec",
    "LinearModel",
    "LinearSpec",
    "ModelSpec",
    "OracleSpec",
    "baseline_gravity",
    "baseline_linear",
    "edge_design",
    "gravity_edge",
    "EmptyInput",
    "EvaluationException",
    "InvalidMasses",
    "InvalidProtocol",
    "MissingRegions",
    "SingularDesign",
    "TABLE_ROWS",
    "DeepDemandSpec",
    "EvalReport",
    "build_eval_edges",
    "run_cv",
    "make_folds",
    "Metrics",
    "geh",
    "metrics",
    "pair_metrics",
    "EdgeRecord",
    "EvalEdge",
    "FoldPlan",
    "Protocol",
    "Split",
    "Summary",
)
