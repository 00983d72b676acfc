"""CLI - The ``deepdemand`` command line and its layered configuration."""
from .cli import build_parser, main
from .config import DEFAULTS, ENV_PREFIX, RunConfig, stage_hash
from .errors import ArtifactMismatch, CLIException, ConfigError, MissingInput

__all__ = (
    "build_parser",
    "main",
    "DEFAULTS",
    "ENV_PREFIX",
    "RunConfig",
    "stage_hash",
    "ArtifactMismatch",
    "CLIException",
    "ConfigError",
    "MissingInput",
)
