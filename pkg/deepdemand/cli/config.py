"""Layered run configuration with stage-scoped hashes."""
import hashlib
import json
import os
import pathlib
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from ..demandmodel import ModelConfig, TrainConfig
from ..roadgraph import SyntheticSpec
from .errors import ConfigError

__all__ = ("DEFAULTS", "ENV_PREFIX", "RunConfig", "stage_hash")

PathLike = Union[str, pathlib.Path]

ENV_PREFIX = "DEEPDEMAND_"
HASH_LENGTH = 16

# Built-in defaults, keyed ``section__name``.
DEFAULTS: Dict[str, Any] = {
    "paths__edges": "data/edges.csv",
    "paths__nodes": "data/nodes.csv",
    "paths__features": "data/features.csv",
    "paths__centroids": "data/centroids.csv",
    "paths__targets": "data/targets.csv",
    "paths__bank": "work/featurebank.json",
    "paths__contexts": "work/contexts",
    "paths__checkpoint": "work/model.json",
    "paths__out": "work/out",
    "synth__size": 20,
    "synth__seed": 0,
    "synth__spacing_m": 400.0,
    "synth__jitter_m": 40.0,
    "synth__spine_rows": 1,
    "synth__both_directions": False,
    "synth__n_regions": 3,
    "synth__area_fraction": 0.5,
    "synth__n_features": 12,
    "synth__n_latent": 3,
    "synth__noise": 0.05,
    "features__k": 64,
    "extraction__cutoff_s": 3600.0,
    "extraction__epsilon_s": 1e-6,
    "model__encoder_dims": (16, 16),
    "model__od_dims": (16, 8),
    "model__time_dims": (16, 16),
    "model__mu_s": 3600.0,
    "model__scale_s": 1000.0,
    "model__gamma": 100.0,
    "model__output_transform": "sqrt",
    "model__hidden_activation": "relu",
    "model__time_activation": "tanh",
    "model__deterrence_form": "mlp",
    "train__seed": 0,
    "train__lr": 1e-3,
    "train__weight_decay": 1e-4,
    "train__beta1": 0.9,
    "train__beta2": 0.999,
    "train__eps": 1e-8,
    "train__clip_norm": 5.0,
    "train__eval_every": 1000,
    "train__patience": 20,
    "train__min_delta": 0.1,
    "train__max_iterations": 200_000,
    "train__batch_size": 1,
    "train__validation_fraction": 0.1,
    "evaluation__protocol": "random",
    "evaluation__k": 5,
    "evaluation__seed": 0,
    "evaluation__models": ("linear", "ridge", "gravity", "deepdemand", "constant"),
    "evaluation__ridge": 1.0,
    "evaluation__mass_column": "population",
    "evaluation__gravity_steps": 5000,
    "evaluation__gravity_lr": 0.01,
    "evaluation__fold_checkpoints": True,
    "interpret__start_min": 0.0,
    "interpret__stop_min": 120.0,
    "interpret__step_min": 0.5,
    "interpret__sample_size": None,
    "interpret__seed": 0,
    "run__workers": 1,
}


def stage_hash(payload: Mapping[str, Any]) -> str:
    """Hash a JSON-serializable mapping canonically; first 16 hex digits."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(text.encode()).hexdigest()[:HASH_LENGTH]


def _coerce(key: str, value: Any) -> Any:
    default = DEFAULTS[key]
    if value is None:
        return None
    if default is None:
        # optional integers
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer or null, got {value!r}.") from None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key} must be true or false, got {value!r}.")
        return value
    if isinstance(default, tuple):
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key} must be a list, got {value!r}.")
        kind = type(default[0]) if default else str
        try:
            return tuple(kind(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a list of {kind.__name__}, got {value!r}.") from None
    if isinstance(default, (int, float)):
        if isinstance(value, bool):
            raise ConfigError(f"{key} must be a number, got {value!r}.")
        try:
            number = type(default)(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be a number, got {value!r}.") from None
        if isinstance(default, int) and number != float(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}.")
        return number
    return str(value)


class RunConfig:
    """The effective configuration of a command.

    Precedence, lowest first: `DEFAULTS`, the YAML config file, environment
    variables ``DEEPDEMAND_<SECTION>__<NAME>`` (values parsed as YAML
    scalars), then command-line overrides.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Optional[Mapping[str, Any]] = None):
        self._values: Dict[str, Any] = dict(DEFAULTS)
        for key, value in (values or {}).items():
            self.set(key, value)

    @classmethod
    def load(
        cls,
        path: Optional[PathLike] = None,
        *,
        env: Optional[Mapping[str, str]] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "RunConfig":
        """Build the effective configuration from every layer.

        Raises
        ------
        ConfigError
            For unknown keys, unusable values, or an unreadable config file.

        """
        config = cls()
        if path is not None:
            config.update_nested(_read_yaml(path), source=str(path))
        env = os.environ if env is None else env
        for name in sorted(env):
            if not name.startswith(ENV_PREFIX) or "__" not in name[len(ENV_PREFIX):]:
                continue
            key = name[len(ENV_PREFIX):].lower()
            try:
                value = yaml.safe_load(env[name])
            except yaml.YAMLError as exc:
                raise ConfigError(f"Environment variable {name} is not valid YAML: {exc}")
            config.set(key, value, source=f"environment variable {name}")
        for key, value in (overrides or {}).items():
            config.set(key, value, source="command line")
        return config

    def set(self, key: str, value: Any, source: str = "configuration") -> None:
        if key not in DEFAULTS:
            raise ConfigError(f'Unknown setting "{key}" in {source}.')
        self._values[key] = _coerce(key, value)

    def update_nested(self, data: Mapping[str, Any], source: str = "configuration") -> None:
        """Apply ``{section: {name: value}}`` settings."""
        if not isinstance(data, Mapping):
            raise ConfigError(f"{source} must map sections to settings.")
        for section, settings in data.items():
            if not isinstance(settings, Mapping):
                raise ConfigError(f'Section "{section}" in {source} must be a mapping.')
            for name, value in settings.items():
                self.set(f"{section}__{name}", value, source=source)

    def __getitem__(self, key: str) -> Any:
        return self._values[key]

    def section(self, name: str) -> Dict[str, Any]:
        prefix = name + "__"
        return {k[len(prefix):]: v for k, v in self._values.items() if k.startswith(prefix)}

    def path(self, name: str) -> pathlib.Path:
        return pathlib.Path(self._values[f"paths__{name}"])

    def to_nested(self) -> Dict[str, Dict[str, Any]]:
        nested: Dict[str, Dict[str, Any]] = {}
        for key, value in self._values.items():
            section, name = key.split("__", 1)
            if isinstance(value, tuple):
                value = list(value)
            nested.setdefault(section, {})[name] = value
        return nested

    def dump(self, path: PathLike) -> None:
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(self.to_nested(), sort_keys=True))

    def config_hash(self) -> str:
        """Hash of every setting except paths and worker counts."""
        nested = self.to_nested()
        nested.pop("paths")
        nested.pop("run")
        return stage_hash(nested)

    def extraction_hash(self, graph_checksum: str, bank_checksum: str) -> str:
        return stage_hash(
            {
                "graph": graph_checksum,
                "bank": bank_checksum,
                "extraction": self.section("extraction"),
                "features": self.section("features"),
            }
        )

    def training_hash(self, extraction_hash: str) -> str:
        return stage_hash(
            {
                "extraction": extraction_hash,
                "model": self.section("model"),
                "train": self.section("train"),
            }
        )

    def model_config(self, k: int) -> ModelConfig:
        return ModelConfig(k=k, **self.section("model")).validate()

    def train_config(self) -> TrainConfig:
        return TrainConfig(**self.section("train"))

    def synthetic_spec(self) -> SyntheticSpec:
        s = self.section("synth")
        return SyntheticSpec(
            size=s["size"],
            seed=s["seed"],
            spacing_m=s["spacing_m"],
            jitter_m=s["jitter_m"],
            spine_rows=s["spine_rows"],
            both_directions=s["both_directions"],
            n_regions=s["n_regions"],
        )

    def __repr__(self) -> str:
        return f"<RunConfig hash={self.config_hash()}>"


def _read_yaml(path: PathLike) -> Mapping[str, Any]:
    path = pathlib.Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"Config file {path} is not valid YAML: {exc}") from exc
    return data or {}
