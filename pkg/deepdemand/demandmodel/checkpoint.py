"""Bit-exact checkpoints of trained model parameters."""
import json
import pathlib
from typing import Any, Dict, NamedTuple, Optional, Union

from ..featurebank import ChecksumMismatch, FeatureBank
from ..hexfloat import decode_array, encode_array
from .demandmodel import ModelParams
from .errors import CheckpointError, InvalidModelConfig
from .types import ModelConfig, TrainingLog

__all__ = ("FORMAT_VERSION", "Checkpoint", "save_checkpoint", "load_checkpoint")

PathLike = Union[str, pathlib.Path]

FORMAT_VERSION = "deepdemand.checkpoint/1"


class Checkpoint(NamedTuple):
    """A loaded checkpoint and the provenance it was saved with."""

    params: ModelParams
    bank_checksum: str
    training_hash: str
    extraction_hash: str
    training: Optional[Dict[str, Any]] = None

    def check_bank(self, bank: FeatureBank) -> None:
        """Refuse a feature bank whose transform differs from training.

        Raises
        ------
        ChecksumMismatch
            If the bank's checksum is not the one recorded at training.

        """
        if bank.checksum() != self.bank_checksum:
            raise ChecksumMismatch(self.bank_checksum, bank.checksum())


def _config_to_dict(config: ModelConfig) -> Dict[str, Any]:
    return {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in config._asdict().items()
    }


def _config_from_dict(data: Dict[str, Any]) -> ModelConfig:
    fields = {
        key: tuple(value) if isinstance(value, list) else value
        for key, value in data.items()
    }
    return ModelConfig(**fields).validate()


def save_checkpoint(
    path: PathLike,
    params: ModelParams,
    *,
    bank_checksum: str,
    training_hash: str = "",
    extraction_hash: str = "",
    training: Optional[TrainingLog] = None,
) -> None:
    """Write parameters, constants and provenance as JSON.

    Floats are stored in hexadecimal so that loading reproduces
    predictions bit-exactly.
    """
    data = {
        "format": FORMAT_VERSION,
        "config": _config_to_dict(params.config),
        "layers": {
            name: {"dims": list(dims)}
            for name, dims in ModelParams.layer_dims(params.config).items()
        },
        "arrays": {name: encode_array(a) for name, a in params.blocks().items()},
        "bank_checksum": bank_checksum,
        "training_hash": training_hash,
        "extraction_hash": extraction_hash,
        "training": None if training is None else training.to_dict(),
    }
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, indent=1))
    tmp.replace(path)


def load_checkpoint(path: PathLike) -> Checkpoint:
    """Load a checkpoint written by `save_checkpoint`.

    Raises
    ------
    CheckpointError
        If the file is missing, malformed, of another format version, or its
        arrays do not fit the recorded architecture.

    """
    path = pathlib.Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise CheckpointError(f"Checkpoint {path} does not exist.") from None
    except ValueError as exc:
        raise CheckpointError(f"Checkpoint {path} is not valid JSON: {exc}") from exc
    if data.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format {data.get('format')!r}.")
    try:
        config = _config_from_dict(data["config"])
        params = ModelParams.zeros(config)
        arrays = data["arrays"]
        blocks = params.blocks()
        if set(arrays) != set(blocks):
            raise CheckpointError(f"Checkpoint {path} does not match its architecture.")
        for name, target in blocks.items():
            value = decode_array(arrays[name])
            if value.shape != target.shape:
                raise CheckpointError(
                    f"Array {name} has shape {value.shape}, expected {target.shape}."
                )
            target[...] = value
        return Checkpoint(
            params=params,
            bank_checksum=str(data["bank_checksum"]),
            training_hash=str(data.get("training_hash", "")),
            extraction_hash=str(data.get("extraction_hash", "")),
            training=data.get("training"),
        )
    except (KeyError, TypeError, ValueError, InvalidModelConfig) as exc:
        raise CheckpointError(f"Malformed checkpoint {path}: {exc}") from exc
