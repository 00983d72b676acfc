"""Errors for the cli package."""
import pathlib
from typing import Any, Union

from ..errors import DeepDemandException, InputError

__all__ = ("CLIException", "ConfigError", "MissingInput", "ArtifactMismatch")


class CLIException(DeepDemandException):
    """Base exception for this package."""


class ConfigError(CLIException, InputError):
    """The run configuration has an unknown key or an unusable value."""


class MissingInput(CLIException, InputError):
    """An input path named by the configuration does not exist.

    Attributes
    ----------
    path : pathlib.Path
        The missing path.
    key : str
        The configuration key naming it.

    """

    def __init__(self, path: Union[str, pathlib.Path], key: str, *args: Any):
        self.path = pathlib.Path(path)
        self.key = key
        super().__init__(*(args or (f"Input not found: {self.path} (from {key}).",)))


class ArtifactMismatch(CLIException, InputError):
    """An artifact was produced under a different configuration.

    Attributes
    ----------
    artifact : str
        What was refused.
    expected : str
        Hash of the current configuration.
    actual : str
        Hash recorded in the artifact.

    """

    def __init__(self, artifact: str, expected: str, actual: str, *args: Any):
        self.artifact = artifact
        self.expected = expected
        self.actual = actual
        super().__init__(
            *(
                args
                or (
                    f"{artifact} was produced under configuration {actual}, but the "
                    f"current configuration is {expected}. Re-run the upstream stage "
                    "or restore the configuration it used.",
                )
            )
        )
