"""On-disk store of OD contexts, one JSON file per target edge."""
import json
import os
import pathlib
import re
from typing import Dict, Iterable, List, Optional, Union

from .errors import ContextFormatError, StaleContext
from .types import ODContext

__all__ = ("ContextStore",)

PathLike = Union[str, pathlib.Path]

_FILE_RE = re.compile(r"^edge_(?P<edge_id>-?\d+)\.json$")


class ContextStore:
    """A directory of per-target context files.

    Writes go to a temporary file that is then renamed over the final
    name, so a reader never sees a partial file and concurrent workers
    never collide.
    """

    def __init__(self, directory: PathLike):
        self.directory = pathlib.Path(directory)

    def path_for(self, edge_id: int) -> pathlib.Path:
        return self.directory / f"edge_{edge_id}.json"

    def __contains__(self, edge_id: object) -> bool:
        return isinstance(edge_id, int) and self.path_for(edge_id).exists()

    def edge_ids(self) -> List[int]:
        """Get the ids of all stored targets, ascending."""
        if not self.directory.exists():
            return []
        ids = []
        for path in self.directory.iterdir():
            match = _FILE_RE.match(path.name)
            if match:
                ids.append(int(match["edge_id"]))
        return sorted(ids)

    def write(self, context: ODContext) -> pathlib.Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(context.target_edge_id)
        tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
        tmp.write_text(json.dumps(context.to_dict(), separators=(",", ":")))
        os.replace(tmp, path)
        return path

    def read(self, edge_id: int, expected_hash: Optional[str] = None) -> ODContext:
        """Read one context.

        Raises
        ------
        ContextFormatError
            If the file is missing or malformed.
        StaleContext
            If ``expected_hash`` is given and differs from the file's.

        """
        path = self.path_for(edge_id)
        try:
            context = ODContext.from_dict(json.loads(path.read_text()))
        except FileNotFoundError:
            raise ContextFormatError(f"No context for edge {edge_id} in {self.directory}.")
        except (KeyError, ValueError, TypeError) as exc:
            raise ContextFormatError(f"Malformed context file {path}: {exc}") from exc
        if expected_hash is not None and context.extraction_hash != expected_hash:
            raise StaleContext(edge_id, expected_hash, context.extraction_hash)
        return context

    def read_many(
        self, edge_ids: Iterable[int], expected_hash: Optional[str] = None
    ) -> Dict[int, ODContext]:
        return {e: self.read(e, expected_hash) for e in edge_ids}
