# app/infrastructure/file_storage/run_files.py
"""CSV and JSON run outputs. UTF-8, LF line endings, floats with 17 significant digits."""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np
from pydantic import BaseModel

from app.core.exceptions.exceptions import RepositoryException

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, BaseModel):
        return value.model_dump()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _scrub(value: Any) -> Any:
    """NaN becomes null; infinities stay (Python's json writes them as Infinity)."""
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _scrub(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_scrub(v) for v in value]
    return value


class RunFileStorage:
    """Writes one run's CSV/JSON outputs under a directory."""

    def __init__(self, root: PathLike):
        self.root = Path(root)

    def path(self, name: str) -> Path:
        return self.root / name

    def _ensure_root(self) -> None:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise RepositoryException("create", "output directory", {"path": str(self.root), "error": str(e)})

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        self._ensure_root()
        target = self.path(name)
        try:
            with target.open("w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_value(v) for v in row])
        except OSError as e:
            raise RepositoryException("write", name, {"path": str(target), "error": str(e)})
        logger.debug("wrote %s", target)
        return target

    def write_models(self, name: str, models: Sequence[BaseModel], header: Sequence[str]) -> Path:
        """CSV from pydantic rows, columns in `header` order."""
        return self.write_csv(name, header, ([getattr(m, h) for h in header] for m in models))

    def write_json(self, name: str, payload: Any) -> Path:
        self._ensure_root()
        target = self.path(name)
        if isinstance(payload, BaseModel):
            payload = payload.model_dump()
        text = json.dumps(_scrub(payload), indent=2, sort_keys=True, default=_json_default)
        try:
            target.write_text(text + "\n", encoding="utf-8", newline="\n")
        except OSError as e:
            raise RepositoryException("write", name, {"path": str(target), "error": str(e)})
        logger.debug("wrote %s", target)
        return target

    def read_json(self, name: str) -> Any:
        target = self.path(name)
        try:
            return json.loads(target.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise RepositoryException("read", name, {"path": str(target), "error": str(e)})

