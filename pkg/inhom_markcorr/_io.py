import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
import pandas as pd

from ._exceptions import OutputError

FLOAT_FORMAT = "%.15g"


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


class OutputWriter:
    """Writes result files under one directory; every write is temp + rename."""

    def __init__(self, base_dir: Union[str, Path]):
        self.base_dir = Path(base_dir)
        try:
            self.base_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            self._handle_error(exc, self.base_dir)

    def _build_path(self, name: str) -> Path:
        return self.base_dir / name

    def _handle_error(self, exc: OSError, path: Path):
        raise OutputError(
            f"cannot write {path}: {exc.strerror or exc}",
            {"path": str(path), "errno": exc.errno},
        ) from exc

    def _write_atomic(self, name: str, text: str) -> Path:
        path = self._build_path(name)
        tmp = None
        try:
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except OSError as exc:
            if tmp is not None and os.path.exists(tmp):
                os.unlink(tmp)
            self._handle_error(exc, path)
        return path

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        return self._write_atomic(name, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        text = json.dumps(data, indent=2, sort_keys=True, default=_json_default)
        return self._write_atomic(name, text + "\n")
