"""
The MIT License (MIT)

Copyright (c) 2026-present Village

Permission is hereby granted, free of charge, to any person obtaining a
copy of this software and associated documentation files (the "Software"),
to deal in the Software without restriction, including without limitation
the rights to use, copy, modify, merge, publish, distribute, sublicense,
and/or sell copies of the Software, and to permit persons to whom the
Software is furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS
OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
DEALINGS IN THE SOFTWARE.
"""

from __future__ import annotations

import contextlib
import json
import logging
import math
import os
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
import scipy

from .errors import ConfigError
from .grid import read_binary, write_binary, write_csv
from .utils import Stopwatch

__all__ = (
    "MANIFEST_NAME",
    "TIMINGS_NAME",
    "to_jsonable",
    "write_json",
    "write_table",
    "write_field",
    "load_field",
    "RunManifest",
)

if TYPE_CHECKING:
    from typing import Any, Dict, Iterator, List, Optional, Sequence

    from .grid import GridField
    from .types.manifest import ManifestPayload
    from .utils import PathType

_log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TIMINGS_NAME = "timings.json"


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, Enum):
        return to_jsonable(value.value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isfinite(number):
            return number
        return "nan" if math.isnan(number) else ("inf" if number > 0 else "-inf")
    return value


def write_json(path: PathType, payload: Any) -> None:
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(text + "\n")


def write_table(path: PathType, header: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
    table = np.asarray(rows, dtype=np.float64).reshape(-1, len(header))
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


def write_field(field: GridField, directory: PathType, stem: str) -> List[str]:
    """Binary and CSV copies of a field; returns the file names written."""
    names = [f"{stem}.khes", f"{stem}.csv"]
    write_binary(field, os.path.join(directory, names[0]))
    write_csv(field, os.path.join(directory, names[1]))
    return names


def load_field(path: PathType, key: str = "field") -> GridField:
    if not os.path.isfile(path):
        raise ConfigError((key,), f"no field file at {path}")
    try:
        return read_binary(path)
    except OSError as exc:
        raise ConfigError((key,), f"cannot read {path}: {exc.strerror}") from None


class RunManifest:
    """Everything a command produced, written even when the command fails.

    Wall-clock timings go to a separate file so the manifest itself stays
    byte-identical across repeated runs.
    """

    __slots__ = ("command", "config", "seed", "artifacts", "stages", "verdicts", "exit_code", "error", "timings")

    def __init__(self, command: str, config: Optional[Dict[str, Any]] = None, seed: int = 0) -> None:
        self.command: str = command
        self.config: Dict[str, Any] = dict(config or {})
        self.seed: int = seed
        self.artifacts: List[str] = []
        self.stages: List[Dict[str, Any]] = []
        self.verdicts: Dict[str, bool] = {}
        self.exit_code: int = 0
        self.error: Optional[str] = None
        self.timings: Dict[str, float] = {}

    def add_artifacts(self, *names: str) -> None:
        for name in names:
            if name not in self.artifacts:
                self.artifacts.append(name)

    def add_stage(self, summary: Dict[str, Any]) -> None:
        self.stages.append(summary)

    def verdict(self, name: str, passed: bool) -> None:
        self.verdicts[name] = bool(passed)

    @contextlib.contextmanager
    def timed(self, name: str) -> Iterator[None]:
        with Stopwatch() as watch:
            yield
        self.timings[name] = self.timings.get(name, 0.0) + watch.elapsed

    def to_payload(self) -> ManifestPayload:
        from . import __version__

        return {
            "command": self.command,
            "version": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "seed": self.seed,
            "config": self.config,
            "artifacts": sorted(self.artifacts + [MANIFEST_NAME, TIMINGS_NAME]),
            "stages": self.stages,
            "verdicts": self.verdicts,
            "exit_code": self.exit_code,
            "error": self.error,
        }

    def write(self, directory: PathType) -> str:
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, MANIFEST_NAME)
        write_json(path, self.to_payload())
        write_json(os.path.join(directory, TIMINGS_NAME), self.timings)
        _log.info("wrote %s (exit code %d)", path, self.exit_code)
        return path

    def __repr__(self) -> str:
        return f"RunManifest(command={self.command!r}, exit_code={self.exit_code})"
