"""
Artifact helpers shared by the pipeline steps: atomic writes, JSON-lines logs,
CSV matrices and the run-directory lock.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import numpy as np
import pandas as pd

from errors import CompatibilityError, InputError

PathLike = Union[str, Path]


def atomic_write_bytes(path: PathLike, data: bytes) -> Path:
    """Write ``data`` next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_name(path.name + ".tmp")
    with open(temp_path, "wb") as f:
        f.write(data)
    os.replace(temp_path, path)
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: PathLike, data: Dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def atomic_write_frame(path: PathLike, frame: pd.DataFrame) -> Path:
    return atomic_write_text(path, frame.to_csv(index=False, float_format="%.10g"))


def write_jsonl(path: PathLike, records: Iterable[Dict[str, Any]]) -> Path:
    lines = [json.dumps(r, sort_keys=True) for r in records]
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_jsonl(path: PathLike) -> List[Dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_matrix_csv(path: PathLike, matrix: np.ndarray) -> Path:
    frame = pd.DataFrame(matrix)
    return atomic_write_text(path, frame.to_csv(index=False, header=False, float_format="%.17g"))


def read_matrix_csv(path: PathLike) -> np.ndarray:
    try:
        frame = pd.read_csv(path, header=None)
    except FileNotFoundError:
        raise InputError(f"matrix file not found: {path}") from None
    matrix = frame.to_numpy(dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"{path}: expected a square matrix, got shape {matrix.shape}")
    return matrix


class RunDirectoryLock:
    """Exclusive ownership of a run directory for the lifetime of one command."""

    def __init__(self, directory: PathLike):
        self.path = Path(directory) / ".lock"
        self._fd = None

    def __enter__(self) -> "RunDirectoryLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CompatibilityError(f"run directory is locked by another command: {self.path}") from None
        os.write(self._fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc) -> None:
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None
        self.path.unlink(missing_ok=True)
