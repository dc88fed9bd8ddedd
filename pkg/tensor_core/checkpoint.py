"""
Parameter checkpoints: a JSON manifest plus one flat little-endian float64 blob.

    <stem>.json  {"format", "dtype", "parameters": [{name, shape, offset}], "metadata"}
    <stem>.bin   concatenated parameter values in manifest order
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from errors import CompatibilityError
from tensor_core.tape import Array, Parameter
from tools.artifact_tools import PathLike, atomic_write_bytes, atomic_write_json

CHECKPOINT_FORMAT = "stgbench-checkpoint/1"
_DTYPE = "<f8"


def checkpoint_paths(stem: PathLike) -> Tuple[Path, Path]:
    stem = Path(stem)
    return stem.with_suffix(".json"), stem.with_suffix(".bin")


def save_checkpoint(stem: PathLike, params: Sequence[Parameter], metadata: Optional[Dict[str, Any]] = None) -> Path:
    manifest_path, blob_path = checkpoint_paths(stem)
    entries = []
    chunks = []
    offset = 0
    for param in params:
        raw = np.ascontiguousarray(param.value, dtype=_DTYPE).tobytes()
        entries.append({"name": param.name, "shape": list(param.shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    atomic_write_bytes(blob_path, b"".join(chunks))
    atomic_write_json(manifest_path, {
        "format": CHECKPOINT_FORMAT,
        "dtype": _DTYPE,
        "parameters": entries,
        "metadata": metadata or {},
    })
    return manifest_path


def load_checkpoint(stem: PathLike) -> Tuple[Dict[str, Array], Dict[str, Any]]:
    manifest_path, blob_path = checkpoint_paths(stem)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        blob = blob_path.read_bytes()
    except FileNotFoundError as e:
        raise CompatibilityError(f"checkpoint not found: {e.filename}") from None
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise CompatibilityError(f"{manifest_path}: unknown checkpoint format {manifest.get('format')!r}")

    values: Dict[str, Array] = {}
    for entry in manifest["parameters"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        flat = np.frombuffer(blob, dtype=_DTYPE, count=count, offset=entry["offset"])
        values[entry["name"]] = flat.astype(np.float64).reshape(entry["shape"])
    return values, manifest["metadata"]


def restore_parameters(params: Sequence[Parameter], values: Dict[str, Array]) -> None:
    """Copy checkpoint values into ``params``; names and shapes must match exactly."""
    expected = {p.name for p in params}
    if expected != set(values):
        missing = sorted(expected - set(values))
        extra = sorted(set(values) - expected)
        raise CompatibilityError(f"checkpoint parameters differ (missing {missing}, unexpected {extra})")
    for param in params:
        if tuple(values[param.name].shape) != tuple(param.shape):
            raise CompatibilityError(
                f"parameter {param.name}: checkpoint shape {values[param.name].shape} != model shape {param.shape}"
            )
        param.value = values[param.name].copy()
