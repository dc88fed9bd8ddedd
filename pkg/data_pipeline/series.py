"""
Raw traffic series and CSV ingestion.

A channel file has a header row of node ids followed by one row per time
step. The JSON metadata file declares the rest:

    {"nodes": ["717", "718"], "interval_minutes": 5, "channels": ["speed"],
     "files": {"speed": "speed.csv"}, "start_slot": 0}

``files`` is only needed for multi-channel data; a single channel is read
from the path given to ``ingest_csv``. Exact zeros mark missing readings.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from errors import DimensionError, InputError
from tensor_core import Array
from tools.artifact_tools import PathLike

MINUTES_PER_DAY = 1440


@dataclass
class RawSeries:
    """T x N x D readings with node ids, sampling interval and channel names."""
    values: Array
    node_ids: List[str]
    interval_minutes: int = 5
    channels: List[str] = field(default_factory=lambda: ["value"])
    start_slot: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise DimensionError("RawSeries", v.shape)
        if not np.all(np.isfinite(v)):
            raise InputError("series contains non-finite readings")
        if len(self.node_ids) != v.shape[1]:
            raise InputError(f"{len(self.node_ids)} node ids for {v.shape[1]} series columns")
        if len(self.channels) != v.shape[2]:
            raise InputError(f"{len(self.channels)} channel names for {v.shape[2]} channels")
        if self.interval_minutes < 1:
            raise InputError("sampling interval must be a positive number of minutes")
        self.values = v
        self.node_ids = [str(n) for n in self.node_ids]

    @property
    def steps(self) -> int:
        return self.values.shape[0]

    @property
    def nodes(self) -> int:
        return self.values.shape[1]

    @property
    def features(self) -> int:
        return self.values.shape[2]

    @property
    def slots_per_day(self) -> Optional[int]:
        if MINUTES_PER_DAY % self.interval_minutes:
            return None
        return MINUTES_PER_DAY // self.interval_minutes

    def channel_index(self, channel) -> int:
        if isinstance(channel, int):
            if not 0 <= channel < self.features:
                raise InputError(f"channel index {channel} out of range for {self.features} channels")
            return channel
        if channel not in self.channels:
            raise InputError(f"unknown channel '{channel}', available: {self.channels}")
        return self.channels.index(channel)


class SeriesStats(BaseModel):
    """Per-dataset summary in the shape of a dataset overview table."""
    nodes: int
    steps: int
    channels: List[str]
    interval_minutes: int
    missing_ratio: float


def compute_stats(rs: RawSeries) -> SeriesStats:
    return SeriesStats(
        nodes=rs.nodes,
        steps=rs.steps,
        channels=list(rs.channels),
        interval_minutes=rs.interval_minutes,
        missing_ratio=float(np.mean(rs.values == 0.0)),
    )


def _read_channel(path: Path, node_ids: Optional[List[str]]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: malformed row ({e})") from None
    except pd.errors.EmptyDataError:
        raise InputError(f"{path}: empty file") from None
    if frame.empty:
        raise InputError(f"{path}: no data rows")
    if node_ids is not None and [str(c) for c in frame.columns] != node_ids:
        raise InputError(f"{path}: header does not match the declared nodes")

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().to_numpy()
    if bad.any():
        row, col = (int(i) for i in np.argwhere(bad)[0])
        raise InputError(f"{path}:{row + 2}: non-numeric cell {frame.iat[row, col]!r} in column {frame.columns[col]!r}")
    return numeric


def ingest_csv(path: PathLike, metadata_path: Optional[PathLike] = None) -> RawSeries:
    """Read one CSV per channel into a RawSeries; malformed cells are reported with their line."""
    path = Path(path)
    meta = {}
    if metadata_path is not None:
        try:
            meta = json.loads(Path(metadata_path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError(f"metadata file not found: {metadata_path}") from None
        except json.JSONDecodeError as e:
            raise InputError(f"{metadata_path}: invalid JSON ({e.msg})") from None
    base = Path(metadata_path).parent if metadata_path is not None else path.parent

    channels = [str(c) for c in meta.get("channels", ["value"])]
    files = meta.get("files")
    if files is None:
        if len(channels) != 1:
            raise InputError("metadata lists several channels but no per-channel files")
        channel_paths = [path]
    else:
        missing = [c for c in channels if c not in files]
        if missing:
            raise InputError(f"metadata has no file for channels {missing}")
        channel_paths = [base / files[c] for c in channels]

    node_ids = [str(n) for n in meta["nodes"]] if "nodes" in meta else None
    frames = []
    for channel_path in channel_paths:
        frame = _read_channel(channel_path, node_ids)
        if node_ids is None:
            node_ids = [str(c) for c in frame.columns]
        if frames and frame.shape != frames[0].shape:
            raise InputError(f"{channel_path}: shape {frame.shape} disagrees with {channel_paths[0]} {frames[0].shape}")
        frames.append(frame)

    values = np.stack([f.to_numpy(dtype=np.float64) for f in frames], axis=-1)
    return RawSeries(
        values=values,
        node_ids=node_ids,
        interval_minutes=int(meta.get("interval_minutes", 5)),
        channels=channels,
        start_slot=int(meta.get("start_slot", 0)),
    )
