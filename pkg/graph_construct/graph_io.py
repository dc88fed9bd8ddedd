"""
CSV ingestion for graph inputs and CSV + JSON-sidecar export of built graphs.

    distances / edges:  from,to,value
    POI profiles:       node,category,count
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from errors import InputError
from graph_construct.types import AdjMatrix, DistanceTable, GraphKind, PoiProfile
from tools.artifact_tools import PathLike, atomic_write_json, read_matrix_csv, write_matrix_csv


def _read_table(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: malformed CSV ({e})") from None
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise InputError(f"{path}: missing columns {missing}")
    return frame


def _node_index(frame: pd.DataFrame, node_ids: Optional[Sequence[str]], columns: Sequence[str]) -> Dict[str, int]:
    if node_ids is None:
        seen: List[str] = []
        for col in columns:
            for value in frame[col].astype(str):
                if value not in seen:
                    seen.append(value)
        node_ids = seen
    return {str(node): i for i, node in enumerate(node_ids)}


def _lookup(index: Dict[str, int], value: Any, path: PathLike, line: int) -> int:
    key = str(value)
    if key not in index:
        raise InputError(f"{path}:{line}: unknown node '{key}'")
    return index[key]


def read_distance_csv(path: PathLike, node_ids: Optional[Sequence[str]] = None) -> DistanceTable:
    """Pairs not listed are unreachable; they receive the largest listed distance times ten."""
    frame = _read_table(path, ["from", "to", "value"])
    index = _node_index(frame, node_ids, ["from", "to"])
    values = pd.to_numeric(frame["value"], errors="coerce")
    bad = values.isna() | ~np.isfinite(values.fillna(0.0))
    if bad.any():
        raise InputError(f"{path}:{int(bad.idxmax()) + 2}: non-numeric distance")
    n = len(index)
    far = float(values.max()) * 10.0 if len(values) else 1.0
    d = np.full((n, n), far)
    np.fill_diagonal(d, 0.0)
    for row, (src, dst, value) in enumerate(zip(frame["from"], frame["to"], values)):
        i, j = _lookup(index, src, path, row + 2), _lookup(index, dst, path, row + 2)
        if i != j:
            d[i, j] = value
    return DistanceTable(d)


def read_edges_csv(path: PathLike, node_ids: Optional[Sequence[str]] = None) -> Tuple[List[Tuple[int, int]], int]:
    frame = _read_table(path, ["from", "to"])
    index = _node_index(frame, node_ids, ["from", "to"])
    edges = [
        (_lookup(index, src, path, row + 2), _lookup(index, dst, path, row + 2))
        for row, (src, dst) in enumerate(zip(frame["from"], frame["to"]))
    ]
    return edges, len(index)


def read_poi_csv(path: PathLike, node_ids: Optional[Sequence[str]] = None) -> PoiProfile:
    frame = _read_table(path, ["node", "category", "count"])
    counts = pd.to_numeric(frame["count"], errors="coerce")
    if counts.isna().any():
        raise InputError(f"{path}:{int(counts.isna().idxmax()) + 2}: non-numeric count")
    frame = frame.assign(count=counts, node=frame["node"].astype(str))
    table = frame.pivot_table(index="node", columns="category", values="count", aggfunc="sum", fill_value=0.0)
    if node_ids is not None:
        table = table.reindex([str(n) for n in node_ids], fill_value=0.0)
    return PoiProfile(table.to_numpy(dtype=np.float64), categories=[str(c) for c in table.columns])


def export_graph(graph: AdjMatrix, csv_path: PathLike, seed: Optional[int] = None) -> Path:
    """Write the weight matrix and a sidecar recording kind, parameters and seed."""
    csv_path = Path(csv_path)
    write_matrix_csv(csv_path, graph.weights)
    atomic_write_json(csv_path.with_suffix(".json"), {
        "kind": graph.kind.value,
        "directed": graph.directed,
        "nodes": graph.n,
        "params": {k: v for k, v in graph.params.items()},
        "seed": seed,
    })
    return csv_path


def load_graph(csv_path: PathLike) -> AdjMatrix:
    csv_path = Path(csv_path)
    weights = read_matrix_csv(csv_path)
    sidecar = csv_path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        return AdjMatrix(weights, GraphKind(meta["kind"]), directed=bool(meta["directed"]), params=meta.get("params", {}))
    return AdjMatrix(weights, GraphKind.DISTANCE, directed=not np.allclose(weights, weights.T))
