"""
Synthetic traffic for desk-scale runs.

Nodes are scattered in a 10 km square and linked by a thresholded Gaussian
distance graph. Each node carries a daily sinusoid whose phase follows its
position, plus AR(1) noise diffused over the graph, so neighbors correlate
more strongly than distant pairs.
"""

from dataclasses import dataclass

import numpy as np

from errors import InputError
from graph_construct import AdjMatrix, DistanceTable, build_distance_graph
from data_pipeline.series import RawSeries

SLOTS_PER_DAY = 288
AREA_KM = 10.0
BASE_LEVEL = 50.0
DAILY_AMPLITUDE = 10.0
AR_COEFFICIENT = 0.8
NOISE_SCALE = 2.0
GRAPH_EPS = 0.1


@dataclass
class SyntheticDataset:
    series: RawSeries
    graph: AdjMatrix
    distances: DistanceTable
    positions: np.ndarray


def synth_traffic(n_nodes: int, steps: int, seed: int, missing_fraction: float = 0.0) -> SyntheticDataset:
    if n_nodes < 2:
        raise InputError(f"synthetic data needs at least 2 nodes, got {n_nodes}")
    if steps < SLOTS_PER_DAY:
        raise InputError(f"synthetic data needs at least one day ({SLOTS_PER_DAY} steps), got {steps}")
    if not 0.0 <= missing_fraction < 1.0:
        raise InputError(f"missing fraction must lie in [0, 1), got {missing_fraction}")
    rng = np.random.default_rng(seed)

    positions = rng.uniform(0.0, AREA_KM, size=(n_nodes, 2))
    d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    np.fill_diagonal(d, 0.0)
    distances = DistanceTable(d)
    sigma2 = float(np.std(d[~np.eye(n_nodes, dtype=bool)])) ** 2
    graph = build_distance_graph(distances, sigma2, GRAPH_EPS)

    # row-normalized (A + I) spreads each innovation over the node's neighborhood
    spread = graph.weights + np.eye(n_nodes)
    spread /= spread.sum(axis=1, keepdims=True)

    t = np.arange(steps)[:, None]
    phase = positions[:, 0] / AREA_KM * (SLOTS_PER_DAY / 4.0)
    seasonal = BASE_LEVEL + DAILY_AMPLITUDE * np.sin(2.0 * np.pi * (t + phase[None, :]) / SLOTS_PER_DAY)

    noise = np.zeros((steps, n_nodes))
    innovations = rng.normal(0.0, NOISE_SCALE, size=(steps, n_nodes)) @ spread.T
    for step in range(1, steps):
        noise[step] = AR_COEFFICIENT * noise[step - 1] + innovations[step]

    values = np.maximum(seasonal + noise, 1.0)
    if missing_fraction > 0.0:
        values[rng.random(values.shape) < missing_fraction] = 0.0

    series = RawSeries(
        values=values[:, :, None],
        node_ids=[f"n{i}" for i in range(n_nodes)],
        interval_minutes=5,
        channels=["speed"],
        start_slot=0,
    )
    return SyntheticDataset(series=series, graph=graph, distances=distances, positions=positions)
