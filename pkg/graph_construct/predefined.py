"""
Graphs built from prior knowledge: road distance, connectivity, series
similarity (semantic), POI similarity (functionality) and value
distributions.
"""

from itertools import combinations
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from errors import InputError
from graph_construct.similarity import dtw_distance, js_divergence, smoothed_histogram
from graph_construct.types import AdjMatrix, DistanceTable, GraphKind, PoiProfile, is_symmetric
from tensor_core import Array

DEFAULT_BINS = 32
DEFAULT_SMOOTHING = 1e-6


def build_distance_graph(dt: DistanceTable, sigma2: float, eps: float) -> AdjMatrix:
    """Thresholded Gaussian kernel: exp(-d^2 / sigma^2), zeroed below eps and on the diagonal."""
    if sigma2 <= 0.0:
        raise InputError("sigma2 must be positive")
    if not 0.0 <= eps <= 1.0:
        raise InputError("eps must lie in [0, 1]")
    weights = np.exp(-(dt.d ** 2) / sigma2)
    weights[weights < eps] = 0.0
    np.fill_diagonal(weights, 0.0)
    return AdjMatrix(
        weights, GraphKind.DISTANCE, directed=not is_symmetric(dt.d),
        params={"sigma2": sigma2, "eps": eps},
    )


def build_connectivity_graph(edges: Iterable[Tuple[int, int]], n: int, directed: bool) -> AdjMatrix:
    """Binary graph: 1 for every listed pair (both directions when undirected)."""
    weights = np.zeros((n, n))
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"edge ({i}, {j}) out of range for {n} nodes")
        weights[i, j] = 1.0
        if not directed:
            weights[j, i] = 1.0
    np.fill_diagonal(weights, 0.0)
    return AdjMatrix(weights, GraphKind.CONNECTIVITY, directed=directed, params={"edges": int(weights.sum())})


def _node_series(x: Array, channel: int) -> Array:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise InputError(f"expected a time x nodes x features tensor, got shape {x.shape}")
    if x.shape[0] < 2:
        raise InputError("at least two time steps are required")
    if not 0 <= channel < x.shape[2]:
        raise InputError(f"channel {channel} out of range for {x.shape[2]} channels")
    return x[:, :, channel]


def build_semantic_graph(x: Array, channel: int, eps: float, band: Optional[int] = None) -> AdjMatrix:
    """Edge between nodes whose series are within DTW distance eps of each other."""
    series = _node_series(x, channel)
    n = series.shape[1]
    weights = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        if dtw_distance(series[:, i], series[:, j], band) <= eps:
            weights[i, j] = weights[j, i] = 1.0
    return AdjMatrix(weights, GraphKind.SEMANTIC, directed=False,
                     params={"channel": channel, "eps": eps, "band": band})


def build_functionality_graph(profiles: PoiProfile) -> AdjMatrix:
    """Cosine similarity of POI category vectors."""
    v = profiles.vectors
    norms = np.linalg.norm(v, axis=1)
    sim = (v @ v.T) / np.outer(norms, norms)
    sim = np.clip(0.5 * (sim + sim.T), 0.0, 1.0)
    np.fill_diagonal(sim, 1.0)
    return AdjMatrix(sim, GraphKind.FUNCTIONALITY, directed=False,
                     params={"categories": v.shape[1]})


def build_distribution_graph(x: Array, channel: int, bins: int = DEFAULT_BINS,
                             smoothing: float = DEFAULT_SMOOTHING) -> AdjMatrix:
    """1 - JSD between per-node value histograms over the global channel range."""
    if bins < 2:
        raise InputError("bins must be at least 2")
    series = _node_series(x, channel)
    lo, hi = float(series.min()), float(series.max())
    if lo == hi:
        raise InputError(f"channel {channel} is constant; distribution graph is degenerate")
    n = series.shape[1]
    hists: Sequence[Array] = [smoothed_histogram(series[:, i], lo, hi, bins, smoothing) for i in range(n)]
    weights = np.eye(n)
    for i, j in combinations(range(n), 2):
        weights[i, j] = weights[j, i] = 1.0 - js_divergence(hists[i], hists[j])
    return AdjMatrix(weights, GraphKind.DISTRIBUTION, directed=False,
                     params={"channel": channel, "bins": bins, "smoothing": smoothing})
