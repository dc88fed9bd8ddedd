"""Graph construction: pre-defined, adaptive and sampled adjacency matrices"""

from .types import (
    AdjMatrix, DistanceTable, EmbeddingPair, GraphKind, PoiProfile, ProbabilityGraph, is_symmetric,
)
from .similarity import dtw_distance, js_divergence
from .predefined import (
    build_distance_graph, build_connectivity_graph, build_semantic_graph,
    build_functionality_graph, build_distribution_graph,
)
from .learned import (
    ADAPTIVE_VARIANTS, adaptive_graph, adaptive_tensor, init_embeddings,
    sample_graph_gumbel, sampled_tensor, graph_deviation,
)
from .graph_io import read_distance_csv, read_edges_csv, read_poi_csv, export_graph, load_graph

__all__ = [
    # Types
    'AdjMatrix',
    'DistanceTable',
    'EmbeddingPair',
    'GraphKind',
    'PoiProfile',
    'ProbabilityGraph',
    'is_symmetric',

    # Similarities
    'dtw_distance',
    'js_divergence',

    # Pre-defined graphs
    'build_distance_graph',
    'build_connectivity_graph',
    'build_semantic_graph',
    'build_functionality_graph',
    'build_distribution_graph',

    # Learned graphs
    'ADAPTIVE_VARIANTS',
    'adaptive_graph',
    'adaptive_tensor',
    'init_embeddings',
    'sample_graph_gumbel',
    'sampled_tensor',
    'graph_deviation',

    # I/O
    'read_distance_csv',
    'read_edges_csv',
    'read_poi_csv',
    'export_graph',
    'load_graph',
]
