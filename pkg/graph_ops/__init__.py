"""Graph convolution operators and the layers built on them"""

from .normalize import sym_normalize, row_normalize, reverse_row_normalize, with_self_loops
from .spectral import LAMBDA_MAX, SpectralBasis, normalized_laplacian, scaled_laplacian_tensor, cheb_conv
from .spatial import (
    AGGREGATIONS, gcn_layer, diffusion_conv, multi_hop_conv, aggregate_hops, gat_layer,
    masked_attention_conv, dot_product_attention, neighbor_mask,
)
from .layers import (
    GRAPH_CONVS, GraphConv, ChebConv, GCNConv, DiffusionConv, MultiHopConv, GATConv,
    MaskedAttentionConv, create_graph_conv, uniform_weight, zero_bias,
)

__all__ = [
    # Normalisation
    'sym_normalize',
    'row_normalize',
    'reverse_row_normalize',
    'with_self_loops',

    # Spectral
    'LAMBDA_MAX',
    'SpectralBasis',
    'normalized_laplacian',
    'scaled_laplacian_tensor',
    'cheb_conv',

    # Spatial
    'AGGREGATIONS',
    'gcn_layer',
    'diffusion_conv',
    'multi_hop_conv',
    'aggregate_hops',
    'gat_layer',
    'masked_attention_conv',
    'dot_product_attention',
    'neighbor_mask',

    # Layers
    'GRAPH_CONVS',
    'GraphConv',
    'ChebConv',
    'GCNConv',
    'DiffusionConv',
    'MultiHopConv',
    'GATConv',
    'MaskedAttentionConv',
    'create_graph_conv',
    'uniform_weight',
    'zero_bias',
]
