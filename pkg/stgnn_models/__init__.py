"""Spatial-temporal forecasting models: recurrent, convolutional and attention archetypes"""

from .base import Dense, Forecaster, ModelSpec, make_conv
from .graph_source import (
    GRAPH_SOURCES, AdaptiveGraph, FixedGraph, GraphSource, SampledGraph, make_graph_source,
)
from .rnn_model import GCGRUCell, RNNForecaster, gcgru_step
from .cnn_model import CNNForecaster, GatedTemporalConv, STBlock, receptive_field, required_blocks
from .attention_model import AttentionForecaster, TemporalAttentionBlock, sinusoidal_encoding
from .factory import (
    FORECASTERS, build_model, count_parameters, forecast, forecast_attention, forecast_cnn,
    forecast_rnn, model_spec,
)

__all__ = [
    # Shared
    'Dense',
    'Forecaster',
    'ModelSpec',
    'make_conv',

    # Graph sources
    'GRAPH_SOURCES',
    'AdaptiveGraph',
    'FixedGraph',
    'GraphSource',
    'SampledGraph',
    'make_graph_source',

    # Archetypes
    'GCGRUCell',
    'RNNForecaster',
    'gcgru_step',
    'CNNForecaster',
    'GatedTemporalConv',
    'STBlock',
    'receptive_field',
    'required_blocks',
    'AttentionForecaster',
    'TemporalAttentionBlock',
    'sinusoidal_encoding',

    # Factory
    'FORECASTERS',
    'build_model',
    'count_parameters',
    'forecast',
    'forecast_rnn',
    'forecast_cnn',
    'forecast_attention',
    'model_spec',
]
