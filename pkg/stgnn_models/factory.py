"""
Model construction by archetype name and the single-window forecast helpers.
"""

from typing import Dict, Optional, Type

import numpy as np
from pydantic import ValidationError

from errors import ConfigurationError, ContractError
from graph_construct import AdjMatrix
from stgnn_models.attention_model import AttentionForecaster
from stgnn_models.base import Forecaster, ModelSpec
from stgnn_models.cnn_model import CNNForecaster
from stgnn_models.graph_source import make_graph_source
from stgnn_models.rnn_model import RNNForecaster
from tensor_core import Array

FORECASTERS: Dict[str, Type[Forecaster]] = {
    "rnn": RNNForecaster,
    "cnn": CNNForecaster,
    "attention": AttentionForecaster,
}


def model_spec(**fields) -> ModelSpec:
    """Validate keyword fields into a ModelSpec, reporting the first bad key."""
    try:
        return ModelSpec(**fields)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(p) for p in first["loc"]) or None
        raise ConfigurationError(first["msg"], key=key) from None


def build_model(spec: ModelSpec, graph: Optional[AdjMatrix] = None, prior: Optional[AdjMatrix] = None) -> Forecaster:
    """Seeded construction: the same spec always yields the same initial parameters."""
    if spec.conv == "cheb" and spec.graph_source == "fixed" and graph is not None and graph.directed:
        raise ConfigurationError(
            f"Chebyshev filters need an undirected graph; the fixed {graph.kind.value} graph is directed", key="conv",
        )
    rng = np.random.default_rng(spec.seed)
    source = make_graph_source(
        spec.graph_source, spec.nodes, rng, fixed=graph, feature_dim=spec.input_dim,
        dim=spec.embedding_dim, alpha=spec.alpha, temperature=spec.temperature,
        seed=spec.seed + 1, prior=prior,
    )
    return FORECASTERS[spec.archetype](spec, source, rng)


def count_parameters(spec: ModelSpec) -> int:
    """Exact number of scalar learnables, graph-source embeddings included."""
    return build_model(spec).count_parameters()


def forecast(model: Forecaster, window: Array) -> Array:
    """Inference forecast for one P x N x D window (Q x N x D') or a batch of them."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim == 3:
        return model.predict(window[None])[0]
    return model.predict(window)


def _forecast_as(archetype: str):
    def run(model: Forecaster, window: Array) -> Array:
        if model.archetype != archetype:
            raise ContractError(f"forecast_{archetype} called on a {model.archetype} model")
        return forecast(model, window)
    run.__name__ = f"forecast_{archetype}"
    run.__doc__ = f"Inference forecast of a {archetype} model."
    return run


forecast_rnn = _forecast_as("rnn")
forecast_cnn = _forecast_as("cnn")
forecast_attention = _forecast_as("attention")
