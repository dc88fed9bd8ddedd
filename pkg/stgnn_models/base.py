"""
Shared pieces of the forecasting models: the model spec, a dense layer and
the Forecaster base class every archetype derives from.
"""

from typing import Dict, Iterable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import ConfigurationError, DimensionError
from graph_construct import AdjMatrix, graph_deviation
from graph_ops import GRAPH_CONVS, GraphConv, create_graph_conv, uniform_weight, zero_bias
from tensor_core import Array, DiffTensor, Parameter, Tape, matmul, reshape, transpose

Archetype = Literal["rnn", "cnn", "attention"]


class ModelSpec(BaseModel):
    """Everything needed to build (and rebuild from a checkpoint) one forecaster."""
    model_config = ConfigDict(extra="forbid")

    archetype: Archetype
    graph_source: str = Field(default="fixed", description="fixed, sampled or adaptive-<variant>")
    conv: str = Field(default="diffusion", description="graph convolution operator by name")
    p: int = Field(default=12, ge=1)
    q: int = Field(default=12, ge=1)
    nodes: int = Field(default=1, ge=1)
    input_dim: int = Field(default=1, ge=1)
    output_dim: int = Field(default=1, ge=1)
    hidden: int = Field(default=16, ge=1)
    layers: int = Field(default=1, ge=1, description="GRU layers, ST-blocks or attention blocks")
    k: int = Field(default=2, ge=1, description="Chebyshev order, diffusion steps or hop count")
    gat_heads: int = Field(default=2, ge=1)
    beta: float = Field(default=0.05, ge=0.0, le=1.0)
    aggregation: str = "linear"
    kernel_size: int = Field(default=2, ge=2)
    attention_heads: int = Field(default=2, ge=1)
    positional_encoding: bool = True
    embedding_dim: int = Field(default=10, ge=1)
    alpha: float = Field(default=3.0, gt=0.0)
    temperature: float = Field(default=0.5, gt=0.0)
    seed: int = 0

    @field_validator("conv")
    @classmethod
    def _known_conv(cls, value: str) -> str:
        if value not in GRAPH_CONVS:
            raise ValueError(f"unknown graph convolution '{value}', expected one of {sorted(GRAPH_CONVS)}")
        return value

    @model_validator(mode="after")
    def _source_fits_conv(self):
        if self.conv == "cheb" and self.graph_source not in ("fixed", "adaptive-undirected"):
            raise ValueError(f"Chebyshev filters need an undirected graph; '{self.graph_source}' is directed")
        return self

    def conv_options(self, terminal: bool = True) -> dict:
        """Keyword arguments ``create_graph_conv`` needs for ``self.conv``."""
        if self.conv in ("cheb", "diffusion"):
            return {"k": self.k}
        if self.conv == "multi-hop":
            return {"k": self.k, "beta": self.beta, "aggregation": self.aggregation}
        if self.conv == "gat":
            return {"heads": self.gat_heads, "terminal": terminal}
        return {}


class Dense:
    """x W + b on the last axis."""

    def __init__(self, f_in: int, f_out: int, rng: np.random.Generator, prefix: str, zero_init: bool = False):
        if zero_init:
            self.weight = Parameter(f"{prefix}.w", np.zeros((f_in, f_out)))
        else:
            self.weight = uniform_weight(rng, f"{prefix}.w", (f_in, f_out), f_in)
        self.bias = zero_bias(f"{prefix}.b", f_out)

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.bias]

    def __call__(self, x: DiffTensor) -> DiffTensor:
        tape = x.tape
        return matmul(x, tape.watch(self.weight)) + tape.watch(self.bias)


def horizon_major(flat: DiffTensor, q: int, d_out: int) -> DiffTensor:
    """(B, N, Q*D') -> (B, Q, N, D')."""
    b, n = flat.shape[0], flat.shape[1]
    return transpose(reshape(flat, (b, n, q, d_out)), (0, 2, 1, 3))


class Forecaster:
    """Maps a (B, P, N, D) window to a (B, Q, N, D') forecast on a tape."""

    archetype = "base"

    def __init__(self, spec: ModelSpec, source):
        self.spec = spec
        self.source = source
        self.last_graph: Optional[AdjMatrix] = None
        self._params: Dict[str, Parameter] = {}
        self._register(source.parameters())

    def _register(self, params: Iterable[Parameter]) -> None:
        for param in params:
            if param.name in self._params:
                raise ConfigurationError(f"duplicate parameter name '{param.name}'")
            self._params[param.name] = param

    def _register_layer(self, layer) -> None:
        self._register(layer.parameters())

    def parameters(self) -> List[Parameter]:
        return list(self._params.values())

    def count_parameters(self) -> int:
        return sum(p.size for p in self._params.values())

    def _check_window(self, window: Array) -> None:
        spec = self.spec
        expected = (spec.p, spec.nodes, spec.input_dim)
        if window.ndim != 4 or window.shape[1:] != expected:
            raise DimensionError(f"forecast_{self.archetype}", window.shape, (-1,) + expected)

    def forward(self, tape: Tape, window: Array, training: bool = False,
                horizon: Optional[int] = None) -> DiffTensor:
        """Forecast on ``tape``; ``horizon`` limits the output to the first h steps where supported."""
        window = np.asarray(window, dtype=np.float64)
        self._check_window(window)
        self.last_graph = self.source.graph(tape, window, training)
        return self._forward(tape, window, self.last_graph, horizon)

    def _forward(self, tape: Tape, window: Array, graph: AdjMatrix, horizon: Optional[int]) -> DiffTensor:
        raise NotImplementedError

    def predict(self, window: Array) -> Array:
        """Inference forecast on a throwaway tape with the noise-free graph."""
        return self.forward(Tape(f"predict-{self.archetype}"), window, training=False).value

    def graph_penalty(self, weight: float) -> Optional[DiffTensor]:
        """
        Deviation of the expected learned graph from the configured prior, or None.

        Sampled sources compare their edge probabilities, not the last noisy draw.
        """
        prior = self.source.prior
        graph = self.last_graph
        if weight <= 0.0 or prior is None or graph is None or graph.tracked is None:
            return None
        expected = self.source.expected_graph(graph.tracked.tape, graph)
        return graph_deviation(expected, prior.weights, weight)


def make_conv(spec: ModelSpec, f_in: int, f_out: int, rng: np.random.Generator, prefix: str,
              terminal: bool = True) -> GraphConv:
    return create_graph_conv(spec.conv, f_in, f_out, rng, prefix=prefix, **spec.conv_options(terminal))
