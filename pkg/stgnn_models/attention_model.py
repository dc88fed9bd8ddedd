"""
Temporal self-attention per node, interleaved with graph convolution over
nodes, pooled over positions into a direct multi-horizon head.
"""

import math
from typing import List, Optional

import numpy as np

from errors import ConfigurationError
from graph_construct import AdjMatrix
from graph_ops import uniform_weight
from stgnn_models.base import Dense, Forecaster, ModelSpec, horizon_major, make_conv
from tensor_core import (
    Array, DiffTensor, Parameter, concat, matmul, mul, reduce_mean, relu, softmax, take_slice, transpose,
)


def sinusoidal_encoding(positions: int, width: int) -> Array:
    """Fixed sin/cos encodings, shape (positions, width)."""
    pos = np.arange(positions)[:, None]
    i = np.arange(width)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / width)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


class TemporalAttentionBlock:
    """Multi-head scaled dot-product attention over the P positions of each node."""

    def __init__(self, width: int, heads: int, rng: np.random.Generator, prefix: str):
        if heads < 1 or width % heads:
            raise ConfigurationError(f"{heads} attention heads do not divide model width {width}",
                                     key="attention_heads")
        self.width = width
        self.heads = heads
        self.head_width = width // heads
        self.w_query = uniform_weight(rng, f"{prefix}.wq", (width, width), width)
        self.w_key = uniform_weight(rng, f"{prefix}.wk", (width, width), width)
        self.w_value = uniform_weight(rng, f"{prefix}.wv", (width, width), width)
        self.w_out = uniform_weight(rng, f"{prefix}.wo", (width, width), width)
        self.last_weights: List[Array] = []

    def parameters(self) -> List[Parameter]:
        return [self.w_query, self.w_key, self.w_value, self.w_out]

    def __call__(self, x: DiffTensor) -> DiffTensor:
        """x: (B, N, P, C) -> (B, N, P, C) with a residual connection."""
        tape = x.tape
        q = matmul(x, tape.watch(self.w_query))
        k = matmul(x, tape.watch(self.w_key))
        v = matmul(x, tape.watch(self.w_value))
        scale = 1.0 / math.sqrt(self.head_width)
        heads, self.last_weights = [], []
        for h in range(self.heads):
            cols = (Ellipsis, slice(h * self.head_width, (h + 1) * self.head_width))
            q_h, k_h, v_h = take_slice(q, cols), take_slice(k, cols), take_slice(v, cols)
            weights = softmax(mul(scale, matmul(q_h, transpose(k_h))), axis=-1)
            self.last_weights.append(weights.value)
            heads.append(matmul(weights, v_h))
        merged = heads[0] if len(heads) == 1 else concat(heads, axis=-1)
        return x + matmul(merged, tape.watch(self.w_out))


class AttentionForecaster(Forecaster):
    archetype = "attention"

    def __init__(self, spec: ModelSpec, source, rng: np.random.Generator):
        super().__init__(spec, source)
        self.input_projection = Dense(spec.input_dim, spec.hidden, rng, "input")
        self.temporal = [TemporalAttentionBlock(spec.hidden, spec.attention_heads, rng, f"attn.{i}")
                         for i in range(spec.layers)]
        self.spatial = [make_conv(spec, spec.hidden, spec.hidden, rng, f"attn.{i}.gc") for i in range(spec.layers)]
        self.head = Dense(spec.hidden, spec.q * spec.output_dim, rng, "head")
        self.encoding = sinusoidal_encoding(spec.p, spec.hidden) if spec.positional_encoding else None
        for layer in [self.input_projection] + self.temporal + self.spatial + [self.head]:
            self._register_layer(layer)

    def _forward(self, tape, window, graph: AdjMatrix, horizon: Optional[int]) -> DiffTensor:
        spec = self.spec
        h = self.input_projection(tape.constant(window, name="window"))  # (B, P, N, C)
        if self.encoding is not None:
            h = h + tape.constant(np.broadcast_to(self.encoding[:, None, :], h.shape[1:]), name="positional")
        for attention, conv in zip(self.temporal, self.spatial):
            h = transpose(attention(transpose(h, (0, 2, 1, 3))), (0, 2, 1, 3))
            h = h + relu(conv(graph, h))
        pooled = reduce_mean(h, axis=1)
        return horizon_major(self.head(pooled), spec.q, spec.output_dim)
