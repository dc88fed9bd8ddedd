"""
Gated temporal convolution + graph convolution ST-blocks with a direct
multi-horizon output head.
"""

from typing import List, Optional

import numpy as np

from errors import ConfigurationError
from graph_construct import AdjMatrix
from graph_ops import uniform_weight, zero_bias
from stgnn_models.base import Dense, Forecaster, ModelSpec, horizon_major, make_conv
from tensor_core import Array, DiffTensor, Parameter, Tape, concat, matmul, relu, sigmoid, take_slice, tanh


def receptive_field(kernel_size: int, dilations: List[int]) -> int:
    """1 + sum((kernel - 1) * dilation) over the stacked causal convolutions."""
    return 1 + sum((kernel_size - 1) * d for d in dilations)


def block_dilations(blocks: int) -> List[int]:
    return [2 ** i for i in range(blocks)]


def required_blocks(kernel_size: int, p: int) -> int:
    blocks = 1
    while receptive_field(kernel_size, block_dilations(blocks)) < p:
        blocks += 1
    return blocks


class GatedTemporalConv:
    """Causal dilated convolution over time: tanh(first half) * sigmoid(second half)."""

    def __init__(self, channels: int, kernel_size: int, dilation: int, rng: np.random.Generator, prefix: str):
        self.channels = channels
        self.kernel_size = kernel_size
        self.dilation = dilation
        fan_in = kernel_size * channels
        self.taps = [uniform_weight(rng, f"{prefix}.tap{j}", (channels, 2 * channels), fan_in)
                     for j in range(kernel_size)]
        self.bias = zero_bias(f"{prefix}.b", 2 * channels)

    def parameters(self) -> List[Parameter]:
        return self.taps + [self.bias]

    def __call__(self, x: DiffTensor) -> DiffTensor:
        """x: (B, T, N, C) -> (B, T, N, C); output at t reads inputs t, t-d, ..., t-(k-1)d only."""
        tape = x.tape
        b, steps, n, c = x.shape
        pad = (self.kernel_size - 1) * self.dilation
        padded = concat([tape.constant(np.zeros((b, pad, n, c))), x], axis=1)
        out = tape.watch(self.bias)
        for j, tap in enumerate(self.taps):
            # tap j looks back (kernel_size - 1 - j) * dilation steps
            start = j * self.dilation
            shifted = take_slice(padded, (slice(None), slice(start, start + steps)))
            out = matmul(shifted, tape.watch(tap)) + out
        filt = take_slice(out, (Ellipsis, slice(0, c)))
        gate = take_slice(out, (Ellipsis, slice(c, 2 * c)))
        return tanh(filt) * sigmoid(gate)


class STBlock:
    """Gated temporal convolution, then a graph convolution at every step, with a residual connection."""

    def __init__(self, spec: ModelSpec, dilation: int, rng: np.random.Generator, prefix: str):
        self.temporal = GatedTemporalConv(spec.hidden, spec.kernel_size, dilation, rng, f"{prefix}.tcn")
        self.spatial = make_conv(spec, spec.hidden, spec.hidden, rng, f"{prefix}.gc")

    def parameters(self) -> List[Parameter]:
        return self.temporal.parameters() + self.spatial.parameters()

    def __call__(self, graph: AdjMatrix, x: DiffTensor) -> DiffTensor:
        return x + relu(self.spatial(graph, self.temporal(x)))


class CNNForecaster(Forecaster):
    archetype = "cnn"

    def __init__(self, spec: ModelSpec, source, rng: np.random.Generator):
        super().__init__(spec, source)
        self.dilations = block_dilations(spec.layers)
        field = receptive_field(spec.kernel_size, self.dilations)
        if field < spec.p:
            need = required_blocks(spec.kernel_size, spec.p)
            raise ConfigurationError(
                f"receptive field {field} of {spec.layers} blocks (kernel {spec.kernel_size}) is shorter than "
                f"P = {spec.p}; at least {need} blocks are required", key="layers",
            )
        self.receptive_field = field
        self.input_projection = Dense(spec.input_dim, spec.hidden, rng, "input")
        self.blocks = [STBlock(spec, d, rng, f"block.{i}") for i, d in enumerate(self.dilations)]
        self.head = Dense(spec.hidden, spec.q * spec.output_dim, rng, "head")
        self.last_block_outputs: List[Array] = []
        for layer in [self.input_projection] + self.blocks + [self.head]:
            self._register_layer(layer)

    def _forward(self, tape: Tape, window, graph, horizon: Optional[int]) -> DiffTensor:
        spec = self.spec
        h = self.input_projection(tape.constant(window, name="window"))
        self.last_block_outputs = []
        for block in self.blocks:
            h = block(graph, h)
            self.last_block_outputs.append(h.value)
        last = take_slice(h, (slice(None), spec.p - 1))
        return horizon_major(self.head(last), spec.q, spec.output_dim)
