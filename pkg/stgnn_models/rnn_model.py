"""
Graph-convolutional GRU encoder-decoder.

Every gate transform is a graph convolution over [X_t || H], so the
recurrence carries both input-to-state and state-to-state spatial mixing.
The decoder feeds back its own previous prediction, starting from zeros.
"""

from typing import List, Optional

import numpy as np

from errors import DimensionError
from graph_construct import AdjMatrix
from stgnn_models.base import Dense, Forecaster, ModelSpec, make_conv
from tensor_core import DiffTensor, Parameter, Tape, concat, reshape, sigmoid, tanh


class GCGRUCell:
    """GRU cell whose reset, update and candidate transforms are independent graph convolutions."""

    def __init__(self, spec: ModelSpec, input_dim: int, hidden: int, rng: np.random.Generator, prefix: str):
        self.input_dim = input_dim
        self.hidden = hidden
        width = input_dim + hidden
        self.reset = make_conv(spec, width, hidden, rng, f"{prefix}.reset")
        self.update = make_conv(spec, width, hidden, rng, f"{prefix}.update")
        self.candidate = make_conv(spec, width, hidden, rng, f"{prefix}.candidate")

    def parameters(self) -> List[Parameter]:
        return self.reset.parameters() + self.update.parameters() + self.candidate.parameters()

    def __call__(self, graph: AdjMatrix, x: DiffTensor, h: DiffTensor) -> DiffTensor:
        return gcgru_step(self, graph, x, h)


def gcgru_step(cell: GCGRUCell, graph: AdjMatrix, x: DiffTensor, h_prev: DiffTensor) -> DiffTensor:
    """
    r = sigmoid(GC([X || H])), u = sigmoid(GC([X || H])),
    c = tanh(GC([X || r * H])), H' = u * H + (1 - u) * c.
    """
    if x.shape[-1] != cell.input_dim or h_prev.shape[-1] != cell.hidden or x.shape[:-1] != h_prev.shape[:-1]:
        raise DimensionError("gcgru_step", x.shape, h_prev.shape)
    xh = concat([x, h_prev], axis=-1)
    r = sigmoid(cell.reset(graph, xh))
    u = sigmoid(cell.update(graph, xh))
    c = tanh(cell.candidate(graph, concat([x, r * h_prev], axis=-1)))
    return u * h_prev + (1.0 - u) * c


class RNNForecaster(Forecaster):
    archetype = "rnn"

    def __init__(self, spec: ModelSpec, source, rng: np.random.Generator):
        super().__init__(spec, source)
        self.encoder = [
            GCGRUCell(spec, spec.input_dim if i == 0 else spec.hidden, spec.hidden, rng, f"encoder.{i}")
            for i in range(spec.layers)
        ]
        self.decoder = [
            GCGRUCell(spec, spec.output_dim if i == 0 else spec.hidden, spec.hidden, rng, f"decoder.{i}")
            for i in range(spec.layers)
        ]
        # zero-initialised so an untrained model forecasts the (scaled) mean
        self.projection = Dense(spec.hidden, spec.output_dim, rng, "decoder.out", zero_init=True)
        for layer in self.encoder + self.decoder + [self.projection]:
            self._register_layer(layer)

    def _stack(self, cells: List[GCGRUCell], graph: AdjMatrix, x: DiffTensor,
               states: List[DiffTensor]) -> List[DiffTensor]:
        new_states = []
        for cell, h in zip(cells, states):
            x = cell(graph, x, h)
            new_states.append(x)
        return new_states

    def _forward(self, tape: Tape, window, graph, horizon: Optional[int]) -> DiffTensor:
        spec = self.spec
        steps = spec.q if horizon is None else max(1, min(horizon, spec.q))
        batch = window.shape[0]
        states = [tape.constant(np.zeros((batch, spec.nodes, spec.hidden)), name=f"h0.{i}")
                  for i in range(spec.layers)]

        for t in range(spec.p):
            states = self._stack(self.encoder, graph, tape.constant(window[:, t], name=f"x{t}"), states)

        prediction = tape.constant(np.zeros((batch, spec.nodes, spec.output_dim)), name="go")
        outputs = []
        for _ in range(steps):
            states = self._stack(self.decoder, graph, prediction, states)
            prediction = self.projection(states[-1])
            outputs.append(reshape(prediction, (batch, 1, spec.nodes, spec.output_dim)))
        return outputs[0] if len(outputs) == 1 else concat(outputs, axis=1)
