"""
Graph-convolution layers that own their parameters.

Layers are created by name through ``create_graph_conv``. Each one maps
node features (..., N, f_in) to (..., N, f_out) given an AdjMatrix; a
learned graph is used through its tracked tensor when it lives on the same
tape as the input.
"""

import math
from typing import Callable, Dict, List, Optional

import numpy as np

from errors import ConfigurationError
from graph_construct import AdjMatrix
from graph_ops.spatial import (
    AGGREGATIONS, diffusion_conv, dot_product_attention, gat_layer, gcn_layer,
    masked_attention_conv, multi_hop_conv,
)
from graph_ops.spectral import cheb_conv, scaled_laplacian_tensor
from tensor_core import DiffTensor, Parameter, matmul


def uniform_weight(rng: np.random.Generator, name: str, shape, fan_in: int) -> Parameter:
    """Uniform in +-1/sqrt(fan_in)."""
    bound = 1.0 / math.sqrt(fan_in)
    return Parameter(name, rng.uniform(-bound, bound, size=shape))


def zero_bias(name: str, width: int) -> Parameter:
    return Parameter(name, np.zeros(width))


class GraphConv:
    """Base class: subclasses fill ``self.params`` and implement ``forward``."""

    kind = "base"

    def __init__(self, f_in: int, f_out: int, prefix: str):
        if f_in < 1 or f_out < 1:
            raise ConfigurationError(f"{self.kind}: feature widths must be positive, got {f_in} -> {f_out}")
        self.f_in = f_in
        self.f_out = f_out
        self.prefix = prefix
        self.params: Dict[str, Parameter] = {}

    def _add(self, param: Parameter) -> Parameter:
        self.params[param.name] = param
        return param

    def parameters(self) -> List[Parameter]:
        return list(self.params.values())

    def count_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def __call__(self, graph: AdjMatrix, x: DiffTensor) -> DiffTensor:
        return self.forward(graph, x)

    def forward(self, graph: AdjMatrix, x: DiffTensor) -> DiffTensor:
        raise NotImplementedError


class ChebConv(GraphConv):
    kind = "cheb"

    def __init__(self, f_in, f_out, rng, prefix="cheb", k: int = 2):
        super().__init__(f_in, f_out, prefix)
        if k < 1:
            raise ConfigurationError(f"Chebyshev order K must be >= 1, got {k}", key="k")
        self.k = k
        self.theta = [self._add(uniform_weight(rng, f"{prefix}.theta{i}", (f_in, f_out), f_in * k)) for i in range(k)]
        self.bias = self._add(zero_bias(f"{prefix}.b", f_out))

    def forward(self, graph, x):
        tape = x.tape
        scaled = scaled_laplacian_tensor(tape, graph)
        return cheb_conv(scaled, x, [tape.watch(t) for t in self.theta], self.k) + tape.watch(self.bias)


class GCNConv(GraphConv):
    kind = "gcn"

    def __init__(self, f_in, f_out, rng, prefix="gcn"):
        super().__init__(f_in, f_out, prefix)
        self.weight = self._add(uniform_weight(rng, f"{prefix}.w", (f_in, f_out), f_in))
        self.bias = self._add(zero_bias(f"{prefix}.b", f_out))

    def forward(self, graph, x):
        tape = x.tape
        return gcn_layer(graph, x, tape.watch(self.weight), tape.watch(self.bias))


class DiffusionConv(GraphConv):
    kind = "diffusion"

    def __init__(self, f_in, f_out, rng, prefix="diffusion", k: int = 2):
        super().__init__(f_in, f_out, prefix)
        if k < 1:
            raise ConfigurationError(f"diffusion steps K must be >= 1, got {k}", key="k")
        self.k = k
        fan_in = 2 * k * f_in
        self.theta_fwd = [self._add(uniform_weight(rng, f"{prefix}.fwd{i}", (f_in, f_out), fan_in)) for i in range(k)]
        self.theta_bwd = [self._add(uniform_weight(rng, f"{prefix}.bwd{i}", (f_in, f_out), fan_in)) for i in range(k)]
        self.bias = self._add(zero_bias(f"{prefix}.b", f_out))

    def forward(self, graph, x):
        tape = x.tape
        out = diffusion_conv(graph, x, [tape.watch(t) for t in self.theta_fwd],
                             [tape.watch(t) for t in self.theta_bwd], self.k)
        return out + tape.watch(self.bias)


class MultiHopConv(GraphConv):
    """Mix-hop propagation; a linear input projection is added when f_in != f_out."""

    kind = "multi-hop"

    def __init__(self, f_in, f_out, rng, prefix="multihop", k: int = 3, beta: float = 0.05,
                 aggregation: str = "linear"):
        super().__init__(f_in, f_out, prefix)
        if k < 1:
            raise ConfigurationError(f"hop count K must be >= 1, got {k}", key="k")
        if not 0.0 <= beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {beta}", key="beta")
        if aggregation not in AGGREGATIONS:
            raise ConfigurationError(f"unknown aggregation '{aggregation}', expected one of {AGGREGATIONS}",
                                     key="aggregation")
        self.k, self.beta, self.aggregation = k, beta, aggregation
        self.projection = None
        if f_in != f_out:
            self.projection = self._add(uniform_weight(rng, f"{prefix}.proj", (f_in, f_out), f_in))
        self.hops = [self._add(uniform_weight(rng, f"{prefix}.w{i}", (f_out, f_out), f_out)) for i in range(1, k)]
        self.alphas = self.query = None
        if aggregation == "linear":
            self.alphas = self._add(Parameter(f"{prefix}.alpha", np.full(k, 1.0 / k)))
        elif aggregation == "attention":
            self.query = self._add(uniform_weight(rng, f"{prefix}.query", (f_out, 1), f_out))
        self.bias = self._add(zero_bias(f"{prefix}.b", f_out))

    def forward(self, graph, x):
        tape = x.tape
        h = x if self.projection is None else matmul(x, tape.watch(self.projection))
        out = multi_hop_conv(
            graph, h, [tape.watch(w) for w in self.hops], self.k, self.beta,
            alphas=tape.watch(self.alphas) if self.alphas is not None else None,
            mode=self.aggregation,
            query=tape.watch(self.query) if self.query is not None else None,
        )
        return out + tape.watch(self.bias)


class GATConv(GraphConv):
    kind = "gat"

    def __init__(self, f_in, f_out, rng, prefix="gat", heads: int = 2, terminal: bool = False):
        super().__init__(f_in, f_out, prefix)
        if heads < 1 or f_out % heads:
            raise ConfigurationError(f"output width {f_out} is not divisible into {heads} heads", key="heads")
        self.terminal = terminal
        width = f_out // heads
        self.heads = [
            (
                self._add(uniform_weight(rng, f"{prefix}.h{i}.w", (f_in, width), f_in)),
                self._add(uniform_weight(rng, f"{prefix}.h{i}.a_src", (width, 1), 2 * width)),
                self._add(uniform_weight(rng, f"{prefix}.h{i}.a_dst", (width, 1), 2 * width)),
            )
            for i in range(heads)
        ]
        self.last_attention: List[DiffTensor] = []

    def forward(self, graph, x):
        tape = x.tape
        out, self.last_attention = gat_layer(
            graph, x, [tuple(tape.watch(p) for p in head) for head in self.heads], terminal=self.terminal,
        )
        return out


class MaskedAttentionConv(GraphConv):
    """((A + I) * M) H W where M is scaled dot-product attention over the nodes."""

    kind = "masked-attention"

    def __init__(self, f_in, f_out, rng, prefix="masked", attention_dim: Optional[int] = None):
        super().__init__(f_in, f_out, prefix)
        dim = attention_dim or f_out
        self.w_query = self._add(uniform_weight(rng, f"{prefix}.wq", (f_in, dim), f_in))
        self.w_key = self._add(uniform_weight(rng, f"{prefix}.wk", (f_in, dim), f_in))
        self.weight = self._add(uniform_weight(rng, f"{prefix}.w", (f_in, f_out), f_in))
        self.bias = self._add(zero_bias(f"{prefix}.b", f_out))

    def forward(self, graph, x):
        tape = x.tape
        m = dot_product_attention(x, tape.watch(self.w_query), tape.watch(self.w_key))
        return masked_attention_conv(graph, m, x, tape.watch(self.weight)) + tape.watch(self.bias)


GRAPH_CONVS: Dict[str, Callable[..., GraphConv]] = {
    "cheb": ChebConv,
    "gcn": GCNConv,
    "diffusion": DiffusionConv,
    "multi-hop": MultiHopConv,
    "gat": GATConv,
    "masked-attention": MaskedAttentionConv,
}


def create_graph_conv(name: str, f_in: int, f_out: int, rng: np.random.Generator, **kwargs) -> GraphConv:
    """Create a graph-convolution layer by operator name."""
    try:
        cls = GRAPH_CONVS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown graph convolution '{name}', expected one of {sorted(GRAPH_CONVS)}", key="conv",
        ) from None
    try:
        return cls(f_in, f_out, rng, **kwargs)
    except TypeError as e:
        raise ConfigurationError(f"{name}: {e}", key="conv") from None
