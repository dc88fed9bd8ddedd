"""
Where a model's adjacency comes from on each forward pass: a fixed graph,
an adaptive graph learned from node embeddings, or a Gumbel-sampled graph
whose edge probabilities are learned.
"""

import math
from typing import List, Optional

import numpy as np

from errors import ConfigurationError, ContractError, DimensionError
from graph_construct import (
    ADAPTIVE_VARIANTS, AdjMatrix, GraphKind, adaptive_graph, init_embeddings, sampled_tensor,
)
from tensor_core import Array, DiffTensor, Parameter, Tape, matmul, sigmoid, stable_sigmoid, transpose


class GraphSource:
    name = "base"
    prior: Optional[AdjMatrix] = None

    def parameters(self) -> List[Parameter]:
        return []

    def graph(self, tape: Tape, window: Array, training: bool) -> AdjMatrix:
        raise NotImplementedError

    def expected_graph(self, tape: Tape, last: AdjMatrix) -> Optional[DiffTensor]:
        """Tracked graph the deviation regularizer compares with the prior."""
        return last.tracked


class FixedGraph(GraphSource):
    name = "fixed"

    def __init__(self, adjacency: Optional[AdjMatrix]):
        self.adjacency = adjacency

    def graph(self, tape, window, training):
        if self.adjacency is None:
            raise ContractError("fixed graph source was built without an adjacency matrix")
        return self.adjacency


class AdaptiveGraph(GraphSource):
    """Embedding-parameterised adjacency, rebuilt on every forward pass."""

    def __init__(self, variant: str, n: int, rng: np.random.Generator, dim: int, alpha: float,
                 feature_dim: int, prior: Optional[AdjMatrix] = None):
        self.variant = variant
        self.name = f"adaptive-{variant}"
        self.embeddings = init_embeddings(variant, n, rng, dim=dim, alpha=alpha, feature_dim=feature_dim,
                                          prefix="graph")
        self.prior = prior

    def parameters(self):
        return self.embeddings.parameters()

    def graph(self, tape, window, training):
        # the attention variant reads each node's mean reading over the batch and the window
        x = window.mean(axis=(0, 1)) if self.variant == "attention" else None
        return adaptive_graph(self.variant, self.embeddings, x=x, tape=tape)


class SampledGraph(GraphSource):
    """
    Edge probabilities theta = sigmoid(E1 E2^T), so logit(theta) = E1 E2^T.

    Training passes draw a fresh relaxed sample from the source's own seeded
    generator; inference uses the noise-free sigmoid(logit(theta) / s).
    """

    name = "sampled"

    def __init__(self, n: int, rng: np.random.Generator, dim: int, temperature: float, seed: int,
                 prior: Optional[AdjMatrix] = None):
        bound = 1.0 / math.sqrt(dim)
        self.e1 = Parameter("graph.e1", rng.uniform(-bound, bound, size=(n, dim)))
        self.e2 = Parameter("graph.e2", rng.uniform(-bound, bound, size=(n, dim)))
        self.temperature = temperature
        self.noise = np.random.default_rng(seed)
        self.prior = prior

    def parameters(self):
        return [self.e1, self.e2]

    def probabilities(self) -> Array:
        return stable_sigmoid(self.e1.value @ self.e2.value.T)

    def expected_graph(self, tape, last):
        # edge probabilities theta, independent of the drawn noise
        return sigmoid(matmul(tape.watch(self.e1), transpose(tape.watch(self.e2))))

    def graph(self, tape, window, training):
        logits = matmul(tape.watch(self.e1), transpose(tape.watch(self.e2)))
        tracked = sampled_tensor(tape, logits, self.temperature, self.noise if training else None)
        return AdjMatrix(tracked.value, GraphKind.SAMPLED, directed=True,
                         params={"temperature": self.temperature}, tracked=tracked)


GRAPH_SOURCES = ["fixed", "sampled"] + [f"adaptive-{v}" for v in ADAPTIVE_VARIANTS]


def make_graph_source(name: str, n: int, rng: np.random.Generator, fixed: Optional[AdjMatrix] = None,
                      feature_dim: int = 1, dim: int = 10, alpha: float = 3.0, temperature: float = 0.5,
                      seed: int = 0, prior: Optional[AdjMatrix] = None) -> GraphSource:
    """Build a graph source by name; ``prior`` feeds the deviation regularizer of learned sources."""
    for graph in (fixed, prior):
        if graph is not None and graph.n != n:
            raise DimensionError("graph source", graph.weights.shape, (n, n))
    if name == "fixed":
        return FixedGraph(fixed)
    if name == "sampled":
        return SampledGraph(n, rng, dim, temperature, seed, prior=prior)
    if name.startswith("adaptive-") and name[len("adaptive-"):] in ADAPTIVE_VARIANTS:
        return AdaptiveGraph(name[len("adaptive-"):], n, rng, dim, alpha, feature_dim, prior=prior)
    raise ConfigurationError(f"unknown graph source '{name}', expected one of {GRAPH_SOURCES}", key="graph_source")
