"""
Learned graphs: adaptive adjacency from node embeddings and Gumbel-sampled
graphs from edge probabilities, plus the prior-deviation regularizer.
"""

import math
from typing import Optional

import numpy as np

from errors import ContractError, InputError
from graph_construct.types import AdjMatrix, EmbeddingPair, GraphKind, ProbabilityGraph
from tensor_core import (
    Array, DiffTensor, Parameter, Tape, concat, matmul, mul, reduce_sum, relu, sigmoid,
    softmax, stable_sigmoid, tanh, transpose,
)

DEFAULT_ALPHA = 3.0
DEFAULT_EMBEDDING_DIM = 10
DEFAULT_TEMPERATURE = 0.5

ADAPTIVE_VARIANTS = {
    "direct": (GraphKind.ADAPTIVE_DIRECT, True),
    "undirected": (GraphKind.ADAPTIVE_UNDIRECTED, False),
    "directed": (GraphKind.ADAPTIVE_DIRECTED, True),
    "unidirected": (GraphKind.ADAPTIVE_UNIDIRECTED, True),
    "attention": (GraphKind.ADAPTIVE_ATTENTION, True),
}


def init_embeddings(variant: str, n: int, rng: np.random.Generator, dim: int = DEFAULT_EMBEDDING_DIM,
                    alpha: float = DEFAULT_ALPHA, feature_dim: Optional[int] = None,
                    prefix: str = "graph") -> EmbeddingPair:
    """Seeded parameters for one adaptive variant."""
    if variant not in ADAPTIVE_VARIANTS:
        raise InputError(f"unknown adaptive variant '{variant}'")
    bound = 1.0 / math.sqrt(dim)

    def uniform(name, shape, b=bound):
        return Parameter(f"{prefix}.{name}", rng.uniform(-b, b, size=shape))

    e1 = uniform("e1", (n, dim))
    if variant == "direct":
        return EmbeddingPair(e1=e1, alpha=alpha, w=Parameter(f"{prefix}.w", rng.uniform(0.0, 1.0, size=(n, n))))
    if variant in ("directed", "unidirected"):
        return EmbeddingPair(e1=e1, e2=uniform("e2", (n, dim)), alpha=alpha)
    if variant == "attention":
        if feature_dim is None:
            raise ContractError("attention adaptive graph needs the node feature width")
        width = feature_dim + dim
        b = 1.0 / math.sqrt(width)
        return EmbeddingPair(e1=e1, alpha=alpha, w1=uniform("w1", (width, dim), b), w2=uniform("w2", (width, dim), b))
    return EmbeddingPair(e1=e1, alpha=alpha)


def adaptive_tensor(tape: Tape, variant: str, emb: EmbeddingPair, x: Optional[Array] = None) -> DiffTensor:
    """The adaptive adjacency as a tracked tensor on ``tape``."""
    if variant == "direct":
        if emb.w is None:
            raise ContractError("direct adaptive graph needs its parameter matrix W")
        return relu(tape.watch(emb.w))

    e1 = tape.watch(emb.e1)
    if variant == "undirected":
        return relu(tanh(mul(emb.alpha, matmul(e1, transpose(e1)))))
    if variant in ("directed", "unidirected"):
        e2 = tape.watch(emb.e2) if emb.e2 is not None else e1
        m = matmul(e1, transpose(e2))
        if variant == "unidirected":
            m = m - matmul(e2, transpose(e1))
        return relu(tanh(mul(emb.alpha, m)))
    if variant == "attention":
        if x is None:
            raise ContractError("attention adaptive graph requires node features X")
        if emb.w1 is None or emb.w2 is None:
            raise ContractError("attention adaptive graph requires projections W1 and W2")
        z = concat([tape.constant(np.asarray(x, dtype=np.float64)), e1], axis=-1)
        scores = matmul(matmul(z, tape.watch(emb.w1)), transpose(matmul(z, tape.watch(emb.w2))))
        return softmax(mul(1.0 / math.sqrt(emb.dim), scores), axis=-1)
    raise InputError(f"unknown adaptive variant '{variant}'")


def adaptive_graph(variant: str, emb: EmbeddingPair, x: Optional[Array] = None,
                   tape: Optional[Tape] = None) -> AdjMatrix:
    """Adaptive adjacency (direct, undirected, directed, unidirected or attention)."""
    if variant not in ADAPTIVE_VARIANTS:
        raise InputError(f"unknown adaptive variant '{variant}'")
    tape = Tape(f"adaptive-{variant}") if tape is None else tape
    tracked = adaptive_tensor(tape, variant, emb, x)
    kind, directed = ADAPTIVE_VARIANTS[variant]
    return AdjMatrix(tracked.value, kind, directed=directed,
                     params={"alpha": emb.alpha, "dim": emb.dim}, tracked=tracked)


def gumbel_noise(rng: np.random.Generator, shape) -> Array:
    """g1 - g2 for independent standard Gumbel draws (a standard logistic sample)."""
    return rng.gumbel(size=shape) - rng.gumbel(size=shape)


def sample_graph_gumbel(pg: ProbabilityGraph, seed: int) -> AdjMatrix:
    """One relaxed Bernoulli draw per edge: sigmoid((logit theta + g1 - g2) / s)."""
    rng = np.random.default_rng(seed)
    noise = gumbel_noise(rng, pg.theta.shape)
    weights = stable_sigmoid((pg.logits() + noise) / pg.temperature)
    return AdjMatrix(weights, GraphKind.SAMPLED, directed=True,
                     params={"temperature": pg.temperature, "seed": seed})


def sampled_tensor(tape: Tape, logits: DiffTensor, temperature: float,
                   rng: Optional[np.random.Generator]) -> DiffTensor:
    """Tracked relaxed sample; ``rng=None`` gives the noise-free graph used at inference."""
    if rng is not None:
        logits = logits + tape.constant(gumbel_noise(rng, logits.shape))
    return sigmoid(mul(1.0 / temperature, logits))


def graph_deviation(graph: DiffTensor, prior: Array, weight: float) -> DiffTensor:
    """weight * ||A - A_prior||_F^2 for a tracked graph."""
    diff = graph - graph.tape.constant(np.asarray(prior, dtype=np.float64))
    return mul(weight, reduce_sum(mul(diff, diff)))
