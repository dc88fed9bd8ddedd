"""
Graph containers and the inputs the constructors consume.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from errors import DimensionError, InputError
from tensor_core import Array, DiffTensor, Parameter, Tape

SYMMETRY_TOLERANCE = 1e-12
THETA_MARGIN = 1e-6


class GraphKind(str, Enum):
    DISTANCE = "distance"
    CONNECTIVITY = "connectivity"
    SEMANTIC = "semantic"
    FUNCTIONALITY = "functionality"
    DISTRIBUTION = "distribution"
    ADAPTIVE_DIRECT = "adaptive-direct"
    ADAPTIVE_UNDIRECTED = "adaptive-undirected"
    ADAPTIVE_DIRECTED = "adaptive-directed"
    ADAPTIVE_UNIDIRECTED = "adaptive-unidirected"
    ADAPTIVE_ATTENTION = "adaptive-attention"
    SAMPLED = "sampled"


def is_symmetric(matrix: Array, tol: float = SYMMETRY_TOLERANCE) -> bool:
    scale = max(1.0, float(np.max(np.abs(matrix))))
    return bool(np.all(np.abs(matrix - matrix.T) <= tol * scale))


@dataclass
class AdjMatrix:
    """Nonnegative n x n weights tagged with the construction that produced them.

    ``tracked`` is set when the weights are a differentiable function of
    parameters on some tape (adaptive and sampled graphs).
    """
    weights: Array
    kind: GraphKind
    directed: bool
    params: Dict[str, Any] = field(default_factory=dict)
    tracked: Optional[DiffTensor] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionError("AdjMatrix", w.shape)
        if not np.all(np.isfinite(w)):
            raise InputError(f"{self.kind.value} graph has non-finite weights")
        if np.any(w < 0.0):
            raise InputError(f"{self.kind.value} graph has negative weights")
        if not self.directed and not is_symmetric(w):
            raise InputError(f"{self.kind.value} graph is flagged undirected but is not symmetric")
        self.weights = w
        self.kind = GraphKind(self.kind)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def on(self, tape: Tape) -> DiffTensor:
        """The weights as a tensor on ``tape``: the tracked node if it lives there, else a constant."""
        if self.tracked is not None and self.tracked.tape is tape:
            return self.tracked
        return tape.constant(self.weights, name=f"A[{self.kind.value}]")

    def permuted(self, perm) -> "AdjMatrix":
        perm = np.asarray(perm)
        return AdjMatrix(self.weights[np.ix_(perm, perm)], self.kind, self.directed, dict(self.params))

    def detached(self) -> "AdjMatrix":
        return AdjMatrix(self.weights.copy(), self.kind, self.directed, dict(self.params))


@dataclass
class DistanceTable:
    d: Array

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionError("DistanceTable", d.shape)
        if not np.all(np.isfinite(d)):
            raise InputError("distance table contains non-finite entries")
        if np.any(d < 0.0):
            raise InputError("distance table contains negative entries")
        if np.any(np.diag(d) != 0.0):
            raise InputError("distance table diagonal must be zero")
        self.d = d

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass
class PoiProfile:
    """Per-node nonnegative vectors over point-of-interest categories (rows = nodes)."""
    vectors: Array
    categories: Optional[list] = None

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionError("PoiProfile", v.shape)
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise InputError("POI profiles must be finite and nonnegative")
        empty = np.flatnonzero(~np.any(v > 0.0, axis=1))
        if empty.size:
            raise InputError(f"POI profile of node {int(empty[0])} has no nonzero entry")
        self.vectors = v


@dataclass
class EmbeddingPair:
    """Learnable node embeddings for the adaptive constructions.

    ``e2`` is None for single-embedding variants. ``w`` backs the direct
    variant; ``w1``/``w2`` are the attention projections over ``<X || E>``.
    """
    e1: Parameter
    e2: Optional[Parameter] = None
    alpha: float = 3.0
    w: Optional[Parameter] = None
    w1: Optional[Parameter] = None
    w2: Optional[Parameter] = None

    def __post_init__(self):
        if self.e1.value.ndim != 2 or self.e1.value.shape[1] < 1:
            raise DimensionError("EmbeddingPair.e1", self.e1.shape)
        if self.e2 is not None and self.e2.shape != self.e1.shape:
            raise DimensionError("EmbeddingPair", self.e1.shape, self.e2.shape)
        if self.alpha <= 0.0:
            raise InputError("adaptive saturation alpha must be positive")

    @property
    def n(self) -> int:
        return self.e1.shape[0]

    @property
    def dim(self) -> int:
        return self.e1.shape[1]

    def parameters(self):
        # the direct variant learns W alone
        if self.w is not None:
            return [self.w]
        return [p for p in (self.e1, self.e2, self.w1, self.w2) if p is not None]


@dataclass
class ProbabilityGraph:
    """Edge-retention probabilities theta and the relaxation temperature s."""
    theta: Array
    temperature: float = 0.5

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionError("ProbabilityGraph", t.shape)
        if not np.all(np.isfinite(t)):
            raise InputError("probability graph contains non-finite entries")
        if self.temperature <= 0.0:
            raise InputError("Gumbel temperature must be positive")
        self.theta = np.clip(t, THETA_MARGIN, 1.0 - THETA_MARGIN)

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    def logits(self) -> Array:
        return np.log(self.theta) - np.log1p(-self.theta)
