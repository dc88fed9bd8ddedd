"""
Spatial graph convolutions.

Every function takes node features of shape (..., N, F) with the node axis
second to last, so a leading batch or time axis passes straight through the
(N, N) propagation matrix.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import ContractError, DimensionError
from graph_construct import AdjMatrix
from graph_ops.normalize import reverse_row_normalize, row_normalize, sym_normalize, with_self_loops
from tensor_core import (
    DiffTensor, broadcast, concat, leaky_relu, matmul, mul, reduce_max, reduce_mean,
    reduce_sum, relu, reshape, sigmoid, softmax, take_slice, transpose,
)

AGGREGATIONS = ("linear", "max", "avg", "attention")
MASK_FILL = -1e9


def _check_nodes(op: str, graph: AdjMatrix, x: DiffTensor) -> None:
    if x.ndim < 2 or x.shape[-2] != graph.n:
        raise DimensionError(op, graph.weights.shape, x.shape)


def gcn_layer(graph: AdjMatrix, x: DiffTensor, w: DiffTensor, b: Optional[DiffTensor] = None) -> DiffTensor:
    """(I + D^-1/2 A D^-1/2) X W + b."""
    _check_nodes("gcn", graph, x)
    propagation = sym_normalize(graph.on(x.tape))
    xw = matmul(x, w)
    out = xw + matmul(propagation, xw)
    return out if b is None else out + b


def diffusion_conv(graph: AdjMatrix, x: DiffTensor, theta_forward: Sequence[DiffTensor],
                   theta_backward: Sequence[DiffTensor], k: Optional[int] = None) -> DiffTensor:
    """sum_k (D_O^-1 A)^k X Theta_k1 + (D_I^-1 A^T)^k X Theta_k2."""
    _check_nodes("diffusion", graph, x)
    k = len(theta_forward) if k is None else k
    if k < 1 or len(theta_forward) < k or len(theta_backward) < k:
        raise ContractError(f"diffusion_conv: need {k} forward and backward filter matrices (K >= 1)")
    adj = graph.on(x.tape)
    p_fwd, p_bwd = row_normalize(adj), reverse_row_normalize(adj)

    out = matmul(x, theta_forward[0]) + matmul(x, theta_backward[0])
    h_fwd = h_bwd = x
    for step in range(1, k):
        h_fwd = matmul(p_fwd, h_fwd)
        h_bwd = matmul(p_bwd, h_bwd)
        out = out + matmul(h_fwd, theta_forward[step]) + matmul(h_bwd, theta_backward[step])
    return out


def _stack_hops(hops: List[DiffTensor]) -> DiffTensor:
    """(..., N, F) per hop -> (..., N, K, F)."""
    shape = hops[0].shape
    expanded = [reshape(h, shape[:-1] + (1, shape[-1])) for h in hops]
    return concat(expanded, axis=-2)


def aggregate_hops(hops: List[DiffTensor], mode: str, alphas: Optional[DiffTensor] = None,
                   query: Optional[DiffTensor] = None) -> DiffTensor:
    """Combine per-hop outputs: linear (learned alpha), max, avg or attention."""
    if mode == "linear":
        if alphas is None or alphas.shape != (len(hops),):
            raise ContractError(f"linear hop aggregation needs {len(hops)} weights")
        out = mul(take_slice(alphas, 0), hops[0])
        for i in range(1, len(hops)):
            out = out + mul(take_slice(alphas, i), hops[i])
        return out
    if mode not in AGGREGATIONS:
        raise ContractError(f"unknown hop aggregation '{mode}'")
    stacked = _stack_hops(hops)
    if mode == "max":
        return reduce_max(stacked, axis=-2)
    if mode == "avg":
        return reduce_mean(stacked, axis=-2)
    if query is None:
        raise ContractError("attention hop aggregation needs a query vector")
    scores = softmax(matmul(stacked, query), axis=-2)  # (..., N, K, 1)
    weights = broadcast(scores, stacked.shape)
    return reduce_sum(mul(weights, stacked), axis=-2)


def multi_hop_conv(graph: AdjMatrix, x: DiffTensor, weights: Sequence[DiffTensor], k: int, beta: float,
                   alphas: Optional[DiffTensor] = None, mode: str = "linear",
                   query: Optional[DiffTensor] = None) -> DiffTensor:
    """
    Mix-hop propagation with an input residual.

    H^0 = X, then for each hop H = ReLU(A~ H^{k-1} W_k) and
    H^k = beta X + (1 - beta) A~ H, with A~ = D^-1 (A + I). The hop outputs
    H^0..H^{K-1} are aggregated by ``mode``.
    """
    _check_nodes("multi-hop", graph, x)
    if not 0.0 <= beta <= 1.0:
        raise ContractError(f"multi_hop_conv: beta must lie in [0, 1], got {beta}")
    if k < 1 or len(weights) < k - 1:
        raise ContractError(f"multi_hop_conv: need {k - 1} hop weights for K = {k}")
    if k > 1 and any(w.shape[-2] != w.shape[-1] or w.shape[-1] != x.shape[-1] for w in weights[:k - 1]):
        raise DimensionError("multi-hop", x.shape, *(w.shape for w in weights))
    propagation = row_normalize(with_self_loops(graph.on(x.tape)))

    hops = [x]
    for step in range(1, k):
        h = relu(matmul(matmul(propagation, hops[-1]), weights[step - 1]))
        hops.append(mul(beta, x) + mul(1.0 - beta, matmul(propagation, h)))
    return aggregate_hops(hops, mode, alphas=alphas, query=query)


def neighbor_mask(graph: AdjMatrix) -> np.ndarray:
    """Additive attention mask: 0 on edges and the diagonal, MASK_FILL elsewhere."""
    allowed = (graph.weights > 0.0) | np.eye(graph.n, dtype=bool)
    return np.where(allowed, 0.0, MASK_FILL)


def gat_layer(graph: AdjMatrix, x: DiffTensor, heads: Sequence[Tuple[DiffTensor, DiffTensor, DiffTensor]],
              terminal: bool = False) -> Tuple[DiffTensor, List[DiffTensor]]:
    """
    Multi-head graph attention restricted to neighbors (self included).

    ``heads`` holds (W, a_src, a_dst) per head. Head outputs pass through a
    sigmoid unless the layer is terminal and are concatenated on the feature
    axis. Returns the output and each head's attention matrix.
    """
    _check_nodes("gat", graph, x)
    if not heads:
        raise ContractError("gat_layer needs at least one head")
    n = graph.n
    mask = x.tape.constant(neighbor_mask(graph), name="gat-mask")
    outputs, attentions = [], []
    for w, a_src, a_dst in heads:
        wh = matmul(x, w)
        batch = wh.shape[:-2]
        src = broadcast(matmul(wh, a_src), batch + (n, n))
        dst = broadcast(transpose(matmul(wh, a_dst)), batch + (n, n))
        attention = softmax(leaky_relu(src + dst, 0.2) + mask, axis=-1)
        h = matmul(attention, wh)
        outputs.append(h if terminal else sigmoid(h))
        attentions.append(attention)
    out = outputs[0] if len(outputs) == 1 else concat(outputs, axis=-1)
    return out, attentions


def masked_attention_conv(graph: AdjMatrix, m: DiffTensor, h: DiffTensor, w: DiffTensor) -> DiffTensor:
    """((A + I) * M) H W with M an attention matrix over the nodes."""
    _check_nodes("masked-attention", graph, h)
    if m.shape[-2:] != (graph.n, graph.n):
        raise DimensionError("masked-attention", graph.weights.shape, m.shape)
    support = mul(m, with_self_loops(graph.on(h.tape)))
    return matmul(matmul(support, h), w)


def dot_product_attention(x: DiffTensor, w_query: DiffTensor, w_key: DiffTensor) -> DiffTensor:
    """softmax(X Wq (X Wk)^T / sqrt(d)) over the node axis."""
    q, key = matmul(x, w_query), matmul(x, w_key)
    return softmax(mul(1.0 / math.sqrt(q.shape[-1]), matmul(q, transpose(key))), axis=-1)
