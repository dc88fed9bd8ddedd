"""
Spectral graph convolution: the normalized Laplacian and Chebyshev filters.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from errors import ContractError
from graph_construct import AdjMatrix
from graph_ops.normalize import sym_normalize, sym_normalize_array
from tensor_core import Array, DiffTensor, Tape, matmul, mul

LAMBDA_MAX = 2.0


@dataclass
class SpectralBasis:
    """L = I - D^-1/2 A D^-1/2 and its rescaling L~ = 2L/lambda_max - I."""
    laplacian: Array
    lambda_max: float
    scaled: Array

    @property
    def n(self) -> int:
        return self.laplacian.shape[0]


def normalized_laplacian(graph: AdjMatrix, lambda_max: float = LAMBDA_MAX) -> SpectralBasis:
    if graph.directed:
        raise ContractError("normalized_laplacian requires an undirected graph")
    n = graph.n
    laplacian = np.eye(n) - sym_normalize_array(graph.weights)
    scaled = 2.0 * laplacian / lambda_max - np.eye(n)
    return SpectralBasis(laplacian, lambda_max, scaled)


def scaled_laplacian_tensor(tape: Tape, graph: AdjMatrix) -> DiffTensor:
    """L~ on ``tape``; for learned graphs it stays differentiable (L~ = -D^-1/2 A D^-1/2 at lambda_max 2)."""
    if graph.directed:
        raise ContractError("Chebyshev filters require an undirected graph")
    if graph.tracked is not None and graph.tracked.tape is tape:
        return mul(-1.0, sym_normalize(graph.tracked))
    return tape.constant(normalized_laplacian(graph).scaled, name="L~")


def cheb_conv(basis: Union[SpectralBasis, DiffTensor], x: DiffTensor, theta: Sequence[DiffTensor],
              k: Optional[int] = None) -> DiffTensor:
    """sum_{k<K} T_k(L~) X Theta_k via T_0 = I, T_1 = L~, T_k = 2 L~ T_{k-1} - T_{k-2}."""
    k = len(theta) if k is None else k
    if k < 1:
        raise ContractError("cheb_conv needs K >= 1")
    if len(theta) < k:
        raise ContractError(f"cheb_conv: {len(theta)} filter matrices for K = {k}")
    scaled = basis if isinstance(basis, DiffTensor) else x.tape.constant(basis.scaled, name="L~")

    t_prev, t_cur = x, None
    out = matmul(x, theta[0])
    for order in range(1, k):
        if order == 1:
            t_next = matmul(scaled, x)
        else:
            t_next = mul(2.0, matmul(scaled, t_cur)) - t_prev
            t_prev = t_cur
        t_cur = t_next
        out = out + matmul(t_cur, theta[order])
    return out
