"""
Degree normalisations on tracked adjacency tensors.

A zero-degree node gets a normalisation factor of 0 (via ``inverse_power``),
so isolated nodes receive no neighbor influence instead of a division error.
"""

import numpy as np

from tensor_core import Array, DiffTensor, broadcast, inverse_power, mul, reduce_sum, reshape, transpose


def _scale_rows(a: DiffTensor, factors: DiffTensor) -> DiffTensor:
    n = a.shape[-1]
    return mul(broadcast(reshape(factors, (n, 1)), (n, n)), a)


def sym_normalize(a: DiffTensor) -> DiffTensor:
    """D^-1/2 A D^-1/2 with D the row-degree matrix."""
    d = inverse_power(reduce_sum(a, axis=1), 0.5)
    return mul(_scale_rows(a, d), d)


def row_normalize(a: DiffTensor) -> DiffTensor:
    """D^-1 A: the forward random-walk transition matrix."""
    return _scale_rows(a, inverse_power(reduce_sum(a, axis=1), 1.0))


def reverse_row_normalize(a: DiffTensor) -> DiffTensor:
    """D_I^-1 A^T: the backward random-walk transition matrix."""
    return row_normalize(transpose(a))


def with_self_loops(a: DiffTensor) -> DiffTensor:
    return a + a.tape.constant(np.eye(a.shape[-1]))


def sym_normalize_array(a: Array) -> Array:
    deg = a.sum(axis=1)
    d = np.zeros_like(deg)
    d[deg > 0] = deg[deg > 0] ** -0.5
    return d[:, None] * a * d[None, :]
