"""
Adaptive-moment optimizer and global-norm gradient clipping.

Both work on anything exposing ``value`` and ``grad`` arrays, so persistent
Parameters and plain DiffTensor leaves are treated alike.
"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from errors import ContractError
from tensor_core.tape import Array

DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPSILON = 1e-8
DEFAULT_CLIP_NORM = 5.0


@dataclass
class OptimizerState:
    """Adam moment accumulators aligned index-for-index with the parameter list."""
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETAS[0]
    beta2: float = DEFAULT_BETAS[1]
    epsilon: float = DEFAULT_EPSILON
    step: int = 0
    first_moment: List[Array] = field(default_factory=list)
    second_moment: List[Array] = field(default_factory=list)


def _require_grads(params: Sequence) -> None:
    for i, param in enumerate(params):
        if getattr(param, "grad", None) is None:
            name = getattr(param, "name", None) or f"#{i}"
            raise ContractError(f"parameter {name} has no materialized gradient")


def optimizer_step(params: Sequence, state: OptimizerState) -> None:
    """One bias-corrected Adam update, in place on ``param.value``."""
    _require_grads(params)
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p.value) for p in params]
        state.second_moment = [np.zeros_like(p.value) for p in params]
    if len(state.first_moment) != len(params):
        raise ContractError(
            f"optimizer state tracks {len(state.first_moment)} parameters, got {len(params)}"
        )

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for i, param in enumerate(params):
        g = param.grad
        m = b1 * state.first_moment[i] + (1.0 - b1) * g
        v = b2 * state.second_moment[i] + (1.0 - b2) * g * g
        state.first_moment[i], state.second_moment[i] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        param.value = param.value - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)


def global_grad_norm(params: Sequence) -> float:
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params)))


def clip_gradient_norm(params: Sequence, max_norm: float = DEFAULT_CLIP_NORM) -> float:
    """Rescale gradients so their joint L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    _require_grads(params)
    norm = global_grad_norm(params)
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad = p.grad * scale
    return norm
