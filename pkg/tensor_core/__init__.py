"""Dense float64 tensors with reverse-mode automatic differentiation"""

from .tape import Array, DiffTensor, Parameter, Tape, as_tensor
from .primitives import (
    PRIMITIVES, forward_primitive, backward,
    add, sub, mul, div, matmul, neg, absolute, exp, tanh, sigmoid, relu, leaky_relu,
    inverse_power, softmax, concat, take_slice, transpose, reshape, broadcast,
    reduce_sum, reduce_mean, reduce_max, stable_sigmoid,
)
from .optim import OptimizerState, optimizer_step, clip_gradient_norm, global_grad_norm
from .checkpoint import save_checkpoint, load_checkpoint, restore_parameters
from .gradcheck import check_gradients

__all__ = [
    # Core types
    'Array',
    'DiffTensor',
    'Parameter',
    'Tape',
    'as_tensor',

    # Primitives
    'PRIMITIVES',
    'forward_primitive',
    'backward',
    'add', 'sub', 'mul', 'div', 'matmul', 'neg', 'absolute', 'exp', 'tanh', 'sigmoid',
    'relu', 'leaky_relu', 'inverse_power', 'softmax', 'concat', 'take_slice',
    'transpose', 'reshape', 'broadcast', 'reduce_sum', 'reduce_mean',
    'reduce_max', 'stable_sigmoid',

    # Optimization
    'OptimizerState',
    'optimizer_step',
    'clip_gradient_norm',
    'global_grad_norm',

    # Persistence and verification
    'save_checkpoint',
    'load_checkpoint',
    'restore_parameters',
    'check_gradients',
]
