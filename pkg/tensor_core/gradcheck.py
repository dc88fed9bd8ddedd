"""Central finite-difference oracle for tape gradients."""

from typing import Callable, List, Sequence

import numpy as np

from tensor_core.tape import Array, DiffTensor, Tape

DEFAULT_STEP = 1e-5


def _evaluate(fn: Callable[..., DiffTensor], values: Sequence[Array]) -> float:
    tape = Tape("gradcheck")
    leaves = [tape.variable(v) for v in values]
    return float(fn(tape, *leaves).value.sum())


def numeric_gradients(fn: Callable[..., DiffTensor], values: Sequence[Array], h: float = DEFAULT_STEP) -> List[Array]:
    values = [np.array(v, dtype=np.float64) for v in values]
    grads = []
    for i, value in enumerate(values):
        grad = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            original = value[idx]
            value[idx] = original + h
            plus = _evaluate(fn, values)
            value[idx] = original - h
            minus = _evaluate(fn, values)
            value[idx] = original
            grad[idx] = (plus - minus) / (2.0 * h)
        grads.append(grad)
    return grads


def analytic_gradients(fn: Callable[..., DiffTensor], values: Sequence[Array]) -> List[Array]:
    tape = Tape("analytic")
    leaves = [tape.variable(v) for v in values]
    root = fn(tape, *leaves)
    tape.backward(root)
    return [leaf.grad for leaf in leaves]


def check_gradients(fn: Callable[..., DiffTensor], values: Sequence[Array], h: float = DEFAULT_STEP) -> float:
    """Largest relative error between tape and finite-difference gradients.

    ``fn(tape, *leaves)`` must return a scalar-shaped DiffTensor. The error of
    each input is ||analytic - numeric|| / max(||analytic||, ||numeric||, 1).
    """
    analytic = analytic_gradients(fn, values)
    numeric = numeric_gradients(fn, values, h)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = max(np.linalg.norm(a), np.linalg.norm(n), 1.0)
        worst = max(worst, float(np.linalg.norm(a - n) / scale))
    return worst
