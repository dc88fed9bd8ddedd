"""
Differentiable primitives.

Each primitive computes its value with numpy and records one vector-Jacobian
product per operand on the tape. ``PRIMITIVES`` maps op-kind names to the
functions so callers can dispatch by name through ``forward_primitive``.

Elementwise binary ops accept operands whose shapes agree after leading-1
expansion only (a bias of shape (F,) against (B, N, F) is fine, (N, 1) against
(N, F) is not); anything else needs an explicit ``broadcast``.
"""

from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ContractError, DimensionError, NumericalError
from tensor_core.tape import Array, DiffTensor, Tape

Operand = Union[DiffTensor, np.ndarray, float, int]


def _tape_of(*operands: Operand) -> Tape:
    tapes = {id(op.tape): op.tape for op in operands if isinstance(op, DiffTensor)}
    if not tapes:
        raise ContractError("primitive called without any tracked operand")
    if len(tapes) > 1:
        raise ContractError("operands belong to different tapes")
    return next(iter(tapes.values()))


def _lift(x: Operand, tape: Tape) -> DiffTensor:
    if isinstance(x, DiffTensor):
        return x
    return tape.constant(x)


def _strip_leading_ones(shape: Tuple[int, ...]) -> Tuple[int, ...]:
    i = 0
    while i < len(shape) and shape[i] == 1:
        i += 1
    return shape[i:]


def _expanded_shape(op: str, *shapes: Tuple[int, ...]) -> Tuple[int, ...]:
    try:
        out = np.broadcast_shapes(*shapes)
    except ValueError:
        raise DimensionError(op, *shapes) from None
    for shape in shapes:
        core = _strip_leading_ones(shape)
        if core != out[len(out) - len(core):]:
            raise DimensionError(op, *shapes)
    return out


def unbroadcast(grad: Array, shape: Tuple[int, ...]) -> Array:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# binary elementwise
# ---------------------------------------------------------------------------

def add(a: Operand, b: Operand) -> DiffTensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    _expanded_shape("add", a.shape, b.shape)
    return tape.record(
        "add", a.value + b.value, (a, b),
        (lambda g: unbroadcast(g, a.shape), lambda g: unbroadcast(g, b.shape)),
    )


def sub(a: Operand, b: Operand) -> DiffTensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    _expanded_shape("sub", a.shape, b.shape)
    return tape.record(
        "sub", a.value - b.value, (a, b),
        (lambda g: unbroadcast(g, a.shape), lambda g: unbroadcast(-g, b.shape)),
    )


def mul(a: Operand, b: Operand) -> DiffTensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    _expanded_shape("mul-elementwise", a.shape, b.shape)
    av, bv = a.value, b.value
    return tape.record(
        "mul-elementwise", av * bv, (a, b),
        (lambda g: unbroadcast(g * bv, a.shape), lambda g: unbroadcast(g * av, b.shape)),
    )


def div(a: Operand, b: Operand) -> DiffTensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    _expanded_shape("div-elementwise", a.shape, b.shape)
    av, bv = a.value, b.value
    if np.any(bv == 0.0):
        raise NumericalError("div-elementwise: division by zero")
    return tape.record(
        "div-elementwise", av / bv, (a, b),
        (lambda g: unbroadcast(g / bv, a.shape), lambda g: unbroadcast(-g * av / (bv * bv), b.shape)),
    )


def matmul(a: Operand, b: Operand) -> DiffTensor:
    tape = _tape_of(a, b)
    a, b = _lift(a, tape), _lift(b, tape)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul", a.shape, b.shape)
    _expanded_shape("matmul", a.shape[:-2], b.shape[:-2])
    av, bv = a.value, b.value
    return tape.record(
        "matmul", av @ bv, (a, b),
        (
            lambda g: unbroadcast(g @ np.swapaxes(bv, -1, -2), a.shape),
            lambda g: unbroadcast(np.swapaxes(av, -1, -2) @ g, b.shape),
        ),
    )


# ---------------------------------------------------------------------------
# unary elementwise
# ---------------------------------------------------------------------------

def neg(x: DiffTensor) -> DiffTensor:
    return x.tape.record("neg", -x.value, (x,), (lambda g: -g,))


def absolute(x: DiffTensor) -> DiffTensor:
    sign = np.sign(x.value)
    return x.tape.record("abs", np.abs(x.value), (x,), (lambda g: g * sign,))


def exp(x: DiffTensor) -> DiffTensor:
    y = np.exp(x.value)
    return x.tape.record("exp", y, (x,), (lambda g: g * y,))


def tanh(x: DiffTensor) -> DiffTensor:
    y = np.tanh(x.value)
    return x.tape.record("tanh", y, (x,), (lambda g: g * (1.0 - y * y),))


def stable_sigmoid(v: Array) -> Array:
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def sigmoid(x: DiffTensor) -> DiffTensor:
    y = stable_sigmoid(x.value)
    return x.tape.record("sigmoid", y, (x,), (lambda g: g * y * (1.0 - y),))


def relu(x: DiffTensor) -> DiffTensor:
    active = (x.value > 0.0).astype(np.float64)
    return x.tape.record("relu", x.value * active, (x,), (lambda g: g * active,))


def leaky_relu(x: DiffTensor, slope: float = 0.2) -> DiffTensor:
    factor = np.where(x.value > 0.0, 1.0, slope)
    return x.tape.record("leaky-relu", x.value * factor, (x,), (lambda g: g * factor,))


def inverse_power(x: DiffTensor, p: float) -> DiffTensor:
    """x ** -p where x > 0 and 0 elsewhere (the zero-degree convention)."""
    positive = x.value > 0.0
    y = np.zeros_like(x.value)
    dy = np.zeros_like(x.value)
    y[positive] = x.value[positive] ** (-p)
    dy[positive] = -p * x.value[positive] ** (-p - 1.0)
    return x.tape.record("inverse-power", y, (x,), (lambda g: g * dy,))


def softmax(x: DiffTensor, axis: int = -1) -> DiffTensor:
    shifted = x.value - x.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    return x.tape.record(
        "softmax", y, (x,),
        (lambda g: y * (g - (g * y).sum(axis=axis, keepdims=True)),),
    )


# ---------------------------------------------------------------------------
# structural
# ---------------------------------------------------------------------------

def concat(xs: Sequence[DiffTensor], axis: int = -1) -> DiffTensor:
    tape = _tape_of(*xs)
    xs = [_lift(x, tape) for x in xs]
    ndim = xs[0].ndim
    ax = axis % ndim
    for x in xs[1:]:
        if x.ndim != ndim or any(x.shape[i] != xs[0].shape[i] for i in range(ndim) if i != ax):
            raise DimensionError("concat", *(t.shape for t in xs))
    bounds = np.cumsum([0] + [x.shape[ax] for x in xs])

    def make_vjp(lo: int, hi: int) -> Callable[[Array], Array]:
        index = tuple(slice(lo, hi) if i == ax else slice(None) for i in range(ndim))
        return lambda g: g[index]

    return tape.record(
        "concat", np.concatenate([x.value for x in xs], axis=ax), xs,
        [make_vjp(int(bounds[i]), int(bounds[i + 1])) for i in range(len(xs))],
    )


def take_slice(x: DiffTensor, index) -> DiffTensor:
    """Basic (view) indexing: ints, slices, Ellipsis and None."""
    if not isinstance(index, tuple):
        index = (index,)
    for part in index:
        if not (part is None or part is Ellipsis or isinstance(part, (int, np.integer, slice))):
            raise ContractError(f"slice: unsupported index component {part!r}")
    value = np.array(x.value[index])
    if value.size == 0:
        raise DimensionError("slice", x.shape, value.shape)

    def vjp(g: Array) -> Array:
        out = np.zeros_like(x.value)
        out[index] = g
        return out

    return x.tape.record("slice", value, (x,), (vjp,))


def transpose(x: DiffTensor, axes: Optional[Sequence[int]] = None) -> DiffTensor:
    """Permute axes; by default swap the last two."""
    if axes is None:
        if x.ndim < 2:
            raise DimensionError("transpose", x.shape)
        axes = list(range(x.ndim - 2)) + [x.ndim - 1, x.ndim - 2]
    axes = [a % x.ndim for a in axes]
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError("transpose", x.shape, tuple(axes))
    inverse = np.argsort(axes)
    return x.tape.record(
        "transpose", np.transpose(x.value, axes), (x,),
        (lambda g: np.transpose(g, inverse),),
    )


def reshape(x: DiffTensor, shape: Sequence[int]) -> DiffTensor:
    try:
        value = x.value.reshape(tuple(shape))
    except ValueError:
        raise DimensionError("reshape", x.shape, tuple(shape)) from None
    return x.tape.record("reshape", value, (x,), (lambda g: g.reshape(x.shape),))


def broadcast(x: DiffTensor, shape: Sequence[int]) -> DiffTensor:
    shape = tuple(shape)
    try:
        value = np.array(np.broadcast_to(x.value, shape))
    except ValueError:
        raise DimensionError("broadcast", x.shape, shape) from None
    return x.tape.record("broadcast", value, (x,), (lambda g: unbroadcast(g, x.shape),))


def _expand_back(g: Array, shape: Tuple[int, ...], axis, keepdims: bool) -> Array:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def reduce_sum(x: DiffTensor, axis=None, keepdims: bool = False) -> DiffTensor:
    return x.tape.record(
        "reduce-sum", np.asarray(x.value.sum(axis=axis, keepdims=keepdims)), (x,),
        (lambda g: np.array(_expand_back(g, x.shape, axis, keepdims)),),
    )


def reduce_mean(x: DiffTensor, axis=None, keepdims: bool = False) -> DiffTensor:
    count = x.value.size if axis is None else int(np.prod([x.shape[a] for a in np.atleast_1d(axis)]))
    return x.tape.record(
        "reduce-mean", np.asarray(x.value.mean(axis=axis, keepdims=keepdims)), (x,),
        (lambda g: np.array(_expand_back(g, x.shape, axis, keepdims)) / count,),
    )


def reduce_max(x: DiffTensor, axis: int = -1, keepdims: bool = False) -> DiffTensor:
    peak = x.value.max(axis=axis, keepdims=True)
    hits = (x.value == peak).astype(np.float64)
    hits /= hits.sum(axis=axis, keepdims=True)
    value = peak if keepdims else np.squeeze(peak, axis=axis)
    return x.tape.record(
        "reduce-max", np.asarray(value), (x,),
        (lambda g: hits * _expand_back(g, x.shape, axis, keepdims),),
    )


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

PRIMITIVES: Dict[str, Callable[..., DiffTensor]] = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul-elementwise": mul,
    "div-elementwise": div,
    "neg": neg,
    "abs": absolute,
    "exp": exp,
    "tanh": tanh,
    "sigmoid": sigmoid,
    "relu": relu,
    "leaky-relu": leaky_relu,
    "inverse-power": inverse_power,
    "softmax": softmax,
    "concat": lambda *xs, axis=-1: concat(xs, axis=axis),
    "slice": take_slice,
    "transpose": transpose,
    "reshape": reshape,
    "broadcast": broadcast,
    "reduce-sum": reduce_sum,
    "reduce-mean": reduce_mean,
    "reduce-max": reduce_max,
}


def forward_primitive(kind: str, inputs: Sequence[Operand], **attrs) -> DiffTensor:
    """Apply the primitive named ``kind`` to ``inputs`` and record it on their tape."""
    try:
        fn = PRIMITIVES[kind]
    except KeyError:
        raise ContractError(f"unknown primitive '{kind}'") from None
    return fn(*inputs, **attrs)


def backward(tape: Tape, root: DiffTensor) -> None:
    tape.backward(root)
