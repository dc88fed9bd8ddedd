"""
Gradient tape, tracked tensors and persistent parameters.

A Tape records every primitive applied to its DiffTensors in creation order,
so the record is already topologically sorted: a node's parents always have
smaller indices. Backward walks that list once, from the root down.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from errors import ContractError, DimensionError, NumericalError

Array = npt.NDArray[np.float64]
VjpFn = Callable[[Array], Array]


def as_tensor(data, name: str = "tensor") -> Array:
    """Validate and copy ``data`` into a finite float64 array with positive extents."""
    arr = np.array(data, dtype=np.float64)
    if any(extent == 0 for extent in arr.shape):
        raise DimensionError(name, arr.shape)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name}: non-finite value rejected")
    return arr


@dataclass(eq=False)
class Parameter:
    """A named learnable array that survives across tapes."""
    name: str
    value: Array
    grad: Optional[Array] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)


class DiffTensor:
    """A value recorded on exactly one tape."""

    __slots__ = ("value", "grad", "tape", "index", "requires_grad", "name")

    def __init__(self, value: Array, tape: "Tape", index: int, requires_grad: bool, name: Optional[str] = None):
        self.value = value
        self.grad: Optional[Array] = None
        self.tape = tape
        self.index = index
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __repr__(self) -> str:
        label = self.name or f"#{self.index}"
        return f"DiffTensor({label}, shape={self.shape})"

    # Arithmetic sugar over the primitives module.
    def __add__(self, other):
        return _ops.add(self, other)

    def __radd__(self, other):
        return _ops.add(other, self)

    def __sub__(self, other):
        return _ops.sub(self, other)

    def __rsub__(self, other):
        return _ops.sub(other, self)

    def __mul__(self, other):
        return _ops.mul(self, other)

    def __rmul__(self, other):
        return _ops.mul(other, self)

    def __truediv__(self, other):
        return _ops.div(self, other)

    def __rtruediv__(self, other):
        return _ops.div(other, self)

    def __neg__(self):
        return _ops.neg(self)

    def __matmul__(self, other):
        return _ops.matmul(self, other)

    def __rmatmul__(self, other):
        return _ops.matmul(other, self)

    def __getitem__(self, index):
        return _ops.take_slice(self, index)

    @property
    def T(self):
        return _ops.transpose(self)


@dataclass
class _Node:
    parents: Tuple[DiffTensor, ...]
    vjps: Tuple[VjpFn, ...]
    op: str


class Tape:
    """Ordered record of primitive applications for one forward/backward pass."""

    def __init__(self, name: str = "tape"):
        self.name = name
        self.tensors: List[DiffTensor] = []
        self._nodes: List[Optional[_Node]] = []
        self._watched: Dict[int, Tuple[Parameter, DiffTensor]] = {}

    def __len__(self) -> int:
        return len(self.tensors)

    def _append(self, value: Array, node: Optional[_Node], requires_grad: bool, name: Optional[str]) -> DiffTensor:
        tensor = DiffTensor(value, self, len(self.tensors), requires_grad, name)
        self.tensors.append(tensor)
        self._nodes.append(node)
        return tensor

    def constant(self, value, name: Optional[str] = None) -> DiffTensor:
        """Leaf that never receives a gradient."""
        return self._append(as_tensor(value, name or "constant"), None, False, name)

    def variable(self, value, name: Optional[str] = None) -> DiffTensor:
        """Leaf whose gradient is materialized by backward."""
        return self._append(as_tensor(value, name or "variable"), None, True, name)

    def watch(self, param: Parameter) -> DiffTensor:
        """Bind a persistent parameter to a leaf on this tape (once per tape)."""
        key = id(param)
        if key not in self._watched:
            leaf = self._append(param.value, None, True, param.name)
            self._watched[key] = (param, leaf)
        return self._watched[key][1]

    def record(self, op: str, value: Array, parents: Sequence[DiffTensor], vjps: Sequence[VjpFn]) -> DiffTensor:
        """Append the result of a primitive; ``vjps[i]`` maps the output cotangent to parent i's."""
        for parent in parents:
            if parent.tape is not self:
                raise ContractError(f"{op}: operand belongs to a different tape")
        if not np.all(np.isfinite(value)):
            raise NumericalError(f"{op}: produced a non-finite value")
        requires_grad = any(p.requires_grad for p in parents)
        node = _Node(tuple(parents), tuple(vjps), op) if requires_grad else None
        return self._append(value, node, requires_grad, None)

    def backward(self, root: DiffTensor) -> None:
        """Fill ``grad`` of every tracked tensor with d(root)/d(tensor)."""
        if root.tape is not self:
            raise ContractError("backward: root belongs to a different tape")
        if root.value.size != 1:
            raise ContractError(f"backward: root must be scalar-shaped, got {root.shape}")

        grads: Dict[int, Array] = {root.index: np.ones_like(root.value)}
        for index in range(root.index, -1, -1):
            node = self._nodes[index]
            cotangent = grads.get(index)
            if node is None or cotangent is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                if not parent.requires_grad:
                    continue
                contribution = vjp(cotangent)
                if parent.index in grads:
                    grads[parent.index] = grads[parent.index] + contribution
                else:
                    grads[parent.index] = contribution

        for tensor in self.tensors:
            if tensor.requires_grad:
                tensor.grad = grads.get(tensor.index, np.zeros_like(tensor.value))
        for param, leaf in self._watched.values():
            param.grad = leaf.grad

    def parameters(self) -> List[Parameter]:
        return [param for param, _ in self._watched.values()]


from tensor_core import primitives as _ops  # noqa: E402  (operator sugar needs the op set)
