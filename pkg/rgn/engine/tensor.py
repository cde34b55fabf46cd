"""Dense tensors and the tape that records operations for reverse-mode differentiation."""
import logging
import threading
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from rgn.errors import DimensionError, GradientError
from rgn.settings import get_settings

logger = logging.getLogger(__name__)

_local = threading.local()

# backward_fn(output_grad, needs_grad) -> one gradient (or None) per input
BackwardFn = Callable[[np.ndarray, Tuple[bool, ...]], Sequence[Optional[np.ndarray]]]


def default_dtype() -> np.dtype:
    """Floating point dtype selected by the RGN_DTYPE setting."""
    return np.dtype(get_settings().dtype)


class Tensor:
    """Row-major real array with an optional accumulated gradient."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_tape")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.asarray(data, dtype=default_dtype())
        if any(extent <= 0 for extent in arr.shape):
            raise DimensionError(f"Tensor extents must be positive, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._tape: Optional["Tape"] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


def as_tensor(value) -> Tensor:
    """Wrap arrays and scalars; tensors pass through unchanged."""
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass
class TapeNode:
    """One recorded operation."""
    kind: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn


class Tape:
    """Ordered record of operations executed while the tape is active.

    Usage::

        with Tape():
            loss = model.loss(batch)
        backward(loss, store)

    Operations run outside any active tape are not recorded.
    """

    def __init__(self):
        self.nodes: List[TapeNode] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    def record(self, node: TapeNode) -> None:
        if self.consumed:
            raise GradientError("Cannot record on a tape whose backward pass already ran")
        node.output._tape = self
        self.nodes.append(node)

    def __len__(self) -> int:
        return len(self.nodes)


def _stack() -> List[Tape]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def current_tape() -> Optional[Tape]:
    """The innermost active tape on this thread, if any."""
    stack = _stack()
    return stack[-1] if stack else None


def apply_op(kind: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward_fn: BackwardFn) -> Tensor:
    """Create the output tensor and record the op when a tape is active."""
    tape = current_tape()
    requires = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=requires)
    if requires:
        tape.record(TapeNode(kind, tuple(inputs), out, backward_fn))
    return out


def backward(loss: Tensor, store=None) -> None:
    """Populate gradients of every requires_grad tensor reachable from `loss`.

    Leaf gradients accumulate into any existing `.grad`. Parameters of `store`
    that the loss does not reach end up holding zero gradients.
    """
    if loss.size != 1:
        raise GradientError(f"backward() needs a scalar loss, got shape {loss.shape}")

    if store is not None:
        for param in store.values():
            if param.grad is None:
                param.zero_grad()

    tape = loss._tape
    if not loss.requires_grad or tape is None:
        logger.debug("Loss is detached from every parameter; gradients stay zero")
        return
    if tape.consumed:
        raise GradientError("Backward pass already ran on this tape")

    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        grad_out = node.output.grad
        if grad_out is None:
            continue
        needs = tuple(t.requires_grad for t in node.inputs)
        grads = node.backward_fn(grad_out, needs)
        for tensor, grad in zip(node.inputs, grads):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise DimensionError(
                    f"{node.kind} backward produced gradient {grad.shape} for input {tensor.shape}"
                )
            if tensor.grad is None:
                tensor.grad = np.array(grad, dtype=tensor.data.dtype, copy=True)
            else:
                tensor.grad = tensor.grad + grad

    tape.consumed = True
    tape.nodes = []
