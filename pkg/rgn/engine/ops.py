"""Differentiable operations used by the reasoning graphs.

Every op takes and returns `Tensor`s, computes its forward value with numpy and
registers a backward closure on the active tape (if any).
"""
from typing import Literal, Optional, Sequence, Union

import numpy as np

from rgn.engine.tensor import Tensor, apply_op, as_tensor
from rgn.errors import DataError, DimensionError, TopologyError

PoolKind = Literal["max", "avg"]
SegmentKind = Literal["max", "avg", "sum"]

# Norms below this are treated as zero vectors by the cosine ops.
COSINE_EPS = 1e-12


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum `grad` down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_segments(starts: np.ndarray, n: int) -> np.ndarray:
    starts = np.asarray(starts, dtype=np.intp)
    if starts.ndim != 1 or starts.size == 0:
        raise TopologyError("Segment starts must be a non-empty 1-D array")
    if starts[0] != 0 or np.any(np.diff(starts) <= 0) or starts[-1] >= n:
        raise TopologyError(f"Segment starts {starts.tolist()} do not partition an axis of length {n}")
    return starts


def _segment_counts(starts: np.ndarray, n: int) -> np.ndarray:
    return np.diff(np.append(starts, n))


# ============================================================================
# Linear algebra and elementwise ops
# ============================================================================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product.

    With a 2-D `b` the weight is shared across all leading axes of `a`
    (`a` may be a vector, a matrix or a batch of matrices). With a 3-D `b`
    both operands are batches of matrices with the same batch extent.
    """
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    if b.ndim > 2 and (a.ndim != b.ndim or a.shape[:-2] != b.shape[:-2]):
        raise DimensionError(f"batched matmul needs equal batch extents: {a.shape} x {b.shape}")

    a_data, b_data = a.data, b.data
    out = np.matmul(a_data, b_data)

    def _backward(g, needs):
        if b_data.ndim == 2:
            ga = np.matmul(g, b_data.T) if needs[0] else None
            gb = None
            if needs[1]:
                cols, k = b_data.shape
                gb = a_data.reshape(-1, cols).T @ g.reshape(-1, k)
            return ga, gb
        ga = np.matmul(g, np.swapaxes(b_data, -1, -2)) if needs[0] else None
        gb = np.matmul(np.swapaxes(a_data, -1, -2), g) if needs[1] else None
        return ga, gb

    return apply_op("matmul", (a, b), out, _backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data + b.data
    except ValueError as exc:
        raise DimensionError(f"add shape mismatch: {a.shape} + {b.shape}") from exc
    a_shape, b_shape = a.shape, b.shape

    def _backward(g, needs):
        return (
            _unbroadcast(g, a_shape) if needs[0] else None,
            _unbroadcast(g, b_shape) if needs[1] else None,
        )

    return apply_op("add", (a, b), out, _backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        out = a.data * b.data
    except ValueError as exc:
        raise DimensionError(f"mul shape mismatch: {a.shape} * {b.shape}") from exc
    a_data, b_data = a.data, b.data

    def _backward(g, needs):
        return (
            _unbroadcast(g * b_data, a_data.shape) if needs[0] else None,
            _unbroadcast(g * a_data, b_data.shape) if needs[1] else None,
        )

    return apply_op("mul", (a, b), out, _backward)


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    out = np.where(mask, x.data, 0.0)
    return apply_op("relu", (x,), out, lambda g, needs: (g * mask,))


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = _stable_sigmoid(x.data)
    return apply_op("sigmoid", (x,), out, lambda g, needs: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)
    return apply_op("tanh", (x,), out, lambda g, needs: (g * (1.0 - out * out),))


_ELEMENTWISE = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}


def elementwise(kind: str, x: Tensor) -> Tensor:
    """Apply the named elementwise nonlinearity."""
    try:
        fn = _ELEMENTWISE[kind]
    except KeyError:
        raise ValueError(f"Unknown elementwise kind: {kind}") from None
    return fn(x)


# ============================================================================
# Shape ops
# ============================================================================

def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along `axis`; backward splits the gradient back to the parts."""
    if not parts:
        raise DimensionError("concat needs at least one part")
    parts = [as_tensor(p) for p in parts]
    ndim = parts[0].ndim
    ax = axis % ndim
    for p in parts:
        if p.ndim != ndim or any(
            p.shape[i] != parts[0].shape[i] for i in range(ndim) if i != ax
        ):
            raise DimensionError(
                f"concat shapes incompatible on axis {axis}: {[q.shape for q in parts]}"
            )
    out = np.concatenate([p.data for p in parts], axis=ax)
    offsets = np.cumsum([p.shape[ax] for p in parts])[:-1]

    def _backward(g, needs):
        return np.split(g, offsets, axis=ax)

    return apply_op("concat", parts, out, _backward)


def reshape(x: Tensor, shape) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {x.shape} to {tuple(shape)}") from exc
    in_shape = x.shape
    return apply_op("reshape", (x,), out, lambda g, needs: (g.reshape(in_shape),))


def take(x: Tensor, indices, axis: int) -> Tensor:
    """Gather slices along `axis`; repeated indices accumulate on backward."""
    x = as_tensor(x)
    idx = np.asarray(indices, dtype=np.intp)
    ax = axis % x.ndim
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[ax]):
        raise DimensionError(f"take indices out of range for axis {axis} of {x.shape}")
    out = np.take(x.data, idx, axis=ax)
    in_shape = x.shape

    def _backward(g, needs):
        grad = np.zeros(in_shape, dtype=g.dtype)
        moved = np.moveaxis(grad, ax, 0)
        np.add.at(moved, idx, np.moveaxis(g, ax, 0))
        return (grad,)

    return apply_op("take", (x,), out, _backward)


def total(x: Tensor) -> Tensor:
    """Sum of all entries."""
    x = as_tensor(x)
    in_shape = x.shape
    out = np.asarray(x.data.sum())
    return apply_op("sum", (x,), out, lambda g, needs: (np.broadcast_to(g, in_shape).copy(),))


# ============================================================================
# Pooling and normalization
# ============================================================================

def pool(kind: PoolKind, rows: Union[Tensor, Sequence[Tensor]], axis: int = 0) -> Tensor:
    """Elementwise max or mean over the set of vectors stacked along `axis`.

    Max routes each output coordinate's gradient to the lowest-index argmax.
    `rows` may also be a list of equal-length vectors.
    """
    if not isinstance(rows, Tensor):
        if len(rows) == 0:
            raise TopologyError("pool over an empty set")
        rows = concat([reshape(as_tensor(r), (1, -1)) for r in rows], axis=0)
        axis = 0
    x = rows
    ax = axis % x.ndim
    n = x.shape[ax]

    if kind == "max":
        arg = np.expand_dims(np.argmax(x.data, axis=ax), ax)
        out = np.take_along_axis(x.data, arg, axis=ax).squeeze(ax)
        in_shape = x.shape

        def _backward(g, needs):
            grad = np.zeros(in_shape, dtype=g.dtype)
            np.put_along_axis(grad, arg, np.expand_dims(g, ax), axis=ax)
            return (grad,)

        return apply_op("pool_max", (x,), out, _backward)

    if kind == "avg":
        out = x.data.mean(axis=ax)
        in_shape = x.shape

        def _backward(g, needs):
            return (np.broadcast_to(np.expand_dims(g / n, ax), in_shape).copy(),)

        return apply_op("pool_avg", (x,), out, _backward)

    raise ValueError(f"Unknown pool kind: {kind}")


def segment_pool(kind: SegmentKind, x: Tensor, starts, axis: int) -> Tensor:
    """Pool contiguous segments of `axis`; segment j spans starts[j]:starts[j+1]."""
    x = as_tensor(x)
    ax = axis % x.ndim
    n = x.shape[ax]
    starts = _check_segments(starts, n)
    counts = _segment_counts(starts, n)
    in_shape = x.shape

    if kind in ("sum", "avg"):
        out = np.add.reduceat(x.data, starts, axis=ax)
        scale = None
        if kind == "avg":
            shape = [1] * x.ndim
            shape[ax] = counts.size
            scale = counts.reshape(shape).astype(x.data.dtype)
            out = out / scale

        def _backward(g, needs):
            grad = g / scale if scale is not None else g
            return (np.repeat(grad, counts, axis=ax),)

        return apply_op(f"segment_{kind}", (x,), out, _backward)

    if kind == "max":
        out = np.maximum.reduceat(x.data, starts, axis=ax)
        ends = np.append(starts[1:], n)
        x_moved = np.moveaxis(x.data, ax, 0)

        def _backward(g, needs):
            grad = np.zeros(in_shape, dtype=g.dtype)
            grad_moved = np.moveaxis(grad, ax, 0)
            g_moved = np.moveaxis(g, ax, 0)
            for j, (s, e) in enumerate(zip(starts, ends)):
                arg = np.argmax(x_moved[s:e], axis=0)[None]
                np.put_along_axis(grad_moved[s:e], arg, g_moved[j][None], axis=0)
            return (grad,)

        return apply_op("segment_max", (x,), out, _backward)

    raise ValueError(f"Unknown segment pool kind: {kind}")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """exp(x - max) / sum along `axis`."""
    x = as_tensor(x)
    ax = axis % x.ndim
    shifted = x.data - x.data.max(axis=ax, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=ax, keepdims=True)

    def _backward(g, needs):
        gy = g * out
        return (gy - out * gy.sum(axis=ax, keepdims=True),)

    return apply_op("softmax", (x,), out, _backward)


def segment_softmax(x: Tensor, starts, axis: int = -1) -> Tensor:
    """Softmax normalized independently inside each contiguous segment of `axis`."""
    x = as_tensor(x)
    ax = axis % x.ndim
    n = x.shape[ax]
    starts = _check_segments(starts, n)
    counts = _segment_counts(starts, n)
    seg_max = np.repeat(np.maximum.reduceat(x.data, starts, axis=ax), counts, axis=ax)
    e = np.exp(x.data - seg_max)
    out = e / np.repeat(np.add.reduceat(e, starts, axis=ax), counts, axis=ax)

    def _backward(g, needs):
        gy = g * out
        seg = np.repeat(np.add.reduceat(gy, starts, axis=ax), counts, axis=ax)
        return (gy - out * seg,)

    return apply_op("segment_softmax", (x,), out, _backward)


# ============================================================================
# Similarity and loss
# ============================================================================

def cosine(a: Tensor, b: Tensor, axis: int = -1) -> Tensor:
    """Cosine similarity along `axis`; 0 when either vector has (near-)zero norm."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError(f"cosine length mismatch: {a.shape} vs {b.shape}")
    ax = axis % a.ndim
    na = np.linalg.norm(a.data, axis=ax)
    nb = np.linalg.norm(b.data, axis=ax)
    valid = (na >= COSINE_EPS) & (nb >= COSINE_EPS)
    denom = np.where(valid, na * nb, 1.0)
    dot = np.sum(a.data * b.data, axis=ax)
    out = np.where(valid, dot / denom, 0.0)
    a_data, b_data = a.data, b.data

    def _backward(g, needs):
        g_exp = np.expand_dims(np.where(valid, g, 0.0), ax)
        c = np.expand_dims(out, ax)
        d = np.expand_dims(denom, ax)
        na2 = np.expand_dims(np.where(valid, na * na, 1.0), ax)
        nb2 = np.expand_dims(np.where(valid, nb * nb, 1.0), ax)
        ga = g_exp * (b_data / d - c * a_data / na2) if needs[0] else None
        gb = g_exp * (a_data / d - c * b_data / nb2) if needs[1] else None
        return ga, gb

    return apply_op("cosine", (a, b), out, _backward)


def cosine_matrix(x: Tensor) -> Tensor:
    """Pairwise cosine similarities between the rows of the last two axes.

    For x of shape (..., N, F) returns (..., N, N). Zero rows get all-zero
    similarities; the diagonal of every non-zero row is exactly 1.
    """
    x = as_tensor(x)
    if x.ndim < 2:
        raise DimensionError(f"cosine_matrix needs at least 2 axes, got {x.shape}")
    norms = np.linalg.norm(x.data, axis=-1, keepdims=True)
    valid = norms >= COSINE_EPS
    safe = np.where(valid, norms, 1.0)
    unit = np.where(valid, x.data / safe, 0.0)
    out = np.matmul(unit, np.swapaxes(unit, -1, -2))
    n = x.shape[-2]
    diag = np.arange(n)
    out[..., diag, diag] = valid[..., 0].astype(out.dtype)

    def _backward(g, needs):
        g = g.copy()
        g[..., diag, diag] = 0.0
        g_unit = np.matmul(g + np.swapaxes(g, -1, -2), unit)
        radial = np.sum(unit * g_unit, axis=-1, keepdims=True)
        return (np.where(valid, (g_unit - unit * radial) / safe, 0.0),)

    return apply_op("cosine_matrix", (x,), out, _backward)


def bce_with_logit(logits: Tensor, labels, reduction: Literal["mean", "none"] = "mean") -> Tensor:
    """Binary cross-entropy on logits in the log-sum-exp stable form.

    `labels` are fixed 0/1 targets with the same shape as `logits`.
    """
    logits = as_tensor(logits)
    y = np.asarray(labels, dtype=logits.data.dtype)
    if y.shape != logits.shape:
        raise DimensionError(f"labels {y.shape} do not match logits {logits.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")
    z = logits.data
    losses = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    residual = _stable_sigmoid(z) - y

    if reduction == "none":
        return apply_op("bce", (logits,), losses, lambda g, needs: (g * residual,))

    n = losses.size
    out = np.asarray(losses.mean())
    return apply_op("bce_mean", (logits,), out, lambda g, needs: (g * residual / n,))
