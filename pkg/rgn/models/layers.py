"""Building blocks shared by the reasoning graphs and the baselines."""
from typing import List, Optional, Sequence

import numpy as np

from rgn.engine import ParameterStore, Tensor, add, as_tensor, concat, elementwise, init_params, matmul, reshape
from rgn.errors import DimensionError


class Linear:
    """Affine map x W + b with W of shape (in_features, out_features)."""

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        init: str = "xavier-uniform",
        bias: bool = True,
    ):
        self.weight = store.add(f"{name}.weight", init_params((in_features, out_features), init, rng))
        self.bias = store.add(f"{name}.bias", init_params((out_features,), "zeros", rng)) if bias else None
        self.in_features = in_features
        self.out_features = out_features

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.weight)
        return add(y, self.bias) if self.bias is not None else y


class MLP:
    """Stack of Linear layers with an activation between them (none after the last)."""

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        in_features: int,
        hidden: Sequence[int],
        out_features: int,
        rng: np.random.Generator,
        activation: str = "relu",
        init: str = "xavier-uniform",
    ):
        widths = [in_features, *hidden, out_features]
        self.layers: List[Linear] = [
            Linear(store, f"{name}.{i}", w_in, w_out, rng, init=init)
            for i, (w_in, w_out) in enumerate(zip(widths, widths[1:]))
        ]
        self.activation = activation

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = elementwise(self.activation, x)
        return x

    def affine_shapes(self) -> List[tuple]:
        return [(layer.in_features, layer.out_features) for layer in self.layers]


def as_batch(g) -> Tensor:
    """Promote a feature vector (D,) to a batch (1, D)."""
    t = as_tensor(g)
    if t.ndim == 1:
        return reshape(t, (1, t.shape[0]))
    if t.ndim != 2:
        raise DimensionError(f"Features must be (D,) or (B, D), got {t.shape}")
    return t


def comparison_nodes(gx, gy, gz: Optional[object] = None, d: Optional[int] = None) -> Tensor:
    """Visual comparison nodes: node n holds the n-th value of every subject's features.

    Returns (B, D, S) where S is 2 (parent, child) or 3 (parent, child, second parent).
    """
    parts = [as_batch(g) for g in (gx, gy) + ((gz,) if gz is not None else ())]
    shape = parts[0].shape
    for p in parts[1:]:
        if p.shape != shape:
            raise DimensionError(f"Feature shapes differ: {[q.shape for q in parts]}")
    if d is not None and shape[1] != d:
        raise DimensionError(f"Expected feature dimension {d}, got {shape[1]}")
    batch, width = shape
    return concat([reshape(p, (batch, width, 1)) for p in parts], axis=-1)
