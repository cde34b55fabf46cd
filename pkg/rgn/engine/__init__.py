"""Minimal reverse-mode differentiation engine."""
from rgn.engine.ops import (
    add,
    bce_with_logit,
    concat,
    cosine,
    cosine_matrix,
    elementwise,
    matmul,
    mul,
    pool,
    relu,
    reshape,
    segment_pool,
    segment_softmax,
    sigmoid,
    softmax,
    take,
    tanh,
    total,
)
from rgn.engine.optim import SGD, Adam, Optimizer, build_optimizer
from rgn.engine.params import ParameterStore, init_params
from rgn.engine.tensor import Tape, Tensor, as_tensor, backward, current_tape

__all__ = [
    "Adam", "Optimizer", "ParameterStore", "SGD", "Tape", "Tensor",
    "add", "as_tensor", "backward", "bce_with_logit", "build_optimizer", "concat",
    "cosine", "cosine_matrix", "current_tape", "elementwise", "init_params", "matmul",
    "mul", "pool", "relu", "reshape", "segment_pool", "segment_softmax",
    "sigmoid", "softmax", "take", "tanh", "total",
]
