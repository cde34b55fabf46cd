"""Gradient-descent optimizers over a ParameterStore."""
import logging
from typing import Dict, Literal, Tuple

import numpy as np

from rgn.engine.params import ParameterStore
from rgn.errors import ConfigError, GradientError

logger = logging.getLogger(__name__)

OptimizerKind = Literal["adam", "sgd-momentum"]

# Defaults when a config does not say otherwise
ADAM_DEFAULTS = {"lr": 1e-3, "betas": (0.9, 0.999), "eps": 1e-8}
SGD_DEFAULTS = {"lr": 1e-2, "momentum": 0.9}


class Optimizer:
    """Updates parameters in place, then zeroes their gradients."""

    def __init__(self, store: ParameterStore, lr: float):
        if lr < 0:
            raise ConfigError(f"Learning rate must be non-negative, got {lr}")
        self.store = store
        self.lr = lr

    def zero_grad(self) -> None:
        self.store.zero_grad()

    def step(self) -> None:
        for name, param in self.store.items():
            if param.grad is None:
                raise GradientError(f"Parameter {name} has no gradient; run backward() first")
        for name, param in self.store.items():
            self._update(name, param)
        self.store.zero_grad()

    def _update(self, name, param) -> None:
        raise NotImplementedError


class SGD(Optimizer):
    """SGD with classical momentum: v <- mu*v + g, p <- p - lr*v."""

    def __init__(self, store: ParameterStore, lr: float = SGD_DEFAULTS["lr"], momentum: float = SGD_DEFAULTS["momentum"]):
        super().__init__(store, lr)
        self.momentum = momentum
        self.velocity: Dict[str, np.ndarray] = {}

    def _update(self, name, param) -> None:
        grad = param.grad
        if self.momentum:
            v = self.velocity.get(name)
            v = grad.copy() if v is None else self.momentum * v + grad
            self.velocity[name] = v
            grad = v
        param.data -= self.lr * grad


class Adam(Optimizer):
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(
        self,
        store: ParameterStore,
        lr: float = ADAM_DEFAULTS["lr"],
        betas: Tuple[float, float] = ADAM_DEFAULTS["betas"],
        eps: float = ADAM_DEFAULTS["eps"],
    ):
        super().__init__(store, lr)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self) -> None:
        self.t += 1
        super().step()

    def _update(self, name, param) -> None:
        grad = param.grad
        m = self.m.get(name, np.zeros_like(grad))
        v = self.v.get(name, np.zeros_like(grad))
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
        self.m[name], self.v[name] = m, v
        m_hat = m / (1.0 - self.beta1 ** self.t)
        v_hat = v / (1.0 - self.beta2 ** self.t)
        param.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def build_optimizer(
    kind: OptimizerKind,
    store: ParameterStore,
    lr: float,
    betas: Tuple[float, float] = ADAM_DEFAULTS["betas"],
    eps: float = ADAM_DEFAULTS["eps"],
    momentum: float = SGD_DEFAULTS["momentum"],
) -> Optimizer:
    """Create the optimizer named by a TrainConfig."""
    if kind == "adam":
        return Adam(store, lr=lr, betas=betas, eps=eps)
    if kind == "sgd-momentum":
        return SGD(store, lr=lr, momentum=momentum)
    raise ConfigError(f"Unknown optimizer: {kind}")
