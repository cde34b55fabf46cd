"""Central finite-difference gradient checks."""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from rgn.engine.params import ParameterStore
from rgn.engine.tensor import Tape, Tensor, backward

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-5
# Per-entry slack for round-off where the true gradient is zero
ABSOLUTE_TOLERANCE = 1e-8


@dataclass
class GradCheckResult:
    name: str
    relative_error: float
    max_abs_error: float
    passed: bool


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||); the plain difference norm when both vanish."""
    diff = float(np.linalg.norm(analytic - numeric))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    return diff if scale < 1e-10 else diff / scale


def numerical_gradient(loss_fn: Callable[[], Tensor], tensor: Tensor, step: float = FD_STEP) -> np.ndarray:
    """Central differences of the scalar `loss_fn()` with respect to `tensor`."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        plus = loss_fn().item()
        flat[i] = orig - step
        minus = loss_fn().item()
        flat[i] = orig
        out[i] = (plus - minus) / (2.0 * step)
    return grad


def check_gradients(
    loss_fn: Callable[[], Tensor],
    store: ParameterStore,
    step: float = FD_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    atol: float = ABSOLUTE_TOLERANCE,
) -> List[GradCheckResult]:
    """Compare backward() against finite differences for every parameter of `store`.

    A parameter passes when every entry satisfies
    |analytic - numeric| <= atol + tolerance * |numeric|. `atol` covers round-off
    where the true gradient is zero (inactive units).

    Args:
        loss_fn: Builds the scalar loss from the current parameter values.
        store: Parameters to check; their data is perturbed in place and restored.
        step: Central-difference step.
        tolerance: Per-entry relative tolerance.
        atol: Per-entry absolute tolerance.

    Returns:
        One GradCheckResult per parameter, in store order.
    """
    store.zero_grad()
    with Tape():
        loss = loss_fn()
    backward(loss, store)
    analytic: Dict[str, np.ndarray] = {name: p.grad.copy() for name, p in store.items()}

    results = []
    for name, param in store.items():
        numeric = numerical_gradient(loss_fn, param, step)
        err = relative_error(analytic[name], numeric)
        diff = np.abs(analytic[name] - numeric)
        max_abs = float(np.max(diff))
        passed = bool(np.all(diff <= atol + tolerance * np.abs(numeric)))
        results.append(GradCheckResult(name=name, relative_error=err, max_abs_error=max_abs, passed=passed))
        if not passed:
            logger.warning(f"Gradient mismatch for {name}: relative error {err:.3e}")
    store.zero_grad()
    return results
