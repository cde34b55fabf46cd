"""Named parameter collections and deterministic initialization."""
import logging
from typing import Dict, Iterator, Literal, Sequence, Tuple, Union

import numpy as np

from rgn.engine.tensor import Tensor, default_dtype
from rgn.errors import CheckpointError, ConfigError

logger = logging.getLogger(__name__)

InitScheme = Literal["xavier-uniform", "zeros"]
Seed = Union[int, np.random.Generator]


def init_params(shape: Sequence[int], scheme: InitScheme = "xavier-uniform", seed: Seed = 0) -> Tensor:
    """Create a trainable tensor.

    Xavier-uniform draws from U(-b, b) with b = sqrt(6 / (fan_in + fan_out)),
    fan_in = shape[0] and fan_out = shape[-1]. `seed` may be an int or a
    shared Generator so a model's parameters draw from one stream.
    """
    shape = tuple(int(s) for s in shape)
    if scheme == "zeros":
        return Tensor(np.zeros(shape), requires_grad=True)
    if scheme == "xavier-uniform":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        fan_in, fan_out = shape[0], shape[-1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)
    raise ConfigError(f"Unknown init scheme: {scheme}")


class ParameterStore:
    """Insertion-ordered map from dotted names to trainable tensors."""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise ConfigError(f"Duplicate parameter name: {name}")
        tensor.requires_grad = True
        tensor.name = name
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list:
        return list(self._params)

    def values(self) -> list:
        return list(self._params.values())

    def items(self) -> list:
        return list(self._params.items())

    def with_prefix(self, prefix: str) -> Dict[str, Tensor]:
        return {n: p for n, p in self._params.items() if n.startswith(prefix)}

    def num_parameters(self) -> int:
        return sum(p.size for p in self._params.values())

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter array, in insertion order."""
        return {n: p.data.copy() for n, p in self._params.items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        """Overwrite parameter values; names and shapes must match exactly."""
        missing = [n for n in self._params if n not in state]
        unexpected = [n for n in state if n not in self._params]
        if missing or unexpected:
            raise CheckpointError(
                f"Parameter names do not match: missing={missing}, unexpected={unexpected}"
            )
        for name, param in self._params.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise CheckpointError(
                    f"Shape mismatch for {name}: checkpoint {value.shape}, model {param.shape}"
                )
            param.data = value.astype(default_dtype(), copy=True)
            param.grad = None

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {n: p.shape for n, p in self._params.items()}
