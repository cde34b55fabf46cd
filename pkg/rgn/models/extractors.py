"""Feature extractors g(.) mapping raw feature rows to the model's D inputs.

External backbones plug in by exporting a FeatureTable (CSV, FTB1 or Parquet)
and running with the precomputed extractor.
"""
from typing import Union

import numpy as np

from rgn.engine import ParameterStore, Tensor, tanh
from rgn.errors import ConfigError, DimensionError
from rgn.models.layers import Linear, as_batch

PREFIX = "extractor"


class PrecomputedExtractor:
    """Identity over frozen feature rows."""

    trainable = False

    def __init__(self, d: int):
        self.d = d

    def __call__(self, raw) -> Tensor:
        x = as_batch(raw)
        if x.shape[1] != self.d:
            raise DimensionError(f"Precomputed features have width {x.shape[1]}, model expects {self.d}")
        return x


class ToyExtractor:
    """tanh(x W + b), trained jointly with the model it feeds."""

    trainable = True

    def __init__(self, store: ParameterStore, d_raw: int, d: int, seed: Union[int, np.random.Generator] = 0):
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.d_raw = d_raw
        self.d = d
        self.linear = Linear(store, f"{PREFIX}.linear", d_raw, d, rng)

    def __call__(self, raw) -> Tensor:
        x = as_batch(raw)
        if x.shape[1] != self.d_raw:
            raise DimensionError(f"Raw features have width {x.shape[1]}, extractor expects {self.d_raw}")
        return tanh(self.linear(x))


def build_extractor(mode: str, store: ParameterStore, d_raw: int, d: int, seed=0):
    if mode == "precomputed":
        if d_raw != d:
            raise ConfigError(f"Precomputed features of width {d_raw} cannot feed a model with D={d}")
        return PrecomputedExtractor(d)
    if mode == "toy-trainable":
        return ToyExtractor(store, d_raw, d, seed)
    raise ConfigError(f"Unknown extractor mode: {mode}")

