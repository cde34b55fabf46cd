"""Build any trainable model kind from its config."""
from typing import Callable, Dict, Optional, Union

import numpy as np

from rgn.engine import ParameterStore
from rgn.errors import ConfigError
from rgn.models.base import PairModel
from rgn.models.baselines import MlpBaseline
from rgn.models.hrgn import HRGN
from rgn.models.srgn import SRGN
from rgn.schemas import HRgnConfig, MlpBaselineConfig, SRgnConfig, build_config

MODEL_BUILDERS: Dict[str, Callable[..., PairModel]] = {
    "srgn": SRGN,
    "hrgn": HRGN,
    "mlp-baseline": MlpBaseline,
}

MODEL_CONFIGS = {
    "srgn": SRgnConfig,
    "hrgn": HRgnConfig,
    "mlp-baseline": MlpBaselineConfig,
}


def make_model(
    kind: str,
    cfg=None,
    seed: Union[int, np.random.Generator] = 0,
    store: Optional[ParameterStore] = None,
) -> PairModel:
    """Instantiate `kind`; `cfg` may be a config object, a dict of overrides or None for defaults.

    Invalid overrides raise ConfigError.
    """
    if kind not in MODEL_BUILDERS:
        raise ConfigError(f"Unknown trainable model kind {kind!r}; known: {sorted(MODEL_BUILDERS)}")
    config_cls = MODEL_CONFIGS[kind]
    if cfg is None:
        cfg = config_cls()
    elif isinstance(cfg, dict):
        cfg = build_config(config_cls, cfg)
    elif not isinstance(cfg, config_cls):
        raise ConfigError(f"{kind} needs a {config_cls.__name__}, got {type(cfg).__name__}")
    return MODEL_BUILDERS[kind](cfg, seed=seed, store=store)
