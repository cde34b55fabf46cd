"""Comparators: concatenation + MLP, and plain cosine similarity."""
import logging
from typing import Optional, Union

import numpy as np

from rgn.engine import ParameterStore, Tensor, concat, cosine, reshape
from rgn.errors import ConfigError, DimensionError
from rgn.models.base import PairModel
from rgn.models.layers import MLP, as_batch
from rgn.schemas import MlpBaselineConfig

logger = logging.getLogger(__name__)

PREFIX = "mlpbase"


class MlpBaseline(PairModel):
    """MLP([g(x) || g(y)]) (or the 3-way concatenation for tri-subject)."""

    kind = "mlp-baseline"
    prefix = PREFIX

    def __init__(
        self,
        cfg: MlpBaselineConfig,
        seed: Union[int, np.random.Generator] = 0,
        store: Optional[ParameterStore] = None,
    ):
        super().__init__(store)
        self.cfg = cfg
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.mlp = MLP(self.store, f"{PREFIX}.mlp", cfg.subject_count * cfg.d, cfg.hidden, 1, rng, init=cfg.init)

    @property
    def subject_count(self) -> int:
        return self.cfg.subject_count

    def forward(self, gx, gy, gz=None) -> Tensor:
        self._check_subjects(gz)
        parts = [as_batch(g) for g in (gx, gy) + ((gz,) if gz is not None else ())]
        for p in parts:
            if p.shape[1] != self.cfg.d:
                raise DimensionError(f"Expected feature dimension {self.cfg.d}, got {p.shape[1]}")
        logits = self.mlp(concat(parts, axis=-1))
        return reshape(logits, (logits.shape[0],))


def cos_baseline(gx, gy, gz=None) -> np.ndarray:
    """Cosine similarity of each parent/child row; scores in [-1, 1]."""
    if gz is not None:
        raise ConfigError("The cosine baseline is bi-subject only")
    a, b = as_batch(gx), as_batch(gy)
    if a.shape != b.shape:
        raise DimensionError(f"cos_baseline shape mismatch: {a.shape} vs {b.shape}")
    return cosine(a, b, axis=-1).data
