"""Common interface of every pair (or triple) scoring model."""
from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from rgn.engine import ParameterStore, Tensor, bce_with_logit
from rgn.engine.ops import _stable_sigmoid
from rgn.errors import DataError, DimensionError


class PairModel(ABC):
    """A trainable mapping from subject features to a kinship logit."""

    kind: str = ""
    prefix: str = ""

    def __init__(self, store: Optional[ParameterStore] = None):
        self.store = store if store is not None else ParameterStore()

    @property
    @abstractmethod
    def subject_count(self) -> int:
        ...

    @abstractmethod
    def forward(self, gx, gy, gz=None) -> Tensor:
        """Logits of shape (B,) for a batch of subjects."""

    def _check_subjects(self, gz) -> None:
        if self.subject_count == 3 and gz is None:
            raise DimensionError(f"{self.kind} is tri-subject and needs a second parent")
        if self.subject_count == 2 and gz is not None:
            raise DimensionError(f"{self.kind} is bi-subject but got a second parent")

    def batch_logits(self, batch, extractor=None) -> Tensor:
        """Logits for a PairBatch, passing every member through `extractor` first."""
        if len(batch) == 0:
            raise DataError("Cannot score an empty batch")
        members = (batch.parent, batch.child, batch.parent2)
        if extractor is not None:
            members = tuple(None if m is None else extractor(m) for m in members)
        return self.forward(*members)

    def loss(self, batch, extractor=None) -> Tensor:
        """Mean binary cross-entropy over a PairBatch."""
        return bce_with_logit(self.batch_logits(batch, extractor), np.asarray(batch.labels))

    def predict_proba(self, batch, extractor=None) -> np.ndarray:
        """sigmoid(logit) per pair; nothing is recorded when no tape is active."""
        return _stable_sigmoid(self.batch_logits(batch, extractor).data)

    def checkpoint_meta(self) -> Dict[str, np.ndarray]:
        return {}
