"""Mini-batch training shared by every trainable model.

Each iteration samples a class-balanced mini-batch, runs the (optional)
feature extractor and the model under a tape, back-propagates the mean
binary cross-entropy and takes one optimizer step.
"""
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from rgn.data.features import FeatureTable
from rgn.data.sampling import PairBatch, SplitData, materialize
from rgn.engine import Tape, backward, build_optimizer
from rgn.engine.checkpoint import save_checkpoint
from rgn.errors import DataError
from rgn.evaluation.metrics import verification_rate
from rgn.models.base import PairModel
from rgn.models.extractors import build_extractor
from rgn.models.registry import make_model
from rgn.schemas import EvalPoint, RunRecord, TrainConfig
from rgn.training.tracking import MetricsLog, make_tracker

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.rgn"
METRICS_NAME = "metrics.jsonl"


class BalancedBatchSampler:
    """Draws batches with equal positive and negative counts.

    Odd batch sizes alternate which class gets the extra pair. Both classes are
    reshuffled at the start of every epoch; an epoch is ceil(n / batch_size)
    batches.
    """

    def __init__(self, labels, batch_size: int, rng: np.random.Generator):
        labels = np.asarray(labels)
        self.positives = np.flatnonzero(labels == 1)
        self.negatives = np.flatnonzero(labels == 0)
        if self.positives.size == 0 or self.negatives.size == 0:
            raise DataError("Training pairs need both positives and negatives")
        self.batch_size = batch_size
        self.batches_per_epoch = math.ceil(labels.size / batch_size)
        self.rng = rng
        self.epoch = -1
        self._count = 0
        self._in_epoch = self.batches_per_epoch

    def _start_epoch(self) -> None:
        self.epoch += 1
        self._in_epoch = 0
        self._perm_pos = self.rng.permutation(self.positives)
        self._perm_neg = self.rng.permutation(self.negatives)
        self._cursor_pos = 0
        self._cursor_neg = 0

    def next_batch(self) -> Tuple[int, np.ndarray]:
        """(epoch, row indices) of the next batch."""
        if self._in_epoch >= self.batches_per_epoch:
            self._start_epoch()
        half, extra = divmod(self.batch_size, 2)
        n_pos = half + (extra if self._count % 2 == 0 else 0)
        n_neg = self.batch_size - n_pos
        pos = self._perm_pos[(self._cursor_pos + np.arange(n_pos)) % self._perm_pos.size]
        neg = self._perm_neg[(self._cursor_neg + np.arange(n_neg)) % self._perm_neg.size]
        self._cursor_pos += n_pos
        self._cursor_neg += n_neg
        self._in_epoch += 1
        self._count += 1
        return self.epoch, np.concatenate([pos, neg])


class Trainer:
    def __init__(
        self,
        cfg: TrainConfig,
        model: PairModel,
        extractor=None,
        output_dir: Optional[Union[str, Path]] = None,
        run_name: Optional[str] = None,
    ):
        self.cfg = cfg
        self.model = model
        self.extractor = extractor
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.run_name = run_name or cfg.model
        self.optimizer = build_optimizer(
            cfg.optimizer, model.store, lr=cfg.lr, betas=cfg.betas, eps=cfg.eps, momentum=cfg.momentum
        )
        self.rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])

    def num_iterations(self, n_train: int) -> int:
        if self.cfg.epochs is not None:
            return self.cfg.epochs * math.ceil(n_train / self.cfg.batch_size)
        return self.cfg.iterations

    def step(self, batch: PairBatch) -> float:
        """One forward/backward/update on `batch`; returns the loss before the update."""
        with Tape():
            loss = self.model.loss(batch, self.extractor)
        backward(loss, self.model.store)
        self.optimizer.step()
        return loss.item()

    def accuracy(self, batch: PairBatch) -> float:
        return verification_rate(self.model.predict_proba(batch, self.extractor), batch.labels)

    def fit(self, split: SplitData, table: FeatureTable) -> RunRecord:
        if len(split.train) == 0:
            raise DataError("Empty training split")
        train_batch = materialize(split.train, table)
        test_batch = materialize(split.test, table) if len(split.test) else None

        sampler = BalancedBatchSampler(train_batch.labels, self.cfg.batch_size, self.rng)
        total = self.num_iterations(len(train_batch))
        metrics_log = MetricsLog(self.output_dir / METRICS_NAME) if self.output_dir else None
        tracker = make_tracker(self.run_name)
        if tracker is not None:
            tracker.log_params({**self.cfg.model_dump(), "iterations": total})

        logger.info(
            f"Training {self.model.kind} for {total} iterations on {len(train_batch)} pairs "
            f"({self.model.store.num_parameters()} parameters)"
        )
        points: List[EvalPoint] = []
        losses: List[float] = []
        current_epoch = 0
        try:
            for it in range(1, total + 1):
                epoch, index = sampler.next_batch()
                if epoch != current_epoch:
                    current_epoch = epoch
                    if self.cfg.resample_negatives:
                        train_batch = materialize(split.resampled_train(epoch), table)
                losses.append(self.step(train_batch.subset(index)))

                if it % self.cfg.eval_every == 0 or it == total:
                    point = EvalPoint(
                        iteration=it,
                        epoch=epoch,
                        train_loss=float(np.mean(losses)),
                        train_accuracy=self.accuracy(train_batch),
                        heldout_accuracy=self.accuracy(test_batch) if test_batch is not None else None,
                    )
                    losses = []
                    points.append(point)
                    logger.info(
                        f"[{self.run_name}] it {it}/{total} epoch {epoch} loss {point.train_loss:.4f} "
                        f"train acc {point.train_accuracy:.3f} held-out acc {point.heldout_accuracy}"
                    )
                    if metrics_log is not None:
                        metrics_log.log_point(point)
                    if tracker is not None:
                        tracker.log_point(point)

            checkpoint = None
            if self.output_dir is not None:
                checkpoint = save_checkpoint(
                    self.output_dir / CHECKPOINT_NAME, self.model.store, self.model.checkpoint_meta()
                )
                if tracker is not None:
                    tracker.log_artifact(checkpoint)
        finally:
            if tracker is not None:
                tracker.close()

        return RunRecord(model=self.model.kind, points=points, checkpoint=str(checkpoint) if checkpoint else None)


def build_for_training(cfg: TrainConfig, model_cfg, d_raw: int, seed: Optional[int] = None):
    """Fresh model plus the extractor that feeds it, sharing one parameter store."""
    seed = cfg.seed if seed is None else seed
    init_rng = np.random.default_rng(seed)
    model = make_model(cfg.model, model_cfg, seed=init_rng)
    extractor = build_extractor(cfg.extractor, model.store, d_raw, model.cfg.d, seed=init_rng)
    return model, extractor


def train(
    cfg: TrainConfig,
    split: SplitData,
    table: FeatureTable,
    model_cfg=None,
    output_dir: Optional[Union[str, Path]] = None,
    run_name: Optional[str] = None,
):
    """Build the model and extractor for `cfg` and train them on one split.

    Args:
        cfg: Training hyperparameters; `cfg.model` selects the model kind.
        split: Training pairs and the held-out pairs scored at every eval point.
        table: Feature rows referenced by the split.
        model_cfg: Model config object, dict of overrides or None for defaults.
        output_dir: Where the checkpoint and metrics log go; nothing is written when None.
        run_name: Name reported to the experiment tracker.

    Returns:
        Tuple of (RunRecord, trained model, feature extractor).
    """
    model, extractor = build_for_training(cfg, model_cfg, table.width)
    record = Trainer(cfg, model, extractor, output_dir, run_name).fit(split, table)
    return record, model, extractor
