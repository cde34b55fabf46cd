"""Five-fold cross-validation of one model kind."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from rgn.data.features import FeatureTable
from rgn.data.manifest import SampleManifest
from rgn.data.sampling import PairBatch, cv_split, fold_seed, materialize
from rgn.errors import DataError
from rgn.evaluation.metrics import roc_auc, verification_rate
from rgn.models.baselines import cos_baseline
from rgn.schemas import N_FOLDS, EvalReport, RocCurve, TrainConfig
from rgn.training.trainer import train

logger = logging.getLogger(__name__)


@dataclass
class FoldScores:
    """Held-out scores of one fold, with the threshold policy they are judged by."""
    fold: int
    scores: np.ndarray
    labels: np.ndarray
    relations: tuple
    policy: str = "fixed-0.5"
    train_scores: Optional[np.ndarray] = None
    train_labels: Optional[np.ndarray] = None

    def rate(self, mask: Optional[np.ndarray] = None) -> Optional[float]:
        scores, labels = (self.scores, self.labels) if mask is None else (self.scores[mask], self.labels[mask])
        if scores.size == 0:
            return None
        return verification_rate(scores, labels, self.policy, self.train_scores, self.train_labels)


def cosine_scores(batch: PairBatch) -> np.ndarray:
    return cos_baseline(batch.parent, batch.child, batch.parent2)


def score_fold(
    manifest: SampleManifest,
    table: FeatureTable,
    kind: str,
    fold: int,
    model_cfg=None,
    train_cfg: Optional[TrainConfig] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> FoldScores:
    """Train on the other folds (fresh init) and score the held-out fold."""
    train_cfg = train_cfg or TrainConfig()
    split = cv_split(manifest, fold, seed=train_cfg.seed)
    test_batch = materialize(split.test, table)

    if kind == "cos-baseline":
        train_batch = materialize(split.train, table)
        return FoldScores(
            fold=fold,
            scores=cosine_scores(test_batch),
            labels=test_batch.labels,
            relations=test_batch.relations,
            policy="train-fold-tuned",
            train_scores=cosine_scores(train_batch),
            train_labels=train_batch.labels,
        )

    fold_cfg = train_cfg.model_copy(update={"model": kind, "seed": fold_seed(train_cfg.seed, fold)})
    run_dir = Path(output_dir) / f"{kind}_fold{fold}" if output_dir is not None else None
    _, model, extractor = train(fold_cfg, split, table, model_cfg, run_dir, run_name=f"{kind}-fold{fold}")
    return FoldScores(
        fold=fold,
        scores=model.predict_proba(test_batch, extractor),
        labels=test_batch.labels,
        relations=test_batch.relations,
    )


def _curve(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    fpr, tpr, auc = roc_auc(scores, labels)
    return RocCurve(fpr=fpr.tolist(), tpr=tpr.tolist(), auc=auc)


def build_report(model: str, folds: List[FoldScores]) -> EvalReport:
    """Aggregate fold scores into per-fold and per-relation verification rates."""
    if not folds:
        raise DataError("No folds to report")
    relations = sorted({rel for f in folds for rel in f.relations})
    per_fold: Dict[int, Dict[str, Optional[float]]] = {}
    fold_mean: Dict[int, float] = {}
    for f in folds:
        tags = np.asarray(f.relations)
        per_fold[f.fold] = {rel: f.rate(tags == rel) for rel in relations}
        fold_mean[f.fold] = f.rate()

    relation_mean = {
        rel: float(np.mean([row[rel] for row in per_fold.values() if row[rel] is not None]))
        for rel in relations
    }
    scores = np.concatenate([f.scores for f in folds])
    labels = np.concatenate([f.labels for f in folds])
    tags = np.concatenate([np.asarray(f.relations) for f in folds])
    relation_roc = {}
    for rel in relations:
        mask = tags == rel
        if len(np.unique(labels[mask])) == 2:
            relation_roc[rel] = _curve(scores[mask], labels[mask])

    return EvalReport(
        model=model,
        relations=relations,
        folds=[f.fold for f in folds],
        per_fold=per_fold,
        fold_mean=fold_mean,
        relation_mean=relation_mean,
        mean=float(np.mean(list(relation_mean.values()))),
        roc=_curve(scores, labels),
        relation_roc=relation_roc,
    )


def crossval(
    manifest: SampleManifest,
    table: FeatureTable,
    kind: str,
    model_cfg=None,
    train_cfg: Optional[TrainConfig] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> EvalReport:
    """Train and score one model per held-out fold.

    Args:
        manifest: Positive pairs covering all five folds.
        table: Feature rows referenced by the manifest.
        kind: Model kind; cos-baseline is scored without training.
        model_cfg: Model config object, dict of overrides or None for defaults.
        train_cfg: Training hyperparameters shared by every fold.
        output_dir: Parent directory of the per-fold run directories.

    Returns:
        EvalReport whose mean is taken over relation means.
    """
    manifest.check_complete()
    folds = []
    for fold in range(1, N_FOLDS + 1):
        logger.info(f"{kind}: held-out fold {fold}/{N_FOLDS}")
        folds.append(score_fold(manifest, table, kind, fold, model_cfg, train_cfg, output_dir))
    report = build_report(kind, folds)
    logger.info(f"{kind}: mean verification rate {report.mean:.4f}, AUC {report.roc.auc:.4f}")
    return report
