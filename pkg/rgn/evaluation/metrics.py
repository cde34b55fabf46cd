"""Verification rate and ROC/AUC."""
from typing import Literal, Optional, Tuple

import numpy as np

from rgn.errors import DataError

ThresholdPolicy = Literal["fixed-0.5", "train-fold-tuned"]

FIXED_THRESHOLD = 0.5


def _validate(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.size == 0:
        raise DataError("Cannot evaluate an empty score set")
    if scores.shape != labels.shape:
        raise DataError(f"{scores.size} scores but {labels.size} labels")
    if not np.all((labels == 0) | (labels == 1)):
        raise DataError("Labels must be 0 or 1")
    return scores, labels.astype(np.int64)


def accuracy_at(scores, labels, threshold: float) -> float:
    """Fraction of correct decisions when score >= threshold means kin."""
    scores, labels = _validate(scores, labels)
    return float(np.mean((scores >= threshold).astype(np.int64) == labels))


def fit_threshold(scores, labels) -> float:
    """Threshold maximizing accuracy on (scores, labels); the smallest one among ties."""
    scores, labels = _validate(scores, labels)
    pos = np.sort(scores[labels == 1])
    neg = np.sort(scores[labels == 0])
    candidates = np.append(np.unique(scores), np.inf)
    true_pos = pos.size - np.searchsorted(pos, candidates, side="left")
    true_neg = np.searchsorted(neg, candidates, side="left")
    return float(candidates[int(np.argmax(true_pos + true_neg))])


def verification_rate(
    scores,
    labels,
    policy: ThresholdPolicy = "fixed-0.5",
    train_scores=None,
    train_labels=None,
) -> float:
    """Fraction of correct kin/non-kin decisions.

    fixed-0.5 thresholds probabilities at 0.5 (ties count as kin);
    train-fold-tuned fits the threshold on the training scores first.
    """
    if policy == "fixed-0.5":
        return accuracy_at(scores, labels, FIXED_THRESHOLD)
    if policy == "train-fold-tuned":
        if train_scores is None or train_labels is None:
            raise DataError("train-fold-tuned needs training scores and labels")
        return accuracy_at(scores, labels, fit_threshold(train_scores, train_labels))
    raise DataError(f"Unknown threshold policy: {policy}")


def roc_curve(scores, labels) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, thresholds) sweeping every distinct score from high to low; starts at (0, 0)."""
    scores, labels = _validate(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("ROC needs both positive and negative labels")
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores, sorted_labels = scores[order], labels[order]
    # last index of each group of tied scores
    ends = np.flatnonzero(np.diff(sorted_scores)).tolist() + [scores.size - 1]
    tp = np.cumsum(sorted_labels)[ends]
    fp = np.asarray(ends) + 1 - tp
    fpr = np.concatenate(([0.0], fp / n_neg))
    tpr = np.concatenate(([0.0], tp / n_pos))
    thresholds = np.concatenate(([np.inf], sorted_scores[ends]))
    return fpr, tpr, thresholds


def roc_auc(scores, labels) -> Tuple[np.ndarray, np.ndarray, float]:
    """ROC points and the trapezoidal area under them."""
    fpr, tpr, _ = roc_curve(scores, labels)
    return fpr, tpr, float(np.trapezoid(tpr, fpr))


def safe_auc(scores, labels) -> Optional[float]:
    """AUC, or None when only one class is present."""
    labels = np.asarray(labels)
    if labels.size == 0 or labels.min() == labels.max():
        return None
    return roc_auc(scores, labels)[2]
