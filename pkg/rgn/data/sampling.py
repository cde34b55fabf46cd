"""Positive/negative pair sets, balanced negatives and the five-fold split."""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from rgn.data.features import FeatureTable
from rgn.data.manifest import SampleManifest
from rgn.errors import DataError, ManifestError
from rgn.schemas import N_FOLDS, ManifestRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairSet:
    """Feature references of labelled pairs (triples when parent2_refs is set)."""
    pair_ids: tuple
    parent_refs: tuple
    child_refs: tuple
    labels: np.ndarray
    relations: tuple
    folds: tuple
    parent2_refs: Optional[tuple] = None

    def __post_init__(self):
        n = len(self.pair_ids)
        lengths = {len(self.parent_refs), len(self.child_refs), len(self.labels), len(self.relations), len(self.folds)}
        if self.parent2_refs is not None:
            lengths.add(len(self.parent2_refs))
        if lengths != {n}:
            raise DataError(f"PairSet columns have unequal lengths {sorted(lengths)}")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise DataError("Pair labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.pair_ids)

    @property
    def num_positive(self) -> int:
        return int(self.labels.sum())

    @classmethod
    def from_records(cls, records: Sequence[ManifestRecord], label: int = 1) -> "PairSet":
        tri = [r.parent2_ref is not None for r in records]
        if any(tri) and not all(tri):
            raise DataError("Cannot mix bi-subject and tri-subject records in one pair set")
        return cls(
            pair_ids=tuple(r.pair_id for r in records),
            parent_refs=tuple(r.parent_ref for r in records),
            child_refs=tuple(r.child_ref for r in records),
            labels=np.full(len(records), label, dtype=np.int64),
            relations=tuple(r.relation for r in records),
            folds=tuple(r.fold for r in records),
            parent2_refs=tuple(r.parent2_ref for r in records) if records and all(tri) else None,
        )

    @classmethod
    def concat(cls, parts: Sequence["PairSet"]) -> "PairSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise DataError("Cannot concatenate empty pair sets")
        tri = {p.parent2_refs is not None for p in parts}
        if len(tri) > 1:
            raise DataError("Cannot mix bi-subject and tri-subject pair sets")
        return cls(
            pair_ids=sum((p.pair_ids for p in parts), ()),
            parent_refs=sum((p.parent_refs for p in parts), ()),
            child_refs=sum((p.child_refs for p in parts), ()),
            labels=np.concatenate([p.labels for p in parts]),
            relations=sum((p.relations for p in parts), ()),
            folds=sum((p.folds for p in parts), ()),
            parent2_refs=sum((p.parent2_refs for p in parts), ()) if tri == {True} else None,
        )


@dataclass
class PairBatch:
    """Feature matrices of a batch of pairs, one row per pair."""
    parent: np.ndarray
    child: np.ndarray
    labels: np.ndarray
    relations: tuple = ()
    parent2: Optional[np.ndarray] = None

    def __post_init__(self):
        rows = {self.parent.shape[0], self.child.shape[0], len(self.labels)}
        if self.parent2 is not None:
            rows.add(self.parent2.shape[0])
        if len(rows) != 1:
            raise DataError(f"PairBatch members have unequal row counts {sorted(rows)}")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, index) -> "PairBatch":
        index = np.asarray(index, dtype=np.intp)
        return PairBatch(
            parent=self.parent[index],
            child=self.child[index],
            labels=self.labels[index],
            relations=tuple(self.relations[i] for i in index) if self.relations else (),
            parent2=self.parent2[index] if self.parent2 is not None else None,
        )


def materialize(pairs: PairSet, table: FeatureTable) -> PairBatch:
    """Look up every member's feature row."""
    missing = table.missing(list(pairs.parent_refs + pairs.child_refs + (pairs.parent2_refs or ())))
    if missing:
        raise DataError(f"{len(missing)} feature ids are missing from the table, e.g. {missing[:5]}")
    return PairBatch(
        parent=table.lookup(pairs.parent_refs),
        child=table.lookup(pairs.child_refs),
        labels=pairs.labels.astype(np.float64),
        relations=pairs.relations,
        parent2=table.lookup(pairs.parent2_refs) if pairs.parent2_refs is not None else None,
    )


# ============================================================================
# Balanced negatives
# ============================================================================

def _parents(r: ManifestRecord) -> set:
    return {p for p in (r.parent_ref, r.parent2_ref) if p is not None}


def _unrelated(positives: Sequence[ManifestRecord], pool: Sequence[int], i: int) -> List[int]:
    """Members of `pool` whose child is neither positive i's child nor a child of its parents."""
    r = positives[i]
    parents = _parents(r)
    return [
        j for j in pool
        if j != i and positives[j].child_ref != r.child_ref and not (_parents(positives[j]) & parents)
    ]


def build_negatives(
    positives: Sequence[ManifestRecord],
    seed: int,
    resample_each_epoch: bool = False,
    epoch: int = 0,
) -> PairSet:
    """One negative per positive: parent i with the child of another positive j != i.

    Children are drawn from positives of the same relation in the same fold,
    skipping children of the same parents; when none is left the draw falls
    back to the whole fold.
    Tri-subject negatives keep both parents and swap the child.

    Args:
        positives: Positive records of a single fold, at least two.
        seed: Seed of the draw.
        resample_each_epoch: Mix `epoch` into the seed for a fresh draw per epoch.
        epoch: Epoch index used when resampling.

    Returns:
        PairSet of len(positives) negatives, aligned with `positives`.

    Raises:
        DataError: When the positives span several folds or cannot all get a negative.
    """
    positives = list(positives)
    if len(positives) < 2:
        raise DataError(f"Need at least 2 positives to build negatives, got {len(positives)}")
    folds = {r.fold for r in positives}
    if len(folds) != 1:
        raise DataError(f"Negatives are built within one fold, got folds {sorted(folds)}")

    rng = np.random.default_rng([seed, epoch] if resample_each_epoch else seed)
    groups: Dict[str, List[int]] = {}
    for i, r in enumerate(positives):
        groups.setdefault(r.relation, []).append(i)
    everyone = list(range(len(positives)))

    negatives = []
    for i, r in enumerate(positives):
        candidates = _unrelated(positives, groups[r.relation], i)
        if not candidates:
            logger.warning(
                f"No unrelated {r.relation} child for {r.pair_id} in fold {r.fold}; drawing its negative from the whole fold"
            )
            candidates = _unrelated(positives, everyone, i)
        if not candidates:
            raise DataError(f"Every child in fold {r.fold} is kin to the parents of {r.pair_id}")
        j = candidates[int(rng.integers(len(candidates)))]
        negatives.append(ManifestRecord(
            pair_id=f"{r.pair_id}~neg",
            relation=r.relation,
            fold=r.fold,
            parent_ref=r.parent_ref,
            child_ref=positives[j].child_ref,
            parent2_ref=r.parent2_ref,
        ))
    return PairSet.from_records(negatives, label=0)


def fold_seed(seed: int, fold: int) -> int:
    """Independent negative-sampling seed for each fold."""
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def labelled_fold(records: Sequence[ManifestRecord], seed: int, resample_each_epoch: bool = False, epoch: int = 0) -> PairSet:
    """Positives of one fold followed by an equal number of negatives."""
    fold = records[0].fold
    negatives = build_negatives(records, fold_seed(seed, fold), resample_each_epoch, epoch)
    return PairSet.concat([PairSet.from_records(records), negatives])


# ============================================================================
# Cross-validation split
# ============================================================================

@dataclass
class SplitData:
    """Train and held-out pairs of one cross-validation run."""
    held_out_fold: int
    train: PairSet
    test: PairSet
    train_records: Dict[int, List[ManifestRecord]] = field(default_factory=dict)
    seed: int = 0

    def resampled_train(self, epoch: int) -> PairSet:
        """Train positives with freshly drawn negatives for `epoch`."""
        return PairSet.concat([
            labelled_fold(records, self.seed, resample_each_epoch=True, epoch=epoch)
            for _, records in sorted(self.train_records.items())
        ])


def cv_split(manifest: SampleManifest, held_out_fold: int, seed: int = 0) -> SplitData:
    if not 1 <= held_out_fold <= N_FOLDS:
        raise ManifestError(f"Held-out fold must be in 1..{N_FOLDS}, got {held_out_fold}")
    manifest.check_complete()
    by_fold = manifest.by_fold()

    test = labelled_fold(by_fold[held_out_fold], seed)
    train_records = {f: recs for f, recs in by_fold.items() if f != held_out_fold}
    train = PairSet.concat([labelled_fold(recs, seed) for _, recs in sorted(train_records.items())])

    test_ids = set(test.parent_refs + test.child_refs + (test.parent2_refs or ()))
    shared = test_ids.intersection(train.parent_refs + train.child_refs + (train.parent2_refs or ()))
    if shared:
        logger.warning(f"{len(shared)} feature ids appear in both train and held-out fold {held_out_fold}")
    logger.info(f"Fold {held_out_fold}: {len(train)} train pairs, {len(test)} held-out pairs")
    return SplitData(held_out_fold=held_out_fold, train=train, test=test, train_records=train_records, seed=seed)
