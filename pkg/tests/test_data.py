"""Tests for manifests, feature tables, negative sampling, the fold split and synthetic data."""
import json

import numpy as np
import pytest

from rgn.data.features import FTB_MAGIC, FeatureTable, decode_ftb, encode_ftb, load_features, save_features
from rgn.data.manifest import SampleManifest, load_manifest, parse_manifest, save_manifest
from rgn.data.sampling import PairSet, build_negatives, cv_split, materialize
from rgn.data.synthetic import synth_generate
from rgn.errors import DataError, ManifestError
from rgn.models.baselines import cos_baseline
from rgn.schemas import ManifestRecord


# ============================================================================
# Helpers
# ============================================================================

def _record(i, fold=1, relation="F-S", **extra):
    return ManifestRecord(
        pair_id=f"p{i}", relation=relation, fold=fold, parent_ref=f"x{i}", child_ref=f"y{i}", **extra
    )


def _line(i, **overrides):
    raw = {"pair_id": f"p{i}", "relation": "F-S", "fold": 1, "parent_ref": f"x{i}", "child_ref": f"y{i}"}
    raw.update(overrides)
    return json.dumps(raw)


def _manifest(per_fold, relations=("F-S",)):
    records = [
        _record(f * 100 + i, fold=f, relation=relations[i % len(relations)])
        for f in range(1, 6)
        for i in range(per_fold)
    ]
    return SampleManifest.from_records(records)


def _table_for(manifest, width=3, seed=0):
    ids = manifest.feature_refs()
    return FeatureTable(ids, np.random.default_rng(seed).standard_normal((len(ids), width)))


# ============================================================================
# Manifests
# ============================================================================

class TestManifest:
    """JSON-lines sample manifests."""

    def test_well_formed(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("\n".join(_line(i) for i in range(4)) + "\n", encoding="utf-8")
        assert len(load_manifest(path)) == 4

    def test_duplicate_pair_id_named(self):
        with pytest.raises(ManifestError, match="p1"):
            parse_manifest([_line(1), _line(2), _line(1)])

    def test_tri_subject_needs_second_parent(self):
        with pytest.raises(ManifestError, match="line 1"):
            parse_manifest([_line(1, relation="FM-S")])

    def test_bi_subject_rejects_second_parent(self):
        with pytest.raises(ManifestError):
            parse_manifest([_line(1, parent2_ref="z1")])

    def test_malformed_json_reports_line(self):
        with pytest.raises(ManifestError, match=":2:"):
            parse_manifest([_line(1), "{not json"])

    def test_problems_are_listed(self):
        with pytest.raises(ManifestError) as info:
            parse_manifest([_line(1, fold=9), _line(2, relation="X-Y")])
        assert len(info.value.problems) == 2

    def test_blank_lines_skipped(self):
        assert len(parse_manifest([_line(1), "", "  ", _line(2)])) == 2

    def test_save_and_load(self, tmp_path):
        manifest = SampleManifest.from_records([_record(1), _record(2, relation="FM-D", parent2_ref="z2")])
        loaded = load_manifest(save_manifest(manifest, tmp_path / "out.jsonl"))
        assert loaded.records == manifest.records
        assert loaded.tri_subject

    def test_missing_folds(self):
        with pytest.raises(ManifestError, match="fold 3"):
            SampleManifest.from_records([_record(i, fold=f) for i, f in enumerate([1, 2, 4, 5])]).check_complete()


# ============================================================================
# Feature tables
# ============================================================================

class TestFeatureTable:
    """Id-indexed feature rows and their file formats."""

    def test_lookup_order(self):
        table = FeatureTable(["a", "b", "c"], np.arange(6.0).reshape(3, 2))
        np.testing.assert_array_equal(table.lookup(["c", "a"]), [[4.0, 5.0], [0.0, 1.0]])
        np.testing.assert_array_equal(table["b"], [2.0, 3.0])

    def test_unknown_id(self):
        with pytest.raises(DataError):
            FeatureTable(["a"], np.ones((1, 2)))["b"]

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            FeatureTable(["a", "b"], np.array([[1.0, np.nan], [0.0, 0.0]]))

    def test_duplicate_ids_rejected(self):
        with pytest.raises(DataError):
            FeatureTable(["a", "a"], np.ones((2, 2)))

    def test_values_read_only(self):
        table = FeatureTable(["a"], np.ones((1, 2)))
        with pytest.raises(ValueError):
            table.values[0, 0] = 2.0

    @pytest.mark.parametrize("suffix", [".csv", ".ftb", ".parquet"])
    def test_file_formats(self, tmp_path, rng, suffix):
        table = FeatureTable(["id0", "id1", "id2"], rng.standard_normal((3, 4)))
        loaded = load_features(save_features(table, tmp_path / f"features{suffix}"))
        assert loaded.ids == table.ids
        np.testing.assert_array_equal(loaded.values, table.values)

    def test_csv_values_bit_exact(self, tmp_path):
        values = np.random.default_rng(11).standard_normal((50, 8)) * 10.0 ** np.arange(-4, 4)
        table = FeatureTable([f"id{i}" for i in range(50)], values)
        loaded = load_features(save_features(table, tmp_path / "wide.csv"))
        assert loaded.values.tobytes() == table.values.tobytes()

    def test_csv_header(self, tmp_path):
        path = save_features(FeatureTable(["a"], [[1.0, 2.0]]), tmp_path / "f.csv")
        assert path.read_text(encoding="utf-8").splitlines()[0] == "id,v1,v2"

    def test_ftb_layout(self):
        buf = encode_ftb(FeatureTable(["ab"], [[1.0]]))
        assert buf[:4] == FTB_MAGIC
        assert int.from_bytes(buf[4:8], "little") == 1
        assert len(buf) == 8 + 4 + 2 + 8

    def test_truncated_ftb_reports_offset(self):
        buf = encode_ftb(FeatureTable(["a", "b"], np.ones((2, 3))))
        with pytest.raises(DataError, match="offset"):
            decode_ftb(buf[:-5])

    def test_unknown_suffix(self, tmp_path):
        with pytest.raises(DataError):
            save_features(FeatureTable(["a"], [[1.0]]), tmp_path / "f.txt")


# ============================================================================
# Negatives
# ============================================================================

class TestBuildNegatives:
    """Balanced negatives within one fold."""

    def test_two_positives(self):
        negatives = build_negatives([_record(1), _record(2)], seed=0)
        assert len(negatives) == 2
        assert negatives.child_refs == ("y2", "y1")
        assert not negatives.labels.any()

    def test_size_equals_positive_count(self):
        records = [_record(i, relation=["F-S", "M-D"][i % 2]) for i in range(11)]
        assert len(build_negatives(records, seed=3)) == 11

    def test_deterministic(self):
        records = [_record(i) for i in range(10)]
        a, b = build_negatives(records, seed=4), build_negatives(records, seed=4)
        assert a.child_refs == b.child_refs

    def test_never_the_own_child_and_same_relation(self):
        records = [_record(i, relation=["F-S", "F-D", "M-S"][i % 3]) for i in range(30)]
        negatives = build_negatives(records, seed=5)
        child_relation = {r.child_ref: r.relation for r in records}
        for r, child in zip(records, negatives.child_refs):
            assert child != r.child_ref
            assert child_relation[child] == r.relation

    def test_every_other_child_is_drawn(self):
        records = [_record(i) for i in range(10)]
        seen = {i: set() for i in range(10)}
        for epoch in range(1000):
            negatives = build_negatives(records, seed=6, resample_each_epoch=True, epoch=epoch)
            for i, child in enumerate(negatives.child_refs):
                seen[i].add(child)
        for i in range(10):
            assert seen[i] == {f"y{j}" for j in range(10) if j != i}

    def test_tri_subject_keeps_both_parents(self):
        records = [_record(i, relation="FM-S", parent2_ref=f"z{i}") for i in range(4)]
        negatives = build_negatives(records, seed=0)
        assert negatives.parent_refs == tuple(f"x{i}" for i in range(4))
        assert negatives.parent2_refs == tuple(f"z{i}" for i in range(4))
        assert all(c != f"y{i}" for i, c in enumerate(negatives.child_refs))

    def test_lonely_relation_falls_back_to_fold(self):
        records = [_record(0, relation="M-D"), _record(1), _record(2)]
        negatives = build_negatives(records, seed=1)
        assert negatives.child_refs[0] in {"y1", "y2"}

    def test_siblings_are_never_negatives(self):
        records = [_record(0), _record(1), _record(2), _record(3)]
        records[1] = records[1].model_copy(update={"parent_ref": "x0"})
        for epoch in range(200):
            children = build_negatives(records, seed=2, resample_each_epoch=True, epoch=epoch).child_refs
            assert children[0] not in {"y0", "y1"}
            assert children[1] not in {"y0", "y1"}

    def test_tri_subject_siblings_are_never_negatives(self):
        records = [
            ManifestRecord(pair_id=f"p{i}", relation="FM-S", fold=1, parent_ref=f"f{i // 2}",
                           parent2_ref=f"m{i // 2}", child_ref=f"y{i}")
            for i in range(6)
        ]
        for epoch in range(200):
            children = build_negatives(records, seed=3, resample_each_epoch=True, epoch=epoch).child_refs
            for i, child in enumerate(children):
                assert int(child[1:]) // 2 != i // 2

    def test_all_siblings_fall_back_to_the_fold(self):
        records = [_record(0), _record(1), _record(2, relation="M-D")]
        records[1] = records[1].model_copy(update={"parent_ref": "x0"})
        negatives = build_negatives(records, seed=0)
        assert negatives.child_refs[:2] == ("y2", "y2")

    def test_fold_of_one_family(self):
        records = [_record(0), _record(1)]
        records[1] = records[1].model_copy(update={"parent_ref": "x0"})
        with pytest.raises(DataError):
            build_negatives(records, seed=0)

    def test_too_few_positives(self):
        with pytest.raises(DataError):
            build_negatives([_record(1)], seed=0)

    def test_one_fold_only(self):
        with pytest.raises(DataError):
            build_negatives([_record(1, fold=1), _record(2, fold=2)], seed=0)


# ============================================================================
# Fold split
# ============================================================================

class TestCvSplit:
    """Five-fold cross-validation splits."""

    def test_sizes(self):
        split = cv_split(_manifest(10), held_out_fold=3)
        assert len(split.train) == 80 and split.train.num_positive == 40
        assert len(split.test) == 20 and split.test.num_positive == 10
        assert set(split.test.folds) == {3}
        assert 3 not in set(split.train.folds)

    def test_test_folds_partition_the_positives(self):
        manifest = _manifest(6, relations=("F-S", "M-D"))
        seen = []
        for fold in range(1, 6):
            test = cv_split(manifest, fold).test
            seen += [pid for pid, label in zip(test.pair_ids, test.labels) if label == 1]
        assert sorted(seen) == sorted(r.pair_id for r in manifest)

    def test_negatives_do_not_cross_the_split(self):
        split = cv_split(_manifest(8), held_out_fold=2)
        test_children = set(split.test.child_refs)
        train_parents = set(split.train.parent_refs)
        neg = split.train.labels == 0
        assert not test_children.intersection(np.asarray(split.train.child_refs)[neg])
        assert not train_parents.intersection(split.test.parent_refs)

    def test_missing_fold(self):
        manifest = SampleManifest.from_records([_record(i, fold=f) for i, f in enumerate([1, 1, 2, 2, 3, 3, 4, 4])])
        with pytest.raises(ManifestError):
            cv_split(manifest, held_out_fold=1)

    def test_fold_out_of_range(self):
        with pytest.raises(ManifestError):
            cv_split(_manifest(2), held_out_fold=6)

    def test_resampled_train_changes_negatives_only(self):
        split = cv_split(_manifest(10), held_out_fold=1, seed=2)
        fresh = split.resampled_train(epoch=1)
        assert fresh.pair_ids == split.train.pair_ids
        np.testing.assert_array_equal(fresh.labels, split.train.labels)
        pos = split.train.labels == 1
        assert tuple(np.asarray(fresh.child_refs)[pos]) == tuple(np.asarray(split.train.child_refs)[pos])

    def test_materialize(self):
        manifest = _manifest(2)
        table = _table_for(manifest)
        batch = materialize(cv_split(manifest, 1).test, table)
        assert batch.parent.shape == (4, 3)
        np.testing.assert_array_equal(batch.labels, [1.0, 1.0, 0.0, 0.0])

    def test_materialize_missing_ids(self):
        manifest = _manifest(2)
        with pytest.raises(DataError):
            materialize(cv_split(manifest, 1).test, FeatureTable(["x"], np.ones((1, 3))))

    def test_pair_set_cannot_mix_subject_counts(self):
        with pytest.raises(DataError):
            PairSet.from_records([_record(1), _record(2, relation="FM-S", parent2_ref="z")])


# ============================================================================
# Synthetic data
# ============================================================================

class TestSynthGenerate:
    """Synthetic kinship-like families."""

    def test_shapes_and_folds(self):
        manifest, table = synth_generate(seed=1, n_families=20, d_raw=6)
        assert len(manifest) == 20 and len(table) == 40 and table.width == 6
        assert manifest.folds == [1, 2, 3, 4, 5]
        assert all(len(manifest.in_fold(f)) == 4 for f in range(1, 6))
        assert set(manifest.relations) <= {"F-S", "F-D", "M-S", "M-D"}

    def test_deterministic(self):
        (m1, t1), (m2, t2) = synth_generate(seed=7, n_families=10), synth_generate(seed=7, n_families=10)
        assert m1.records == m2.records
        assert t1.values.tobytes() == t2.values.tobytes()

    def test_full_sharing_without_noise_copies_the_parent(self):
        manifest, table = synth_generate(seed=2, n_families=10, d_raw=5, shared_fraction=1.0, noise_sigma=0.0)
        for r in manifest:
            np.testing.assert_array_equal(table[r.parent_ref], table[r.child_ref])
        parents = table.lookup([r.parent_ref for r in manifest])
        children = table.lookup([r.child_ref for r in manifest])
        np.testing.assert_allclose(cos_baseline(parents, children), 1.0, atol=1e-12)

    def test_tri_subject_second_parent_shares_other_coordinates(self):
        manifest, table = synth_generate(seed=3, n_families=10, d_raw=8, noise_sigma=0.0, tri_subject=True)
        assert manifest.tri_subject
        r = manifest.records[0]
        from_p = table[r.parent_ref] == table[r.child_ref]
        from_p2 = table[r.parent2_ref] == table[r.child_ref]
        assert from_p.sum() == 4 and from_p2.sum() == 4
        assert not np.any(from_p & from_p2)

    def test_invalid_fraction(self):
        with pytest.raises(ValueError):
            synth_generate(shared_fraction=1.5)
