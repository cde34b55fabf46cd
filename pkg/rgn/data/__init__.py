from rgn.data.features import FeatureTable, load_features, save_features
from rgn.data.manifest import SampleManifest, load_manifest, parse_manifest, save_manifest
from rgn.data.sampling import PairBatch, PairSet, SplitData, build_negatives, cv_split, materialize
from rgn.data.synthetic import synth_from_config, synth_generate

__all__ = [
    "FeatureTable", "PairBatch", "PairSet", "SampleManifest", "SplitData",
    "build_negatives", "cv_split", "load_features", "load_manifest", "materialize",
    "parse_manifest", "save_features", "save_manifest", "synth_from_config", "synth_generate",
]
