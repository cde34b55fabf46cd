from rgn.models.base import PairModel
from rgn.models.baselines import MlpBaseline, cos_baseline
from rgn.models.extractors import PrecomputedExtractor, ToyExtractor, build_extractor
from rgn.models.hrgn import HRGN, HierState, hrgn_step, init_hier
from rgn.models.registry import make_model
from rgn.models.srgn import SRGN, StarState, init_star, srgn_layer
from rgn.models.topology import Boundary, HierTopology, StarTopology, build_boundary, build_hierarchy

__all__ = [
    "Boundary", "HRGN", "HierState", "HierTopology", "MlpBaseline", "PairModel",
    "PrecomputedExtractor", "SRGN", "StarState", "StarTopology", "ToyExtractor",
    "build_boundary", "build_extractor", "build_hierarchy", "cos_baseline",
    "hrgn_step", "init_hier", "init_star", "make_model", "srgn_layer",
]
