"""Pydantic schemas for model, training and data configuration, and for emitted records."""
import logging
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from rgn.errors import ConfigError

logger = logging.getLogger(__name__)

PoolKind = Literal["avg", "max"]
InitScheme = Literal["xavier-uniform", "zeros"]
Relation = Literal["F-S", "F-D", "M-S", "M-D", "FM-S", "FM-D"]
ModelKind = Literal["srgn", "hrgn", "mlp-baseline", "cos-baseline"]
TrainableKind = Literal["srgn", "hrgn", "mlp-baseline"]

BI_SUBJECT_RELATIONS: Tuple[str, ...] = ("F-S", "F-D", "M-S", "M-D")
TRI_SUBJECT_RELATIONS: Tuple[str, ...] = ("FM-S", "FM-D")
N_FOLDS = 5

# Latent layer widths compared in the layer-count ablation (D = 512)
LATENT_PRESETS: Dict[str, Tuple[int, ...]] = {
    "L1": (32,),
    "L2": (128, 16),
    "L3": (128, 32, 8),
    "L4": (128, 32, 8, 2),
}


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def build_config(config_cls: Type[ConfigT], values: Mapping[str, Any]) -> ConfigT:
    """Construct `config_cls` from `values`, reporting any invalid field as ConfigError.

    Instantiating a config class directly raises pydantic's ValidationError
    instead, with the ConfigError message of a failed invariant inside it.
    """
    try:
        return config_cls(**values)
    except ValidationError as exc:
        raise ConfigError(f"Invalid {config_cls.__name__}: {exc}") from exc


def validate_widths(counts: List[int]) -> None:
    """Layer widths: at least one latent layer, all >= 1, never increasing."""
    _check(len(counts) >= 2, f"Need at least one latent layer, got widths {counts}")
    _check(all(n >= 1 for n in counts), f"Every layer width must be >= 1, got {counts}")
    for lower, upper in zip(counts, counts[1:]):
        _check(upper <= lower, f"Layer widths must not increase: {lower} -> {upper} in {counts}")
        if upper == lower:
            logger.warning(f"Equal consecutive layer widths {lower} -> {upper} in {counts}")


# ============================================================================
# Graph and model configuration
# ============================================================================

class LayerConfig(BaseModel):
    """Widths [N0, N1, ..., NL] of the hierarchical graph; N0 is the feature dimension D."""
    node_counts: List[int] = Field(..., description="Node count per graph layer, comparison layer first")

    @field_validator("node_counts")
    @classmethod
    def _validate_counts(cls, counts: List[int]) -> List[int]:
        validate_widths(counts)
        return counts

    @property
    def depth(self) -> int:
        """Number of latent layers L."""
        return len(self.node_counts) - 1

    @property
    def d(self) -> int:
        return self.node_counts[0]


class SRgnConfig(BaseModel):
    """Star-shaped reasoning graph network."""
    d: int = Field(512, ge=1, description="Feature dimension D (number of surrounding nodes)")
    subject_count: Literal[2, 3] = Field(2, description="2 for bi-subject, 3 for tri-subject verification")
    k: int = Field(2, ge=1, description="Number of message passing layers K")
    dims: List[int] = Field(default_factory=lambda: [512, 4], description="Feature dims F1..FK")
    init_pool: PoolKind = Field("avg", description="Pooling used to initialize the central node")
    aggre_pool: PoolKind = Field("max", description="Pooling that aggregates surrounding messages")
    untie_central_message: bool = Field(False, description="Separate message matrix for the central node")
    head_hidden: List[int] = Field(default_factory=list, description="Hidden widths of the readout MLP")
    init: InitScheme = Field("xavier-uniform", description="Weight initialization scheme")

    @model_validator(mode="after")
    def _validate(self) -> "SRgnConfig":
        _check(len(self.dims) == self.k, f"dims {self.dims} must list exactly k={self.k} widths")
        _check(all(f >= 1 for f in self.dims), f"All dims must be >= 1, got {self.dims}")
        _check(all(h >= 1 for h in self.head_hidden), f"Head widths must be >= 1, got {self.head_hidden}")
        return self


class HRgnConfig(BaseModel):
    """Hierarchical reasoning graph network."""
    d: int = Field(512, ge=1, description="Feature dimension D = N0")
    subject_count: Literal[2, 3] = Field(2, description="2 for bi-subject, 3 for tri-subject verification")
    latent: List[int] = Field(default_factory=lambda: list(LATENT_PRESETS["L2"]), description="Latent widths N1..NL")
    k: int = Field(2, ge=1, description="Number of message passing steps K")
    dims: List[int] = Field(default_factory=lambda: [512, 4], description="Feature dims F1..FK")
    aggre_pool: PoolKind = Field("avg", description="Pooling used in bottom-up abstraction")
    init_mode: Literal["self-attention", "avg", "max"] = Field(
        "self-attention", description="How latent nodes are initialized from their children"
    )
    lower_input_mode: Literal["comprehensive", "literal-message"] = Field(
        "comprehensive", description="Lower-layer input aggregated during bottom-up abstraction"
    )
    attention_hidden: int = Field(8, ge=1, description="Hidden width of the attention scorer")
    attention_activation: Literal["tanh", "relu"] = Field("tanh", description="Attention scorer activation")
    head_hidden: List[int] = Field(default_factory=list, description="Hidden widths of the readout MLP")
    init: InitScheme = Field("xavier-uniform", description="Weight initialization scheme")

    @field_validator("latent", mode="before")
    @classmethod
    def _expand_preset(cls, value):
        if isinstance(value, str):
            if value not in LATENT_PRESETS:
                raise ConfigError(f"Unknown latent preset {value!r}; known: {sorted(LATENT_PRESETS)}")
            return list(LATENT_PRESETS[value])
        return value

    @model_validator(mode="after")
    def _validate(self) -> "HRgnConfig":
        _check(len(self.dims) == self.k, f"dims {self.dims} must list exactly k={self.k} widths")
        _check(all(f >= 1 for f in self.dims), f"All dims must be >= 1, got {self.dims}")
        _check(all(h >= 1 for h in self.head_hidden), f"Head widths must be >= 1, got {self.head_hidden}")
        validate_widths([self.d, *self.latent])
        return self

    @property
    def layer_cfg(self) -> LayerConfig:
        return build_config(LayerConfig, {"node_counts": [self.d, *self.latent]})


class MlpBaselineConfig(BaseModel):
    """Concatenation + MLP comparator."""
    d: int = Field(512, ge=1, description="Feature dimension D")
    subject_count: Literal[2, 3] = Field(2, description="Number of concatenated feature vectors")
    hidden: List[int] = Field(default_factory=lambda: [64], description="Hidden layer widths")
    init: InitScheme = Field("xavier-uniform", description="Weight initialization scheme")


class TrainConfig(BaseModel):
    """Training loop settings shared by every trainable model."""
    model: TrainableKind = Field("srgn", description="Model kind to train")
    iterations: int = Field(1000, ge=1, description="Number of optimizer steps (Gamma)")
    epochs: Optional[int] = Field(None, ge=1, description="If set, overrides iterations as whole epochs")
    batch_size: int = Field(32, ge=1, description="Pairs per mini-batch")
    optimizer: Literal["adam", "sgd-momentum"] = Field("adam", description="Optimizer kind")
    lr: float = Field(1e-3, ge=0.0, description="Learning rate")
    betas: Tuple[float, float] = Field((0.9, 0.999), description="Adam moment decay rates")
    eps: float = Field(1e-8, gt=0.0, description="Adam denominator epsilon")
    momentum: float = Field(0.9, ge=0.0, description="SGD momentum")
    seed: int = Field(0, description="Seed for initialization, sampling and negatives")
    resample_negatives: bool = Field(False, description="Draw fresh negatives every epoch")
    eval_every: int = Field(100, ge=1, description="Iterations between metric records")
    extractor: Literal["precomputed", "toy-trainable"] = Field("precomputed", description="Feature extractor mode")


class SynthConfig(BaseModel):
    """Synthetic kinship-like dataset."""
    seed: int = Field(1, description="Generator seed")
    n_families: int = Field(400, ge=2, description="Number of families (positive pairs)")
    d_raw: int = Field(32, ge=1, description="Raw feature width")
    shared_fraction: float = Field(0.5, ge=0.0, le=1.0, description="Fraction of coordinates inherited")
    noise_sigma: float = Field(0.1, ge=0.0, description="Gaussian noise added to every coordinate")
    tri_subject: bool = Field(False, description="Generate father-mother-child triples")


class ExperimentConfig(BaseModel):
    """Everything a CLI config file can set, one section per config object."""
    srgn: SRgnConfig = Field(default_factory=SRgnConfig)
    hrgn: HRgnConfig = Field(default_factory=HRgnConfig)
    mlp: MlpBaselineConfig = Field(default_factory=MlpBaselineConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)

    def model_config_for(self, kind: str):
        sections = {"srgn": self.srgn, "hrgn": self.hrgn, "mlp-baseline": self.mlp}
        if kind == "cos-baseline":
            return None
        if kind not in sections:
            raise ConfigError(f"Unknown model kind: {kind}")
        return sections[kind]


# ============================================================================
# Data records
# ============================================================================

class ManifestRecord(BaseModel):
    """One positive kin pair (or triple) of a dataset manifest."""
    pair_id: str = Field(..., min_length=1, description="Unique pair identifier")
    relation: Relation = Field(..., description="Kin relation type")
    fold: int = Field(..., ge=1, le=N_FOLDS, description="Cross-validation fold")
    parent_ref: str = Field(..., description="Feature id of the (first) parent")
    child_ref: str = Field(..., description="Feature id of the child")
    parent2_ref: Optional[str] = Field(None, description="Feature id of the second parent (FM-* only)")

    @model_validator(mode="after")
    def _validate_subjects(self) -> "ManifestRecord":
        tri = self.relation in TRI_SUBJECT_RELATIONS
        if tri and not self.parent2_ref:
            raise ValueError(f"{self.relation} record {self.pair_id} needs parent2_ref")
        if not tri and self.parent2_ref:
            raise ValueError(f"{self.relation} record {self.pair_id} must not carry parent2_ref")
        return self


# ============================================================================
# Emitted records
# ============================================================================

class EvalPoint(BaseModel):
    iteration: int
    epoch: int
    train_loss: float
    train_accuracy: float
    heldout_accuracy: Optional[float] = None


class RunRecord(BaseModel):
    """Metrics of one training run."""
    model: str
    points: List[EvalPoint] = Field(default_factory=list)
    checkpoint: Optional[str] = None

    @model_validator(mode="after")
    def _validate_order(self) -> "RunRecord":
        its = [p.iteration for p in self.points]
        if any(b <= a for a, b in zip(its, its[1:])):
            raise ValueError(f"Eval iterations must be strictly increasing, got {its}")
        return self


class RocCurve(BaseModel):
    fpr: List[float]
    tpr: List[float]
    auc: float = Field(..., ge=0.0, le=1.0)


class EvalReport(BaseModel):
    """Cross-validation results in the per-relation / per-fold table layout."""
    model: str
    relations: List[str]
    folds: List[int]
    per_fold: Dict[int, Dict[str, Optional[float]]] = Field(..., description="fold -> relation -> rate")
    fold_mean: Dict[int, float]
    relation_mean: Dict[str, float]
    mean: float
    roc: RocCurve
    relation_roc: Dict[str, RocCurve] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _validate_rates(self) -> "EvalReport":
        rates = [r for row in self.per_fold.values() for r in row.values() if r is not None]
        rates += list(self.fold_mean.values()) + list(self.relation_mean.values()) + [self.mean]
        if any(not (0.0 <= r <= 1.0) for r in rates):
            raise ValueError("Verification rates must lie in [0, 1]")
        return self


class MacReport(BaseModel):
    """Multiply-accumulate count of the reasoning module for one pair."""
    model: str
    config: Dict[str, object] = Field(default_factory=dict)
    stages: Dict[str, int]
    total: int
    note: str = "Counts multiply-accumulates of affine maps and weighted sums; activations, softmax and the feature backbone are excluded."

    @model_validator(mode="after")
    def _validate_total(self) -> "MacReport":
        if any(v <= 0 for v in self.stages.values()):
            raise ValueError(f"Stage counts must be positive: {self.stages}")
        if sum(self.stages.values()) != self.total:
            raise ValueError("Stage counts must sum to the total")
        return self
