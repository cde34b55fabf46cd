"""Closed-form multiply-accumulate counts of the reasoning module for one pair.

An r x c affine map applied to n nodes costs n*r*c MACs. Weighted sums over
node features cost one MAC per weight per feature. Activations, softmax,
pooling and the feature backbone are not counted.
"""
from typing import Dict, Sequence

from rgn.errors import ConfigError
from rgn.schemas import HRgnConfig, MacReport, MlpBaselineConfig, SRgnConfig


def _mlp_macs(widths: Sequence[int]) -> int:
    return sum(r * c for r, c in zip(widths, widths[1:]))


def _report(model: str, cfg, stages: Dict[str, int]) -> MacReport:
    stages = {name: int(n) for name, n in stages.items() if n > 0}
    return MacReport(model=model, config=cfg.model_dump(), stages=stages, total=sum(stages.values()))


def srgn_macs(cfg: SRgnConfig) -> MacReport:
    d = cfg.d
    widths = [cfg.subject_count, *cfg.dims]
    stages: Dict[str, int] = {}
    for k, (a, b) in enumerate(zip(widths, widths[1:]), start=1):
        stages[f"layer{k}.message"] = (d + 1) * a * b
        stages[f"layer{k}.surrounding"] = d * 2 * b * b
        stages[f"layer{k}.central"] = 2 * b * b
    stages["head"] = _mlp_macs([(d + 1) * cfg.dims[-1], *cfg.head_hidden, 1])
    return _report("srgn", cfg, stages)


def hrgn_macs(cfg: HRgnConfig) -> MacReport:
    counts = [cfg.d, *cfg.latent]
    n_total = sum(counts)
    n_latent = sum(counts[1:])
    n_below_top = sum(counts[:-1])
    n_top = counts[-1]
    f0 = cfg.subject_count

    stages: Dict[str, int] = {}
    if cfg.init_mode == "self-attention":
        stages["init.attention"] = n_below_top * _mlp_macs([f0, cfg.attention_hidden, 1])
        stages["init.weighted_sum"] = n_below_top * f0

    widths = [f0, *cfg.dims]
    for k, (a, b) in enumerate(zip(widths, widths[1:]), start=1):
        stages[f"step{k}.transform"] = n_total * a * b
        stages[f"step{k}.bottom_up"] = n_latent * 2 * b * b
        # pairwise cosines plus the weighted sum, both N_L^2 * F
        stages[f"step{k}.top_relation"] = 2 * n_top * n_top * b if n_top > 1 else 0
        stages[f"step{k}.top_down"] = n_below_top * 2 * b * b
    stages["head"] = _mlp_macs([n_total * cfg.dims[-1], *cfg.head_hidden, 1])
    return _report("hrgn", cfg, stages)


def mlp_baseline_macs(cfg: MlpBaselineConfig) -> MacReport:
    return _report("mlp-baseline", cfg, {"mlp": _mlp_macs([cfg.subject_count * cfg.d, *cfg.hidden, 1])})


def count_macs(cfg) -> MacReport:
    if isinstance(cfg, SRgnConfig):
        return srgn_macs(cfg)
    if isinstance(cfg, HRgnConfig):
        return hrgn_macs(cfg)
    if isinstance(cfg, MlpBaselineConfig):
        return mlp_baseline_macs(cfg)
    raise ConfigError(f"No MAC count for {type(cfg).__name__}")
