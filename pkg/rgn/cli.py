"""Command-line interface.

Usage:
    python -m rgn train --config configs/default.yaml --model srgn --fold 1 --out runs/srgn
    python -m rgn crossval --config configs/synth_bench.yaml --model hrgn --out runs/hrgn
    python -m rgn count-macs --model hrgn --presets
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import ValidationError

from rgn.data.features import FeatureTable, load_features
from rgn.data.manifest import SampleManifest, load_manifest
from rgn.data.sampling import cv_split, materialize
from rgn.data.synthetic import synth_from_config
from rgn.engine import Tensor, bce_with_logit
from rgn.engine.checkpoint import restore_checkpoint
from rgn.engine.gradcheck import DEFAULT_TOLERANCE, check_gradients
from rgn.errors import ConfigError, GradientError, RGNError
from rgn.evaluation.crossval import FoldScores, build_report, crossval
from rgn.evaluation.macs import count_macs
from rgn.evaluation.metrics import safe_auc, verification_rate
from rgn.evaluation.reports import format_comparison, format_macs, format_report, format_topology, write_report
from rgn.models.topology import build_hierarchy
from rgn.models.registry import MODEL_CONFIGS, make_model
from rgn.schemas import LATENT_PRESETS, ExperimentConfig, TrainConfig
from rgn.settings import get_settings
from rgn.training.trainer import build_for_training, train

logger = logging.getLogger(__name__)

SECTIONS = ("srgn", "hrgn", "mlp", "train", "synth")
MODEL_CHOICES = ("srgn", "hrgn", "mlp-baseline", "cos-baseline")

# Small models for finite-difference checks
GRADCHECK_CONFIGS: Dict[str, dict] = {
    "srgn": {"d": 8, "k": 2, "dims": [6, 3]},
    "hrgn": {"d": 12, "latent": [4, 2], "k": 2, "dims": [6, 3]},
    "mlp-baseline": {"d": 8, "hidden": [5]},
}

# Models compared by synth-bench when no config file is given
SYNTH_BENCH_CONFIG: dict = {
    "srgn": {"d": 32, "dims": [16, 4]},
    "hrgn": {"d": 32, "latent": [8, 4], "dims": [16, 4]},
    "mlp": {"d": 32},
    "train": {"epochs": 40, "batch_size": 32, "eval_every": 200},
}


# ============================================================================
# Configuration
# ============================================================================

def _route_flat_keys(raw: dict) -> dict:
    """Move top-level keys into every section whose config declares them."""
    routed = {s: dict(raw.get(s) or {}) for s in SECTIONS}
    fields = {s: set(ExperimentConfig.model_fields[s].annotation.model_fields) for s in SECTIONS}
    for key, value in raw.items():
        if key in SECTIONS:
            continue
        targets = [s for s in SECTIONS if key in fields[s]]
        if not targets:
            raise ConfigError(f"Unknown config key {key!r}")
        for s in targets:
            routed[s].setdefault(key, value)
    return routed


def load_config(path: Optional[str], defaults: Optional[dict] = None) -> ExperimentConfig:
    raw: dict = {}
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"Malformed YAML in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"Config {path} must be a mapping")
    elif defaults:
        raw = defaults
    return ExperimentConfig(**_route_flat_keys(raw))


def apply_overrides(cfg: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    train_updates = {}
    if getattr(args, "seed", None) is not None:
        train_updates["seed"] = args.seed
    model = getattr(args, "model", None)
    if model and model != "cos-baseline":
        train_updates["model"] = model
    if train_updates:
        train_cfg = TrainConfig(**{**cfg.train.model_dump(), **train_updates})
        cfg = cfg.model_copy(update={"train": train_cfg})
    return cfg


def load_data(args: argparse.Namespace, cfg: ExperimentConfig) -> Tuple[SampleManifest, FeatureTable]:
    """Manifest and features from --manifest/--features, or the synthetic generator."""
    if args.manifest or args.features:
        if not (args.manifest and args.features):
            raise ConfigError("--manifest and --features must be given together")
        return load_manifest(args.manifest), load_features(args.features)
    logger.info("No dataset given; generating the synthetic dataset from the synth config")
    return synth_from_config(cfg.synth)


def _output_dir(args: argparse.Namespace) -> Path:
    return Path(args.out or get_settings().output_dir)


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


# ============================================================================
# Commands
# ============================================================================

def _require_trainable(args: argparse.Namespace, command: str) -> None:
    if getattr(args, "model", None) == "cos-baseline":
        raise ConfigError(f"{command} needs a trainable model; cos-baseline has no parameters (use crossval)")


def cmd_train(args: argparse.Namespace) -> int:
    _require_trainable(args, "train")
    cfg = apply_overrides(load_config(args.config), args)
    manifest, table = load_data(args, cfg)
    split = cv_split(manifest, args.fold, seed=cfg.train.seed)
    out = _output_dir(args)
    record, _, _ = train(cfg.train, split, table, cfg.model_config_for(cfg.train.model), out, run_name=cfg.train.model)
    _print_json(record.model_dump())
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    _require_trainable(args, "eval")
    cfg = apply_overrides(load_config(args.config), args)
    manifest, table = load_data(args, cfg)
    kind = cfg.train.model
    model, extractor = build_for_training(cfg.train, cfg.model_config_for(kind), table.width)
    restore_checkpoint(args.checkpoint, model.store, model.checkpoint_meta())

    split = cv_split(manifest, args.fold, seed=cfg.train.seed)
    batch = materialize(split.test, table)
    scores = model.predict_proba(batch, extractor)
    report = build_report(kind, [FoldScores(fold=args.fold, scores=scores, labels=batch.labels, relations=batch.relations)])
    result = {
        "model": kind,
        "fold": args.fold,
        "verification_rate": verification_rate(scores, batch.labels),
        "auc": safe_auc(scores, batch.labels),
        "per_relation": report.per_fold[args.fold],
    }
    out = _output_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{kind}_eval_fold{args.fold}.json").write_text(json.dumps(result, indent=2), encoding="utf-8")
    _print_json(result)
    return 0


def cmd_crossval(args: argparse.Namespace) -> int:
    cfg = apply_overrides(load_config(args.config), args)
    manifest, table = load_data(args, cfg)
    kind = args.model or cfg.train.model
    out = _output_dir(args)
    report = crossval(manifest, table, kind, cfg.model_config_for(kind), cfg.train, out)
    write_report(report, out)
    print(format_report(report))
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    kind = args.model or "srgn"
    if kind == "cos-baseline":
        raise ConfigError("cos-baseline has no parameters to check")
    if args.config:
        model_cfg = load_config(args.config).model_config_for(kind)
    else:
        model_cfg = MODEL_CONFIGS[kind](**GRADCHECK_CONFIGS[kind])
    seed = args.seed if args.seed is not None else 0
    model = make_model(kind, model_cfg, seed=seed)

    rng = np.random.default_rng(seed + 1)
    shape = (args.batch, model_cfg.d)
    gx, gy = Tensor(rng.uniform(-1, 1, shape)), Tensor(rng.uniform(-1, 1, shape))
    gz = Tensor(rng.uniform(-1, 1, shape)) if model_cfg.subject_count == 3 else None
    labels = (np.arange(args.batch) % 2).astype(np.float64)

    results = check_gradients(lambda: bce_with_logit(model.forward(gx, gy, gz), labels), model.store, tolerance=args.tolerance)
    for r in results:
        print(f"{r.name:<32} rel_err {r.relative_error:.3e}  {'ok' if r.passed else 'FAIL'}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise GradientError(f"Gradient check failed for {failed}")
    return 0


def cmd_synth_bench(args: argparse.Namespace) -> int:
    cfg = apply_overrides(load_config(args.config, defaults=SYNTH_BENCH_CONFIG), args)
    manifest, table = synth_from_config(cfg.synth)
    out = _output_dir(args)
    kinds = ["srgn", "hrgn", "mlp-baseline"]
    if not cfg.synth.tri_subject:
        kinds.append("cos-baseline")
    reports = []
    for kind in kinds:
        report = crossval(manifest, table, kind, cfg.model_config_for(kind), cfg.train, out)
        write_report(report, out)
        reports.append(report)
    print(format_comparison(reports))
    return 0


def cmd_count_macs(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    kind = args.model or "hrgn"
    if kind == "cos-baseline":
        raise ConfigError("count-macs covers the trainable models")
    model_cfg = cfg.model_config_for(kind)
    configs = [model_cfg]
    if args.presets:
        if kind != "hrgn":
            raise ConfigError("--presets applies to hrgn only")
        configs = [model_cfg.model_copy(update={"latent": list(widths)}) for widths in LATENT_PRESETS.values()]

    reports = []
    for c in configs:
        report = count_macs(c)
        reports.append(report)
        if kind == "hrgn":
            print(format_topology(build_hierarchy(c.layer_cfg)))
        print(format_macs(report))
        print()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{kind}_macs.json").write_text(
            json.dumps([r.model_dump() for r in reports], indent=2), encoding="utf-8"
        )
    return 0


# ============================================================================
# Entry point
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgn", description="Reasoning graph networks for kinship verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="Override train.seed")
        p.add_argument("--out", help="Output directory")
        p.add_argument("--manifest", help="JSON-lines sample manifest")
        p.add_argument("--features", help="Feature table (.csv, .ftb or .parquet)")
        p.add_argument("--model", choices=MODEL_CHOICES, help="Model kind")

    p = sub.add_parser("train", help="Train one model with one held-out fold")
    common(p)
    p.add_argument("--fold", type=int, default=1, help="Held-out fold (1-5)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Evaluate a checkpoint on a held-out fold")
    common(p)
    p.add_argument("--checkpoint", required=True, help="Checkpoint written by train")
    p.add_argument("--fold", type=int, default=1, help="Held-out fold (1-5)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crossval", help="Five-fold cross-validation")
    common(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("gradcheck", help="Finite-difference gradient check")
    common(p)
    p.add_argument("--batch", type=int, default=4, help="Random pairs in the check batch")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE, help="Per-entry relative tolerance")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth-bench", help="Compare every model on the synthetic dataset")
    common(p)
    p.set_defaults(func=cmd_synth_bench)

    p = sub.add_parser("count-macs", help="Multiply-accumulate counts per pair")
    common(p)
    p.add_argument("--presets", action="store_true", help="Count every latent preset (hrgn)")
    p.set_defaults(func=cmd_count_macs)
    return parser


def _error_line(exc: BaseException) -> str:
    return json.dumps({"error": type(exc).__name__, "message": str(exc)})


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=get_settings().log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RGNError, ValidationError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except Exception as exc:
        logger.exception("Unexpected failure")
        print(_error_line(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
