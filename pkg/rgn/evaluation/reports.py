"""Emit evaluation reports as CSV/JSON files and human-readable tables."""
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

import pandas as pd

from rgn.models.topology import HierTopology
from rgn.schemas import EvalReport, MacReport, RocCurve

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def report_frame(report: EvalReport) -> pd.DataFrame:
    """Rows are folds plus a final 'mean' row; columns are relations plus 'mean'."""
    rows = []
    for fold in report.folds:
        row = {"fold": str(fold)}
        row.update({rel: report.per_fold[fold].get(rel) for rel in report.relations})
        row["mean"] = report.fold_mean[fold]
        rows.append(row)
    mean_row = {"fold": "mean", **{rel: report.relation_mean[rel] for rel in report.relations}, "mean": report.mean}
    rows.append(mean_row)
    return pd.DataFrame(rows, columns=["fold", *report.relations, "mean"])


def roc_frame(curve: RocCurve) -> pd.DataFrame:
    return pd.DataFrame({"fpr": curve.fpr, "tpr": curve.tpr})


def write_report(report: EvalReport, out_dir: PathLike) -> Dict[str, Path]:
    """Write <model>_report.csv, <model>_report.json and the ROC point files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.model
    paths = {
        "csv": out / f"{stem}_report.csv",
        "json": out / f"{stem}_report.json",
        "roc": out / f"{stem}_roc.csv",
    }
    report_frame(report).to_csv(paths["csv"], index=False, float_format="%.17g")
    paths["json"].write_text(report.model_dump_json(indent=2), encoding="utf-8")
    roc_frame(report.roc).to_csv(paths["roc"], index=False, float_format="%.17g")
    for rel, curve in report.relation_roc.items():
        path = out / f"{stem}_roc_{rel}.csv"
        roc_frame(curve).to_csv(path, index=False, float_format="%.17g")
        paths[f"roc_{rel}"] = path
    logger.info(f"Wrote {stem} report to {out}")
    return paths


def _percent(value) -> str:
    return "-" if value is None or pd.isna(value) else f"{100.0 * value:.1f}"


def format_report(report: EvalReport) -> str:
    """Verification rates in percent with one decimal, plus the pooled AUC."""
    frame = report_frame(report)
    for col in [*report.relations, "mean"]:
        frame[col] = frame[col].map(_percent)
    header = f"{report.model}: mean verification rate (%)"
    return f"{header}\n{frame.to_string(index=False)}\nAUC {report.roc.auc:.4f}"


def format_comparison(reports: Sequence[EvalReport]) -> str:
    """One row per model: per-relation means, overall mean and AUC."""
    relations: List[str] = sorted({rel for r in reports for rel in r.relations})
    rows = []
    for r in reports:
        row = {"model": r.model}
        row.update({rel: _percent(r.relation_mean.get(rel)) for rel in relations})
        row["mean"] = _percent(r.mean)
        row["auc"] = f"{r.roc.auc:.4f}"
        rows.append(row)
    return pd.DataFrame(rows, columns=["model", *relations, "mean", "auc"]).to_string(index=False)


def format_macs(report: MacReport) -> str:
    frame = pd.DataFrame({"stage": list(report.stages), "macs": list(report.stages.values())})
    lines = [f"{report.model}: multiply-accumulates per pair", f"# {report.note}", frame.to_string(index=False)]
    lines.append(f"total {report.total}")
    return "\n".join(lines)


def format_topology(topo: HierTopology) -> str:
    return "\n".join(topo.dump() + topo.summary())
