"""JSON-lines sample manifests: one positive kin pair (or triple) per line."""
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Union

from pydantic import ValidationError

from rgn.errors import ManifestError
from rgn.schemas import N_FOLDS, TRI_SUBJECT_RELATIONS, ManifestRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleManifest:
    records: tuple

    def __post_init__(self):
        dupes = sorted(pid for pid, n in Counter(r.pair_id for r in self.records).items() if n > 1)
        if dupes:
            raise ManifestError("Duplicate pair_id", [f"duplicate pair_id {pid!r}" for pid in dupes])

    @classmethod
    def from_records(cls, records: Iterable[ManifestRecord]) -> "SampleManifest":
        return cls(records=tuple(records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def folds(self) -> List[int]:
        return sorted({r.fold for r in self.records})

    @property
    def relations(self) -> List[str]:
        return sorted({r.relation for r in self.records})

    @property
    def tri_subject(self) -> bool:
        return any(r.relation in TRI_SUBJECT_RELATIONS for r in self.records)

    def in_fold(self, fold: int) -> List[ManifestRecord]:
        return [r for r in self.records if r.fold == fold]

    def by_fold(self) -> Dict[int, List[ManifestRecord]]:
        return {fold: self.in_fold(fold) for fold in self.folds}

    def feature_refs(self) -> List[str]:
        refs = []
        for r in self.records:
            refs.extend([r.parent_ref, r.child_ref] + ([r.parent2_ref] if r.parent2_ref else []))
        return refs

    def check_complete(self) -> None:
        """Every fold 1..N_FOLDS must hold at least one record."""
        missing = [f for f in range(1, N_FOLDS + 1) if not self.in_fold(f)]
        if missing:
            raise ManifestError("Manifest is missing folds", [f"fold {f} has no records" for f in missing])


def parse_manifest(lines: Iterable[str], source: str = "<manifest>") -> SampleManifest:
    records: List[ManifestRecord] = []
    problems: List[str] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{source}:{lineno}: malformed JSON ({exc.msg})") from exc
        if not isinstance(raw, dict):
            raise ManifestError(f"{source}:{lineno}: expected a JSON object")
        try:
            records.append(ManifestRecord(**raw))
        except ValidationError as exc:
            for err in exc.errors():
                loc = ".".join(str(x) for x in err["loc"]) or "record"
                problems.append(f"line {lineno} {loc}: {err['msg']}")
    if problems:
        raise ManifestError(f"{source}: invalid records", problems)
    return SampleManifest.from_records(records)


def load_manifest(path: Union[str, Path]) -> SampleManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"Manifest not found: {path}")
    with path.open("r", encoding="utf-8") as fh:
        manifest = parse_manifest(fh, source=str(path))
    logger.info(f"Loaded {len(manifest)} records from {path} (folds {manifest.folds})")
    return manifest


def save_manifest(manifest: SampleManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in manifest:
            fh.write(json.dumps(record.model_dump(exclude_none=True)) + "\n")
    return path
