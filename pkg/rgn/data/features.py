"""Feature tables: feature id -> fixed-width real vector.

Three on-disk formats are supported:

* CSV with header ``id,v1,...,vD``
* FTB1 binary: ``b"FTB1"``, u32 width, then per row u32 id length, UTF-8 id and
  width little-endian f64 values (rows run to end of file)
* Parquet with the same columns as the CSV form
"""
import logging
import struct
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from rgn.errors import DataError

logger = logging.getLogger(__name__)

FTB_MAGIC = b"FTB1"

PathLike = Union[str, Path]


class FeatureTable:
    """Immutable id-indexed matrix of feature rows."""

    def __init__(self, ids: Sequence[str], values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        ids = [str(i) for i in ids]
        if values.ndim != 2 or values.shape[0] != len(ids):
            raise DataError(f"Expected {len(ids)} rows of features, got array of shape {values.shape}")
        if values.shape[1] < 1:
            raise DataError("Feature width must be >= 1")
        if not np.all(np.isfinite(values)):
            bad = [ids[i] for i in np.flatnonzero(~np.isfinite(values).all(axis=1))[:5]]
            raise DataError(f"Non-finite feature values for ids {bad}")
        self._index: Dict[str, int] = {}
        for i, fid in enumerate(ids):
            if fid in self._index:
                raise DataError(f"Duplicate feature id {fid!r}")
            self._index[fid] = i
        self.ids: List[str] = ids
        self.values = values
        self.values.setflags(write=False)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, fid: str) -> bool:
        return fid in self._index

    def __getitem__(self, fid: str) -> np.ndarray:
        return self.values[self._row(fid)]

    def _row(self, fid: str) -> int:
        try:
            return self._index[fid]
        except KeyError:
            raise DataError(f"Unknown feature id {fid!r}") from None

    def lookup(self, fids: Sequence[str]) -> np.ndarray:
        """Rows for `fids`, stacked in order."""
        return self.values[[self._row(f) for f in fids]]

    def missing(self, fids: Sequence[str]) -> List[str]:
        return sorted({f for f in fids if f not in self._index})

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=[f"v{i}" for i in range(1, self.width + 1)])
        frame.insert(0, "id", self.ids)
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, source: str = "<frame>") -> "FeatureTable":
        if "id" not in frame.columns:
            raise DataError(f"{source}: missing 'id' column")
        value_cols = [c for c in frame.columns if c != "id"]
        expected = [f"v{i}" for i in range(1, len(value_cols) + 1)]
        if list(value_cols) != expected:
            raise DataError(f"{source}: value columns must be v1..v{len(value_cols)}, got {value_cols[:5]}...")
        try:
            values = frame[value_cols].to_numpy(dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise DataError(f"{source}: non-numeric feature values") from exc
        return cls(frame["id"].astype(str).tolist(), values)


# ============================================================================
# FTB1 binary codec
# ============================================================================

def encode_ftb(table: FeatureTable) -> bytes:
    chunks = [FTB_MAGIC, struct.pack("<I", table.width)]
    for fid, row in zip(table.ids, table.values):
        encoded = fid.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(np.ascontiguousarray(row, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_ftb(buf: bytes) -> FeatureTable:
    if buf[:4] != FTB_MAGIC:
        raise DataError(f"Bad feature table magic {buf[:4]!r}, expected {FTB_MAGIC!r}")
    if len(buf) < 8:
        raise DataError("Truncated feature table header at offset 4")
    (width,) = struct.unpack_from("<I", buf, 4)
    offset = 8
    ids, rows = [], []
    row_bytes = 8 * width
    while offset < len(buf):
        if offset + 4 > len(buf):
            raise DataError(f"Truncated feature table at offset {offset}")
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        if offset + n + row_bytes > len(buf):
            raise DataError(f"Truncated feature table at offset {offset}")
        ids.append(buf[offset:offset + n].decode("utf-8"))
        offset += n
        rows.append(np.frombuffer(buf, dtype="<f8", count=width, offset=offset))
        offset += row_bytes
    values = np.vstack(rows) if rows else np.zeros((0, width))
    return FeatureTable(ids, values)


# ============================================================================
# File I/O
# ============================================================================

def _format_for(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".parquet", ".pq"):
        return "parquet"
    if suffix in (".ftb", ".ftb1", ".bin"):
        return "ftb"
    raise DataError(f"Cannot infer feature table format from {path.name}; use .csv, .ftb or .parquet")


def load_features(path: PathLike) -> FeatureTable:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Feature table not found: {path}")
    fmt = _format_for(path)
    if fmt == "csv":
        table = FeatureTable.from_frame(pd.read_csv(path, dtype={"id": str}, float_precision="round_trip"), str(path))
    elif fmt == "parquet":
        table = FeatureTable.from_frame(pd.read_parquet(path, engine="pyarrow"), str(path))
    else:
        table = decode_ftb(path.read_bytes())
    logger.info(f"Loaded {len(table)} feature rows of width {table.width} from {path}")
    return table


def save_features(table: FeatureTable, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = _format_for(path)
    if fmt == "csv":
        table.to_frame().to_csv(path, index=False, float_format="%.17g")
    elif fmt == "parquet":
        table.to_frame().to_parquet(path, engine="pyarrow", index=False)
    else:
        path.write_bytes(encode_ftb(table))
    return path
