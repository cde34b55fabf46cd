"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"RGN1"
    u32  entry count
    per entry:
        u32  name length, UTF-8 name
        u32  rank
        u64  extent, repeated rank times
        f64  values, row-major

Entries whose name starts with "meta." carry model metadata (for example the
H-RGN layer widths) and are validated rather than loaded as parameters.
"""
import logging
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from rgn.engine.params import ParameterStore
from rgn.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"RGN1"
META_PREFIX = "meta."

PathLike = Union[str, Path]


def encode_checkpoint(entries: Dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<I", len(entries))]
    for name, value in entries.items():
        arr = np.ascontiguousarray(value, dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.buf):
            raise CheckpointError(
                f"Truncated checkpoint at offset {self.offset}: need {n} bytes for {what}, "
                f"{len(self.buf) - self.offset} left"
            )
        chunk = self.buf[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def decode_checkpoint(buf: bytes) -> Dict[str, np.ndarray]:
    reader = _Reader(buf)
    if reader.take(4, "magic") != MAGIC:
        raise CheckpointError("Bad checkpoint magic at offset 0")
    count = reader.u32("entry count")
    entries: Dict[str, np.ndarray] = {}
    for _ in range(count):
        start = reader.offset
        name_len = reader.u32("name length")
        try:
            name = reader.take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"Invalid UTF-8 name at offset {start + 4}") from exc
        if name in entries:
            raise CheckpointError(f"Duplicate entry {name!r} at offset {start}")
        rank = reader.u32(f"rank of {name}")
        shape = struct.unpack(f"<{rank}Q", reader.take(8 * rank, f"extents of {name}"))
        size = int(np.prod(shape, dtype=np.int64)) if rank else 1
        raw = reader.take(8 * size, f"values of {name}")
        entries[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    if reader.offset != len(buf):
        raise CheckpointError(f"Trailing bytes after last entry at offset {reader.offset}")
    return entries


def save_checkpoint(path: PathLike, store: ParameterStore, meta: Optional[Dict[str, np.ndarray]] = None) -> Path:
    """Write every parameter (plus optional metadata) to `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries = {name: param.data for name, param in store.items()}
    for key, value in (meta or {}).items():
        entries[key if key.startswith(META_PREFIX) else META_PREFIX + key] = np.asarray(value, dtype=np.float64)
    path.write_bytes(encode_checkpoint(entries))
    logger.info(f"Saved checkpoint with {len(store)} parameters to {path}")
    return path


def load_checkpoint(path: PathLike) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
    """Read a checkpoint into (parameters, metadata) dictionaries."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    entries = decode_checkpoint(path.read_bytes())
    params = {k: v for k, v in entries.items() if not k.startswith(META_PREFIX)}
    meta = {k: v for k, v in entries.items() if k.startswith(META_PREFIX)}
    return params, meta


def restore_checkpoint(path: PathLike, store: ParameterStore, expected_meta: Optional[Dict[str, np.ndarray]] = None) -> None:
    """Load `path` into `store`, validating metadata and every parameter shape."""
    params, meta = load_checkpoint(path)
    for key, value in (expected_meta or {}).items():
        key = key if key.startswith(META_PREFIX) else META_PREFIX + key
        found = meta.get(key)
        expected = np.asarray(value, dtype=np.float64)
        if found is None or found.shape != expected.shape or not np.array_equal(found, expected):
            raise CheckpointError(
                f"Checkpoint {key} = {None if found is None else found.tolist()} "
                f"does not match model {expected.tolist()}"
            )
    store.load_state_dict(params)
    logger.info(f"Restored {len(params)} parameters from {path}")
