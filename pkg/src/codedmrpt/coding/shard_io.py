"""
Binary container for off-line encoded shards.

Layout (little-endian): magic b"MDSH", u16 version, u32 m, u32 P, u32 worker_id,
f64 beta, u64 N, u64 width, then N×width float64 values in row-major order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from codedmrpt.coding.matdot import EncodedShard
from codedmrpt.errors import DataError

MAGIC = b"MDSH"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIdQQ")


@dataclass(frozen=True)
class ShardHeader:
    m: int
    n_workers: int
    worker_id: int
    beta: float
    n_rows: int
    width: int


def write_shard(path: Path, shard: EncodedShard, *, m: int, n_workers: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_rows, width = shard.matrix.shape
    header = _HEADER.pack(MAGIC, VERSION, m, n_workers, shard.worker_id, shard.beta, n_rows, width)
    payload = np.ascontiguousarray(shard.matrix, dtype="<f8").tobytes()
    path.write_bytes(header + payload)
    return path


def read_shard(path: Path) -> tuple[ShardHeader, EncodedShard]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read shard file {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated shard header ({len(raw)} bytes)")
    magic, version, m, n_workers, worker_id, beta, n_rows, width = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: not a shard file (magic {magic!r})")
    if version != VERSION:
        raise DataError(f"{path}: unsupported shard version {version}")
    expected = _HEADER.size + 8 * n_rows * width
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(raw)}")
    matrix = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n_rows, width).astype(np.float64)
    header = ShardHeader(m=m, n_workers=n_workers, worker_id=worker_id, beta=beta, n_rows=n_rows, width=width)
    return header, EncodedShard(worker_id=worker_id, beta=beta, matrix=matrix)
