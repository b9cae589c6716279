"""
Dataset ingestion for experiments.

- fvecs: records of (int32 d, d float32), little-endian; values widened to float64.
- CSV fixtures: first line "d=<int>", then one point per line.
- Synthetic: i.i.d. Gaussian or Gaussian blobs around uniform centers.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from codedmrpt.errors import ConfigError, DataError
from codedmrpt.linalg.types import Dataset

logger = logging.getLogger(__name__)

SyntheticKind = Literal["gaussian", "clustered"]


def load_fvecs(path: Path) -> Dataset:
    return Dataset.from_points(read_fvecs(path))


def read_fvecs(path: Path) -> np.ndarray:
    """N×d float64 array from an fvecs file."""
    path = Path(path)
    try:
        raw = np.fromfile(path, dtype=np.uint8)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if raw.size == 0:
        raise DataError(f"{path}: empty fvecs file")
    if raw.size < 4:
        raise DataError(f"{path}: truncated record header")
    d = int(raw[:4].view("<i4")[0])
    if d < 1:
        raise DataError(f"{path}: invalid dimension {d} in first record")
    record = 4 * (d + 1)
    if raw.size % record != 0:
        raise DataError(f"{path}: {raw.size} bytes is not a whole number of {record}-byte records")
    words = raw.view("<i4").reshape(-1, d + 1)
    dims = words[:, 0]
    if np.any(dims != d):
        bad = int(np.flatnonzero(dims != d)[0])
        raise DataError(f"{path}: record {bad} has d={int(dims[bad])}, expected {d}")
    values = words[:, 1:].view("<f4").astype(np.float64)
    logger.debug("Loaded %s: N=%d d=%d", path, values.shape[0], d)
    return values


def write_fvecs(path: Path, points: np.ndarray) -> Path:
    pts = np.asarray(points, dtype="<f4")
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
        raise DataError(f"points must be a non-empty N×d array, got shape {pts.shape}")
    n, d = pts.shape
    words = np.empty((n, d + 1), dtype="<i4")
    words[:, 0] = d
    words[:, 1:] = pts.view("<i4")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    words.tofile(path)
    return path


def load_csv_fixture(path: Path) -> Dataset:
    return Dataset.from_points(read_csv_points(path))


def read_csv_points(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"CSV fixture not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        header = f.readline().strip()
    if not header.startswith("d="):
        raise DataError(f"{path}: first line must be 'd=<int>', got {header!r}")
    try:
        d = int(header[2:])
    except ValueError as e:
        raise DataError(f"{path}: bad dimension header {header!r}") from e
    try:
        df = pd.read_csv(path, skiprows=1, header=None, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise DataError(f"{path}: no points after the header") from e
    if df.shape[1] != d:
        raise DataError(f"{path}: rows have {df.shape[1]} values, header says d={d}")
    values = df.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=np.float64)
    if np.isnan(values).any():
        raise DataError(f"{path}: non-numeric or missing values")
    return values


def write_csv_fixture(path: Path, points: np.ndarray) -> Path:
    pts = np.asarray(points, dtype=np.float64)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(f"d={pts.shape[1]}\n")
        pd.DataFrame(pts).to_csv(f, header=False, index=False, float_format="%.17g")
    return path


def synthetic_points(n: int, d: int, kind: SyntheticKind, seed: int, *, clusters: int = 10) -> np.ndarray:
    """
    N×d points. Clustered points are assigned round-robin: point j belongs to
    blob j mod c.
    """
    if n < 1 or d < 1:
        raise ConfigError(f"synthetic data needs N >= 1 and d >= 1, got N={n} d={d}")
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        return rng.standard_normal((n, d))
    if kind == "clustered":
        if not 1 <= clusters <= n:
            raise ConfigError(f"cluster count must be in [1, N={n}], got {clusters}")
        centers = rng.uniform(-10.0, 10.0, size=(clusters, d))
        labels = np.arange(n) % clusters
        return centers[labels] + rng.standard_normal((n, d))
    raise ConfigError(f"unknown synthetic kind: {kind}")


def gen_synthetic(n: int, d: int, kind: SyntheticKind, seed: int, *, clusters: int = 10) -> Dataset:
    return Dataset.from_points(synthetic_points(n, d, kind, seed, clusters=clusters))


def split_held_out(points: np.ndarray, n_queries: int) -> tuple[Dataset, np.ndarray]:
    """First N rows become the dataset, the trailing `n_queries` rows held-out queries."""
    if n_queries < 0 or n_queries >= len(points):
        raise ConfigError(f"cannot hold out {n_queries} of {len(points)} points")
    n = len(points) - n_queries
    return Dataset.from_points(points[:n]), np.array(points[n:], dtype=np.float64)


def sample_in_dataset(data: Dataset, n_queries: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= n_queries <= data.n:
        raise ConfigError(f"cannot draw {n_queries} in-dataset queries from N={data.n}")
    picks = np.sort(rng.choice(data.n, size=n_queries, replace=False))
    return np.array(data.points[picks], dtype=np.float64)


def load_points(path: Path) -> np.ndarray:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".fvecs":
        return read_fvecs(path)
    if suffix == ".csv":
        return read_csv_points(path)
    raise DataError(f"unsupported data file format: {path}")
