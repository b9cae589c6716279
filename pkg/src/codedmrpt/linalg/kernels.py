from __future__ import annotations

import heapq
import math
from typing import Iterable

import numpy as np

from codedmrpt.errors import ConfigError, DimensionMismatchError, InconsistentDistanceError
from codedmrpt.linalg.types import ColumnSplit, DenseMatrix, IndexSet, VectorR, as_index_set

# Radicands down to -EPS (relative to the squared norms) are floating cancellation, not corruption.
DISTANCE_EPS = 1e-9


def euclidean_dist_via_dot(norm_u: float, norm_v: float, dot_uv: float) -> float:
    """‖u−v‖ = sqrt(‖u‖² + ‖v‖² − 2u·v), clamping tiny negative radicands to 0."""
    if norm_u < 0 or norm_v < 0:
        raise InconsistentDistanceError(f"norms must be >= 0, got {norm_u}, {norm_v}")
    scale = norm_u * norm_u + norm_v * norm_v
    radicand = scale - 2.0 * dot_uv
    if radicand < -DISTANCE_EPS * max(1.0, scale):
        raise InconsistentDistanceError(
            f"negative radicand {radicand:.3e} (norms {norm_u}, {norm_v}, dot {dot_uv})"
        )
    return math.sqrt(max(0.0, radicand))


def distances_via_dot(norms: VectorR, q_norm: float, dots: VectorR) -> VectorR:
    """Vectorised `euclidean_dist_via_dot` for one query against many points."""
    norms = np.asarray(norms, dtype=np.float64)
    dots = np.asarray(dots, dtype=np.float64)
    if norms.shape != dots.shape:
        raise DimensionMismatchError(f"norms {norms.shape} and dots {dots.shape} differ")
    scale = norms * norms + q_norm * q_norm
    radicand = scale - 2.0 * dots
    bad = radicand < -DISTANCE_EPS * np.maximum(1.0, scale)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise InconsistentDistanceError(f"negative radicand {radicand[first]:.3e} at position {first}")
    return np.sqrt(np.maximum(radicand, 0.0))


def row_subset_matvec(m: DenseMatrix, rows: Iterable[int] | IndexSet, v: VectorR) -> VectorR:
    """M(S)·v keeping the rows of M indexed by S, in S's order."""
    idx = as_index_set(rows)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"vector length {v.shape} does not match {m.shape[1]} columns")
    if idx.size and (idx.min() < 0 or idx.max() >= m.shape[0]):
        raise DimensionMismatchError(f"row index out of range [0, {m.shape[0]})")
    if idx.size == 0:
        return np.zeros(0, dtype=np.float64)
    return m[idx] @ v


def split_columns(m: DenseMatrix, parts: int) -> list[DenseMatrix]:
    split = ColumnSplit.even(m.shape[1], parts)
    return [m[:, start:stop] for start, stop in split.ranges]


def top_k_by_distance(cands: Iterable[tuple[int, float]], k: int) -> list[tuple[int, float]]:
    """The k smallest (index, distance) pairs, ascending by distance then index."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return heapq.nsmallest(k, ((int(i), float(dist)) for i, dist in cands), key=lambda c: (c[1], c[0]))


def top_k_arrays(indices: IndexSet, distances: VectorR, k: int) -> tuple[IndexSet, VectorR]:
    """Array form of `top_k_by_distance`; same ordering and tie rule."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    indices = np.asarray(indices, dtype=np.int64)
    distances = np.asarray(distances, dtype=np.float64)
    # lexsort sorts by the last key first: distance, then index.
    order = np.lexsort((indices, distances))[:k]
    return indices[order], distances[order]
