from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from codedmrpt.errors import ConfigError, DimensionMismatchError
from codedmrpt.index.mrpt import Neighbors
from codedmrpt.linalg.types import Dataset


def ground_truth(data: Dataset, queries: np.ndarray, k: int) -> list[Neighbors]:
    """Exact k-NN by full scan; equal distances are ordered by index."""
    if not 1 <= k <= data.n:
        raise ConfigError(f"k must be in [1, N={data.n}], got {k}")
    queries = np.asarray(queries, dtype=np.float64)
    if queries.size == 0:
        return []
    queries = queries.reshape(-1, data.d) if queries.ndim == 1 else queries
    if queries.shape[1] != data.d:
        raise DimensionMismatchError(f"queries have d={queries.shape[1]}, dataset has d={data.d}")

    sq = cdist(queries, data.points, "sqeuclidean")
    ids = np.arange(data.n, dtype=np.int64)
    out: list[Neighbors] = []
    for row in sq:
        order = np.lexsort((ids, row))[:k]
        out.append(Neighbors(indices=ids[order], distances=np.sqrt(row[order]), requested_k=k))
    return out
