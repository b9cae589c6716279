"""
Multiple random projection trees with voting.

Each tree votes for every point sharing the query's leaf; points with at least
ν votes form the candidate set S, over which exact distances are computed.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from codedmrpt.errors import ConfigError, DimensionMismatchError
from codedmrpt.index.rng import RngSeed, as_seed
from codedmrpt.index.rptree import RPTree, build_tree_from_projections, sample_projection, tree_query
from codedmrpt.linalg.kernels import distances_via_dot, top_k_arrays
from codedmrpt.linalg.types import Dataset, IndexSet, VectorR

logger = logging.getLogger(__name__)

# Above this many points votes are tallied in a hash map instead of a dense array.
DENSE_VOTE_LIMIT = 2_000_000


@dataclass(frozen=True)
class IndexParams:
    n_trees: int
    depth: int
    sparsity: float

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if not 0.0 < self.sparsity <= 1.0:
            raise ConfigError(f"sparsity must be in (0, 1], got {self.sparsity}")


@dataclass(frozen=True)
class MRPTIndex:
    trees: tuple[RPTree, ...]
    params: IndexParams
    seed: RngSeed
    data: Dataset = field(repr=False)

    @property
    def n_trees(self) -> int:
        return len(self.trees)


@dataclass(frozen=True)
class CandidateSet:
    indices: IndexSet
    votes: np.ndarray
    vote_threshold: int

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class Neighbors:
    indices: IndexSet
    distances: VectorR
    requested_k: int

    @property
    def short(self) -> bool:
        # Fewer candidates than k: a legitimate outcome, flagged rather than raised.
        return int(self.indices.size) < self.requested_k

    def __len__(self) -> int:
        return int(self.indices.size)

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.indices, self.distances)]


def _build_one(data: Dataset, params: IndexParams, seed: RngSeed, tree_id: int) -> RPTree:
    rng = seed.tree_rng(tree_id)
    projections = [sample_projection(data.d, params.sparsity, rng) for _ in range(params.depth)]
    return build_tree_from_projections(data, projections)


def build_index(
    data: Dataset,
    n_trees: int,
    depth: int,
    sparsity: float,
    seed: RngSeed | int,
    *,
    max_workers: int | None = None,
) -> MRPTIndex:
    params = IndexParams(n_trees=n_trees, depth=depth, sparsity=sparsity)
    if (1 << depth) > data.n:
        raise ConfigError(f"2^depth = {1 << depth} exceeds N = {data.n}")
    seed = as_seed(seed)
    # Tree t always draws from substream (seed, t), so the thread count never changes the forest.
    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            trees = tuple(pool.map(lambda t: _build_one(data, params, seed, t), range(n_trees)))
    else:
        trees = tuple(_build_one(data, params, seed, t) for t in range(n_trees))
    logger.debug("Built MRPT index: N=%d d=%d T=%d depth=%d a=%.4g", data.n, data.d, n_trees, depth, sparsity)
    return MRPTIndex(trees=trees, params=params, seed=seed, data=data)


def candidate_set(
    index: MRPTIndex,
    q: VectorR,
    vote_threshold: int,
    *,
    dense_limit: int = DENSE_VOTE_LIMIT,
) -> CandidateSet:
    if not 1 <= vote_threshold <= index.n_trees:
        raise ConfigError(f"vote threshold must be in [1, {index.n_trees}], got {vote_threshold}")
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != index.data.d:
        raise DimensionMismatchError(f"query length {q.shape} does not match dimension {index.data.d}")

    n = index.data.n
    if n <= dense_limit:
        votes = np.zeros(n, dtype=np.int32)
        for tree in index.trees:
            # Leaf members are unique, so plain fancy-index increment is exact.
            votes[tree_query(tree, q)] += 1
        selected = np.flatnonzero(votes >= vote_threshold).astype(np.int64)
        return CandidateSet(indices=selected, votes=votes[selected].astype(np.int64), vote_threshold=vote_threshold)

    counter: Counter[int] = Counter()
    for tree in index.trees:
        counter.update(tree_query(tree, q).tolist())
    selected = np.array(sorted(j for j, c in counter.items() if c >= vote_threshold), dtype=np.int64)
    return CandidateSet(
        indices=selected,
        votes=np.array([counter[int(j)] for j in selected], dtype=np.int64),
        vote_threshold=vote_threshold,
    )


def candidate_sizes(index: MRPTIndex, queries: np.ndarray, vote_threshold: int) -> list[int]:
    return [len(candidate_set(index, q, vote_threshold)) for q in np.asarray(queries, dtype=np.float64)]


def neighbors_from_dots(
    data: Dataset,
    q_norm: float,
    rows: IndexSet,
    dots: VectorR,
    k: int,
) -> Neighbors:
    """Exact distances from precomputed norms and the dot products w = X(S)ᵀq, then top-k."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        return Neighbors(indices=rows, distances=np.zeros(0), requested_k=k)
    dists = distances_via_dot(data.norms[rows], q_norm, dots)
    idx, dist = top_k_arrays(rows, dists, k)
    return Neighbors(indices=idx, distances=dist, requested_k=k)


def exact_knn(data: Dataset, q: VectorR, k: int, candidates: CandidateSet | IndexSet) -> Neighbors:
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != data.d:
        raise DimensionMismatchError(f"query length {q.shape} does not match dimension {data.d}")
    rows = candidates.indices if isinstance(candidates, CandidateSet) else np.asarray(candidates, dtype=np.int64)
    dots = data.points[rows] @ q if rows.size else np.zeros(0)
    return neighbors_from_dots(data, float(np.linalg.norm(q)), rows, dots, k)


def recall(found: Neighbors, truth: Neighbors, k: int) -> float:
    if len(truth) < k:
        raise ConfigError(f"truth has {len(truth)} entries, fewer than k={k}")
    hits = np.intersect1d(found.indices[:k], truth.indices[:k]).size
    return float(hits) / float(k)
