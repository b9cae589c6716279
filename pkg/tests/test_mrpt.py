import math

import numpy as np
import pytest

from codedmrpt.bench.datasets import split_held_out, synthetic_points
from codedmrpt.bench.ground_truth import ground_truth
from codedmrpt.errors import ConfigError, DimensionMismatchError
from codedmrpt.index.mrpt import (
    CandidateSet,
    MRPTIndex,
    Neighbors,
    build_index,
    candidate_set,
    candidate_sizes,
    exact_knn,
    recall,
)
from codedmrpt.linalg.types import Dataset


@pytest.fixture(scope="module")
def gaussian_2000() -> Dataset:
    return Dataset.from_points(np.random.default_rng(2024).standard_normal((2000, 50)))


@pytest.fixture(scope="module")
def index_2000(gaussian_2000: Dataset) -> MRPTIndex:
    return build_index(gaussian_2000, n_trees=50, depth=5, sparsity=1 / math.sqrt(50), seed=17)


def _recount_votes(index: MRPTIndex, q: np.ndarray) -> np.ndarray:
    votes = np.zeros(index.data.n, dtype=np.int64)
    for tree in index.trees:
        leaf_of_point = np.empty(index.data.n, dtype=np.int64)
        for t, members in enumerate(tree.leaves):
            leaf_of_point[members] = t
        votes += leaf_of_point == tree.leaf_of(q)
    return votes


def test_vote_counts_match_brute_force_recount(index_2000: MRPTIndex) -> None:
    queries = np.random.default_rng(5).standard_normal((50, 50))
    for q in queries:
        cands = candidate_set(index_2000, q, vote_threshold=3)
        votes = _recount_votes(index_2000, q)
        np.testing.assert_array_equal(cands.indices, np.flatnonzero(votes >= 3))
        np.testing.assert_array_equal(cands.votes, votes[cands.indices])


def test_exact_knn_over_everything_equals_ground_truth(gaussian_2000: Dataset) -> None:
    queries = np.random.default_rng(6).standard_normal((20, 50))
    truth = ground_truth(gaussian_2000, queries, k=10)
    all_rows = np.arange(gaussian_2000.n)
    for q, t in zip(queries, truth):
        found = exact_knn(gaussian_2000, q, 10, all_rows)
        np.testing.assert_array_equal(found.indices, t.indices)
        np.testing.assert_allclose(found.distances, t.distances, atol=1e-9)


def test_recall_does_not_increase_with_vote_threshold(gaussian_2000: Dataset, index_2000: MRPTIndex) -> None:
    queries = np.random.default_rng(8).standard_normal((50, 50))
    truth = ground_truth(gaussian_2000, queries, k=10)
    means = []
    for nu in (1, 2, 4, 8):
        r = [recall(exact_knn(gaussian_2000, q, 10, candidate_set(index_2000, q, nu)), t, 10) for q, t in zip(queries, truth)]
        means.append(np.mean(r))
    assert all(a >= b for a, b in zip(means, means[1:]))
    sizes = [np.mean(candidate_sizes(index_2000, queries, nu)) for nu in (1, 2, 4, 8)]
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_vote_threshold_out_of_range(index_2000: MRPTIndex) -> None:
    q = np.zeros(50)
    with pytest.raises(ConfigError):
        candidate_set(index_2000, q, 0)
    with pytest.raises(ConfigError):
        candidate_set(index_2000, q, index_2000.n_trees + 1)
    with pytest.raises(DimensionMismatchError):
        candidate_set(index_2000, np.zeros(49), 1)


def test_full_vote_threshold_keeps_only_unanimous_points(gaussian_2000: Dataset) -> None:
    index = build_index(gaussian_2000, n_trees=4, depth=3, sparsity=0.5, seed=1)
    q = gaussian_2000.point(0)
    cands = candidate_set(index, q, 4)
    # The query is a data point, so it is in every one of its own leaves.
    assert 0 in cands.indices
    assert np.all(cands.votes == 4)


def test_hash_map_votes_match_dense_votes(index_2000: MRPTIndex) -> None:
    q = np.random.default_rng(9).standard_normal(50)
    dense = candidate_set(index_2000, q, 2)
    sparse = candidate_set(index_2000, q, 2, dense_limit=0)
    np.testing.assert_array_equal(dense.indices, sparse.indices)
    np.testing.assert_array_equal(dense.votes, sparse.votes)


def test_parallel_build_is_identical_to_sequential(gaussian_2000: Dataset) -> None:
    seq = build_index(gaussian_2000, n_trees=8, depth=4, sparsity=0.2, seed=3)
    par = build_index(gaussian_2000, n_trees=8, depth=4, sparsity=0.2, seed=3, max_workers=4)
    for a, b in zip(seq.trees, par.trees):
        np.testing.assert_array_equal(a.medians, b.medians)
        for la, lb in zip(a.leaves, b.leaves):
            np.testing.assert_array_equal(la, lb)


def test_short_candidate_sets_are_flagged_not_raised() -> None:
    data = Dataset.from_points([[0.0], [1.0], [5.0]])
    found = exact_knn(data, np.array([0.9]), 5, CandidateSet(np.array([0, 1]), np.array([1, 1]), 1))
    assert found.indices.tolist() == [1, 0]
    assert found.short
    empty = exact_knn(data, np.array([0.0]), 2, np.array([], dtype=np.int64))
    assert len(empty) == 0


def test_recall_counts_overlap_over_k() -> None:
    truth = Neighbors(np.array([1, 2, 3, 4]), np.zeros(4), 4)
    found = Neighbors(np.array([4, 9, 1, 7]), np.zeros(4), 4)
    assert recall(found, truth, 4) == 0.5
    with pytest.raises(ConfigError):
        recall(found, Neighbors(np.array([1]), np.zeros(1), 1), 4)


def test_recall_on_clustered_data_meets_regression_bound() -> None:
    points = synthetic_points(5000 + 200, 64, "clustered", seed=0, clusters=50)
    data, queries = split_held_out(points, 200)
    index = build_index(data, n_trees=100, depth=6, sparsity=1 / math.sqrt(64), seed=0)
    truth = ground_truth(data, queries, k=10)
    recalls = [recall(exact_knn(data, q, 10, candidate_set(index, q, 2)), t, 10) for q, t in zip(queries, truth)]
    assert np.mean(recalls) >= 0.85
