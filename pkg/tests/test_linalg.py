import numpy as np
import pytest

from codedmrpt.errors import ConfigError, DataError, DimensionMismatchError, InconsistentDistanceError
from codedmrpt.linalg.kernels import (
    distances_via_dot,
    euclidean_dist_via_dot,
    row_subset_matvec,
    split_columns,
    top_k_arrays,
    top_k_by_distance,
)
from codedmrpt.linalg.types import ColumnSplit, Dataset


def test_distance_from_norms_and_dot() -> None:
    # u=(3,4), v=0
    assert euclidean_dist_via_dot(5.0, 0.0, 0.0) == 5.0
    # u=(1,0), v=(0,1)
    assert euclidean_dist_via_dot(1.0, 1.0, 0.0) == pytest.approx(np.sqrt(2.0))


def test_distance_clamps_rounding_noise_to_zero() -> None:
    assert euclidean_dist_via_dot(1.0, 1.0, 1.0 + 1e-13) == 0.0


def test_distance_rejects_inconsistent_inputs() -> None:
    with pytest.raises(InconsistentDistanceError):
        euclidean_dist_via_dot(1.0, 1.0, 2.0)
    with pytest.raises(InconsistentDistanceError):
        euclidean_dist_via_dot(-1.0, 1.0, 0.0)
    with pytest.raises(InconsistentDistanceError):
        distances_via_dot(np.array([1.0, 1.0]), 1.0, np.array([0.0, 5.0]))


def test_vectorised_distances_match_scalar(rng: np.random.Generator) -> None:
    pts = rng.standard_normal((30, 6))
    q = rng.standard_normal(6)
    norms = np.linalg.norm(pts, axis=1)
    got = distances_via_dot(norms, float(np.linalg.norm(q)), pts @ q)
    want = [euclidean_dist_via_dot(float(n), float(np.linalg.norm(q)), float(p @ q)) for n, p in zip(norms, pts)]
    np.testing.assert_allclose(got, want, rtol=0, atol=0)
    np.testing.assert_allclose(got, np.linalg.norm(pts - q, axis=1), atol=1e-9)


def test_distance_worked_example() -> None:
    u, v = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    got = euclidean_dist_via_dot(float(np.linalg.norm(u)), float(np.linalg.norm(v)), float(u @ v))
    assert got == pytest.approx(np.sqrt(8.0), rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 17, 1000, 10_000])
def test_distance_via_dot_matches_direct_norm(rng: np.random.Generator, d: int) -> None:
    for _ in range(20):
        u = rng.uniform(-10.0, 10.0, d)
        v = rng.uniform(-10.0, 10.0, d)
        got = euclidean_dist_via_dot(float(np.linalg.norm(u)), float(np.linalg.norm(v)), float(u @ v))
        assert got == pytest.approx(float(np.linalg.norm(u - v)), rel=1e-9)


def test_row_subset_matvec_keeps_requested_rows_in_order() -> None:
    m = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    np.testing.assert_array_equal(row_subset_matvec(m, [2, 0], np.array([1.0, 1.0])), [11.0, 3.0])
    assert row_subset_matvec(m, [], np.array([1.0, 1.0])).shape == (0,)


def test_row_subset_matvec_checks_shapes() -> None:
    m = np.ones((3, 2))
    with pytest.raises(DimensionMismatchError):
        row_subset_matvec(m, [0], np.ones(3))
    with pytest.raises(DimensionMismatchError):
        row_subset_matvec(m, [3], np.ones(2))


def test_split_columns_gives_earlier_parts_the_extra_column() -> None:
    m = np.arange(14.0).reshape(2, 7)
    widths = [b.shape[1] for b in split_columns(m, 3)]
    assert widths == [3, 2, 2]
    np.testing.assert_array_equal(np.hstack(split_columns(m, 3)), m)
    assert ColumnSplit.even(7, 3).max_width == 3
    with pytest.raises(ConfigError):
        ColumnSplit.even(2, 3)


@pytest.mark.parametrize("parts", [1, 2, 3, 5])
def test_block_products_sum_to_the_full_product(rng: np.random.Generator, parts: int) -> None:
    m = rng.standard_normal((40, 11))
    v = rng.standard_normal(11)
    rows = rng.choice(40, size=15, replace=False)
    split = ColumnSplit.even(11, parts)
    total = sum(
        row_subset_matvec(block, rows, v[start:stop])
        for block, (start, stop) in zip(split_columns(m, parts), split.ranges)
    )
    np.testing.assert_allclose(total, row_subset_matvec(m, rows, v), rtol=1e-10, atol=0)


def test_two_by_five_split_reassembles() -> None:
    m = np.arange(10.0).reshape(2, 5)
    blocks = split_columns(m, 2)
    assert [b.shape for b in blocks] == [(2, 3), (2, 2)]
    np.testing.assert_array_equal(np.hstack(blocks), m)


def test_top_k_is_a_full_sort_prefix_and_ignores_input_order(rng: np.random.Generator) -> None:
    for _ in range(100):
        n = int(rng.integers(0, 30))
        # Rounded distances force ties on the index tie-break.
        cands = [(int(i), float(dist)) for i, dist in zip(rng.permutation(100)[:n], rng.integers(0, 6, n) / 2)]
        k = int(rng.integers(1, 12))
        want = sorted(cands, key=lambda c: (c[1], c[0]))[:k]
        assert top_k_by_distance(cands, k) == want
        shuffled = [cands[j] for j in rng.permutation(n)]
        assert top_k_by_distance(shuffled, k) == want


def test_top_k_orders_by_distance_then_index() -> None:
    cands = [(5, 1.0), (2, 1.0), (7, 0.5), (1, 3.0)]
    assert top_k_by_distance(cands, 2) == [(7, 0.5), (2, 1.0)]
    assert top_k_by_distance(cands, 10) == [(7, 0.5), (2, 1.0), (5, 1.0), (1, 3.0)]
    assert top_k_by_distance([], 3) == []
    idx, dist = top_k_arrays(np.array([5, 2, 7, 1]), np.array([1.0, 1.0, 0.5, 3.0]), 3)
    assert idx.tolist() == [7, 2, 5]
    assert dist.tolist() == [0.5, 1.0, 1.0]
    with pytest.raises(ConfigError):
        top_k_by_distance(cands, 0)


def test_dataset_from_points_caches_norms() -> None:
    data = Dataset.from_points([[3.0, 4.0], [0.0, 1.0]])
    assert (data.d, data.n) == (2, 2)
    np.testing.assert_allclose(data.norms, [5.0, 1.0])
    np.testing.assert_array_equal(data.point(0), [3.0, 4.0])
    assert data.subset(1, 2).n == 1


def test_dataset_rejects_non_finite_values() -> None:
    with pytest.raises(DataError):
        Dataset.from_points([[1.0, np.nan]])
    with pytest.raises(DataError):
        Dataset.from_points(np.zeros((0, 3)))
