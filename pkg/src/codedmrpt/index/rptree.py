"""
Sparse random projection trees.

A tree of depth ℓ draws one sparse Gaussian direction per level (shared by all
nodes of that level) and splits every node at the midpoint of its two central
projected values, so each of the 2^ℓ leaves ends up with ⌈N/2^ℓ⌉ or ⌊N/2^ℓ⌋
points. Internal nodes are stored in heap order: node 0 is the root and node
i has children 2i+1 (left) and 2i+2 (right); leaf t is heap node 2^ℓ−1+t.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from codedmrpt.errors import ConfigError, DimensionMismatchError
from codedmrpt.index.rng import RngSeed, as_seed
from codedmrpt.linalg.types import Dataset, DenseMatrix, IndexSet, VectorR


@dataclass(frozen=True)
class SparseProjection:
    dim: int
    indices: IndexSet
    values: VectorR

    def project_points(self, data: DenseMatrix) -> VectorR:
        # Touch only the nonzero coordinates: rows `indices` of the d×N matrix.
        if self.indices.size == 0:
            return np.zeros(data.shape[1], dtype=np.float64)
        return self.values @ data[self.indices, :]

    def project(self, q: VectorR) -> float:
        # Same kernel as `project_points`, applied to a single column.
        return float(self.project_points(np.asarray(q, dtype=np.float64).reshape(-1, 1))[0])


def sample_projection(d: int, a: float, rng: np.random.Generator) -> SparseProjection:
    if not 0.0 < a <= 1.0:
        raise ConfigError(f"sparsity a must be in (0, 1], got {a}")
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    # Each coordinate is independently nonzero with probability a.
    mask = rng.random(d) < a
    indices = np.flatnonzero(mask).astype(np.int64)
    values = rng.standard_normal(indices.size)
    return SparseProjection(dim=d, indices=indices, values=values)


@dataclass(frozen=True)
class RPTree:
    depth: int
    projections: tuple[SparseProjection, ...]
    medians: VectorR
    leaves: tuple[IndexSet, ...] = field(repr=False)

    @property
    def n_leaves(self) -> int:
        return 1 << self.depth

    def leaf_of(self, q: VectorR) -> int:
        node = 0
        for level in range(self.depth):
            p = self.projections[level].project(q)
            # Ties go left. The build puts equal projections past the median
            # position on the right, so such a point routes to the left
            # sibling and misses its own leaf (integer-valued data hits this).
            node = 2 * node + 1 if p <= self.medians[node] else 2 * node + 2
        return node - (self.n_leaves - 1)


def _split_node(members: IndexSet, projected: VectorR) -> tuple[IndexSet, IndexSet, float]:
    vals = projected[members]
    # Stable sort keeps equal projections in ascending index order (left-first tie rule).
    order = np.argsort(vals, kind="stable")
    n = members.size
    left_size = (n + 1) // 2
    split = 0.5 * (vals[order[left_size - 1]] + vals[order[left_size]])
    left = np.sort(members[order[:left_size]])
    right = np.sort(members[order[left_size:]])
    return left, right, float(split)


def build_tree_from_projections(data: Dataset, projections: Sequence[SparseProjection]) -> RPTree:
    depth = len(projections)
    if depth < 1:
        raise ConfigError("tree depth must be >= 1")
    if (1 << depth) > data.n:
        raise ConfigError(f"2^depth = {1 << depth} exceeds N = {data.n}; leaves would be empty")
    for proj in projections:
        if proj.dim != data.d:
            raise DimensionMismatchError(f"projection dim {proj.dim} != data dim {data.d}")

    medians = np.zeros((1 << depth) - 1, dtype=np.float64)
    level_nodes: list[IndexSet] = [np.arange(data.n, dtype=np.int64)]
    for level, proj in enumerate(projections):
        projected = proj.project_points(data.values)
        first_node = (1 << level) - 1
        next_nodes: list[IndexSet] = []
        for offset, members in enumerate(level_nodes):
            left, right, split = _split_node(members, projected)
            medians[first_node + offset] = split
            next_nodes.extend((left, right))
        level_nodes = next_nodes

    for leaf in level_nodes:
        leaf.setflags(write=False)
    medians.setflags(write=False)
    return RPTree(depth=depth, projections=tuple(projections), medians=medians, leaves=tuple(level_nodes))


def build_tree(data: Dataset, depth: int, a: float, rng: RngSeed | int | np.random.Generator) -> RPTree:
    if depth < 1:
        raise ConfigError(f"tree depth must be >= 1, got {depth}")
    if (1 << depth) > data.n:
        raise ConfigError(f"2^depth = {1 << depth} exceeds N = {data.n}; leaves would be empty")
    gen = rng if isinstance(rng, np.random.Generator) else as_seed(rng).tree_rng(0)
    projections = [sample_projection(data.d, a, gen) for _ in range(depth)]
    return build_tree_from_projections(data, projections)


def tree_query(tree: RPTree, q: VectorR) -> IndexSet:
    q = np.asarray(q, dtype=np.float64)
    dim = tree.projections[0].dim
    if q.ndim != 1 or q.shape[0] != dim:
        raise DimensionMismatchError(f"query length {q.shape} does not match dimension {dim}")
    return tree.leaves[tree.leaf_of(q)]
