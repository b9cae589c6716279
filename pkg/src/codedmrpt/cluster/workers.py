"""
In-process workers.

A worker owns one immutable payload (a local MRPT index over a slice of the
points, an uncoded column block X_iᵀ, or an encoded shard) and answers one
request type. Anything that satisfies the `Worker` protocol can stand in for a
networked backend later.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Protocol, Union

import numpy as np

from codedmrpt.coding.matdot import CodedResult, EncodedQueryShare, EncodedShard, coded_product
from codedmrpt.errors import ConfigError
from codedmrpt.index.mrpt import MRPTIndex, Neighbors, candidate_set, candidate_sizes, exact_knn
from codedmrpt.index.rng import RngSeed
from codedmrpt.linalg.kernels import row_subset_matvec
from codedmrpt.linalg.types import DenseMatrix, IndexSet, VectorR


@dataclass(frozen=True)
class SearchRequest:
    query_id: int
    q: VectorR
    k: int
    vote_threshold: int


@dataclass(frozen=True)
class ProductRequest:
    query_id: int
    rows: IndexSet
    vector: VectorR
    beta: float | None = None


Request = Union[SearchRequest, ProductRequest]


@dataclass(frozen=True)
class WorkerReply:
    worker_id: int
    query_id: int
    rows_loaded: int
    result: Neighbors | VectorR | CodedResult
    compute_s: float = 0.0


class Worker(Protocol):
    worker_id: int
    kind: str
    stream: RngSeed

    @property
    def payload_bytes(self) -> int: ...

    def handle(self, request: Request) -> WorkerReply: ...


def _index_bytes(index: MRPTIndex) -> int:
    total = index.data.values.nbytes + index.data.norms.nbytes
    for tree in index.trees:
        total += tree.medians.nbytes + sum(leaf.nbytes for leaf in tree.leaves)
        total += sum(p.indices.nbytes + p.values.nbytes for p in tree.projections)
    return int(total)


def _expect(request: Request, kind: type, worker: str) -> None:
    if not isinstance(request, kind):
        raise ConfigError(f"{worker} cannot handle {type(request).__name__}")


@dataclass(frozen=True)
class LocalIndexWorker:
    """Runs the whole MRPT query over its own slice; indices are reported in global numbering."""

    worker_id: int
    index: MRPTIndex = field(repr=False)
    offset: int
    stream: RngSeed
    kind: str = "local_index"

    @property
    def payload_bytes(self) -> int:
        return _index_bytes(self.index)

    @property
    def n_points(self) -> int:
        return self.index.data.n

    def candidate_sizes(self, queries: np.ndarray, vote_threshold: int) -> list[int]:
        return candidate_sizes(self.index, queries, vote_threshold)

    def handle(self, request: Request) -> WorkerReply:
        _expect(request, SearchRequest, "local-index worker")
        start = time.perf_counter()
        cands = candidate_set(self.index, request.q, request.vote_threshold)
        local = exact_knn(self.index.data, request.q, request.k, cands)
        found = Neighbors(
            indices=local.indices + self.offset,
            distances=local.distances,
            requested_k=local.requested_k,
        )
        return WorkerReply(
            worker_id=self.worker_id,
            query_id=request.query_id,
            rows_loaded=len(cands),
            result=found,
            compute_s=time.perf_counter() - start,
        )


@dataclass(frozen=True)
class UncodedBlockWorker:
    """Holds columns [start, stop) of Xᵀ and returns X_i(S)ᵀ q_i."""

    worker_id: int
    block: DenseMatrix = field(repr=False)
    stream: RngSeed
    kind: str = "uncoded_block"

    @property
    def payload_bytes(self) -> int:
        return int(self.block.nbytes)

    def handle(self, request: Request) -> WorkerReply:
        _expect(request, ProductRequest, "uncoded-block worker")
        start = time.perf_counter()
        values = row_subset_matvec(self.block, request.rows, request.vector)
        return WorkerReply(
            worker_id=self.worker_id,
            query_id=request.query_id,
            rows_loaded=int(request.rows.size),
            result=values,
            compute_s=time.perf_counter() - start,
        )


@dataclass(frozen=True)
class EncodedShardWorker:
    worker_id: int
    shard: EncodedShard = field(repr=False)
    stream: RngSeed
    kind: str = "encoded_shard"

    @property
    def payload_bytes(self) -> int:
        return int(self.shard.matrix.nbytes)

    def handle(self, request: Request) -> WorkerReply:
        _expect(request, ProductRequest, "encoded-shard worker")
        start = time.perf_counter()
        share = EncodedQueryShare(
            worker_id=self.worker_id,
            beta=self.shard.beta if request.beta is None else request.beta,
            vector=request.vector,
        )
        result = coded_product(self.shard, request.rows, share)
        return WorkerReply(
            worker_id=self.worker_id,
            query_id=request.query_id,
            rows_loaded=int(request.rows.size),
            result=result,
            compute_s=time.perf_counter() - start,
        )
