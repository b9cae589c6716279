"""
Master side of the simulated cluster.

`build_cluster()` lays out the per-strategy worker payloads once; `run_query()`
broadcasts one query, gathers replies, assigns each worker a virtual completion
time from the straggler model and lets the master finish at the point the
strategy allows: all P replies (data-parallel, uncoded), the (2m−1)-th arrival
(MatDot) or the earlier of that and "all m systematic workers in"
(systematic MatDot).
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from codedmrpt.cluster.clock import VirtualClock
from codedmrpt.cluster.model import CODED_STRATEGIES, ClusterConfig, QueryOutcome, WorkerTrace
from codedmrpt.cluster.straggler import draw_uniform, sample_min_time, worker_stream
from codedmrpt.cluster.workers import (
    EncodedShardWorker,
    LocalIndexWorker,
    ProductRequest,
    Request,
    SearchRequest,
    UncodedBlockWorker,
    Worker,
    WorkerReply,
)
from codedmrpt.coding.matdot import EncodedShard, decode, encode_data, encode_query, uses_systematic_fast_path
from codedmrpt.errors import ConfigError, DimensionMismatchError, QueryTimeoutError
from codedmrpt.index.mrpt import MRPTIndex, Neighbors, build_index, candidate_set, neighbors_from_dots
from codedmrpt.index.rng import WORKER_INDEX_STREAM, RngSeed
from codedmrpt.linalg.kernels import split_columns, top_k_by_distance
from codedmrpt.linalg.types import ColumnSplit, Dataset, VectorR

logger = logging.getLogger(__name__)


@dataclass
class ClusterState:
    config: ClusterConfig
    data: Dataset = field(repr=False)
    index: MRPTIndex | None = field(repr=False)
    workers: tuple[Worker, ...] = field(repr=False)
    _executor: ThreadPoolExecutor | None = field(default=None, repr=False)

    def __enter__(self) -> "ClusterState":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    @property
    def max_worker_payload_bytes(self) -> int:
        return max(w.payload_bytes for w in self.workers)

    def dispatch(self, requests: dict[int, Request]) -> dict[int, WorkerReply]:
        if self.config.deterministic:
            return {w.worker_id: w.handle(requests[w.worker_id]) for w in self.workers}
        if self._executor is None:
            self._executor = ThreadPoolExecutor(max_workers=len(self.workers), thread_name_prefix="worker")
        futures = {w.worker_id: self._executor.submit(w.handle, requests[w.worker_id]) for w in self.workers}
        return {wid: fut.result() for wid, fut in futures.items()}

    def data_parallel_rows(self, queries: np.ndarray) -> float | None:
        """Mean local |S| over all workers and queries (the l used for every data-parallel worker)."""
        if self.config.strategy != "data_parallel" or len(queries) == 0:
            return None
        sizes: list[int] = []
        for w in self.workers:
            assert isinstance(w, LocalIndexWorker)
            sizes.extend(w.candidate_sizes(queries, self.config.vote_threshold))
        return float(np.mean(sizes))


def data_parallel_depth(depth: int, n_workers: int, n_local: int) -> int:
    return max(1, min(depth - (n_workers.bit_length() - 1), n_local.bit_length() - 1))


def _global_index(data: Dataset, config: ClusterConfig, index: MRPTIndex | None) -> MRPTIndex:
    if index is not None:
        if index.data.n != data.n or index.data.d != data.d:
            raise ConfigError("supplied index was built over a different dataset")
        return index
    p = config.index
    return build_index(data, p.n_trees, p.depth, p.sparsity, config.seed)


def _data_parallel_workers(data: Dataset, config: ClusterConfig) -> list[Worker]:
    if config.n_workers > data.n:
        raise ConfigError(f"{config.n_workers} workers exceed N = {data.n} points")
    base = RngSeed(config.seed)
    workers: list[Worker] = []
    for i, (start, stop) in enumerate(ColumnSplit.even(data.n, config.n_workers).ranges):
        local = data.subset(start, stop)
        depth = config.data_parallel_depth or data_parallel_depth(config.index.depth, config.n_workers, local.n)
        if (1 << depth) > local.n:
            raise ConfigError(f"worker {i}: 2^{depth} leaves exceed its {local.n} points")
        idx = build_index(local, config.index.n_trees, depth, config.index.sparsity, base.derive(WORKER_INDEX_STREAM, i))
        workers.append(LocalIndexWorker(worker_id=i, index=idx, offset=start, stream=worker_stream(config.seed, i)))
    return workers


def build_cluster(
    data: Dataset,
    config: ClusterConfig,
    *,
    index: MRPTIndex | None = None,
    shards: Sequence[EncodedShard] | None = None,
) -> ClusterState:
    strategy = config.strategy
    global_index: MRPTIndex | None = None
    workers: list[Worker]

    if strategy == "single":
        global_index = _global_index(data, config, index)
        workers = [LocalIndexWorker(worker_id=0, index=global_index, offset=0, stream=worker_stream(config.seed, 0))]
    elif strategy == "data_parallel":
        workers = _data_parallel_workers(data, config)
    elif strategy == "mp_uncoded":
        global_index = _global_index(data, config, index)
        if config.n_workers > data.d:
            raise ConfigError(f"{config.n_workers} workers exceed the dimension d = {data.d}")
        workers = [
            UncodedBlockWorker(worker_id=i, block=np.ascontiguousarray(block), stream=worker_stream(config.seed, i))
            for i, block in enumerate(split_columns(data.points, config.n_workers))
        ]
    else:
        global_index = _global_index(data, config, index)
        assert config.code is not None
        if shards is None:
            shards = encode_data(data.points, config.code)
        if len(shards) != config.n_workers:
            raise ConfigError(f"expected {config.n_workers} shards, got {len(shards)}")
        workers = [
            EncodedShardWorker(worker_id=s.worker_id, shard=s, stream=worker_stream(config.seed, s.worker_id))
            for s in sorted(shards, key=lambda s: s.worker_id)
        ]

    logger.info(
        "Built %s cluster: %d worker(s), N=%d d=%d", strategy, len(workers), data.n, data.d
    )
    return ClusterState(config=config, data=data, index=global_index, workers=tuple(workers))


def _requests(cluster: ClusterState, q: VectorR, query_id: int) -> tuple[dict[int, Request], np.ndarray | None]:
    cfg = cluster.config
    if cfg.strategy in ("single", "data_parallel"):
        k = cfg.k if cfg.strategy == "single" else cfg.effective_tau
        req = SearchRequest(query_id=query_id, q=q, k=k, vote_threshold=cfg.vote_threshold)
        return {w.worker_id: req for w in cluster.workers}, None

    assert cluster.index is not None
    rows = candidate_set(cluster.index, q, cfg.vote_threshold).indices
    if cfg.strategy == "mp_uncoded":
        parts = ColumnSplit.even(cluster.data.d, cfg.n_workers).ranges
        return {
            i: ProductRequest(query_id=query_id, rows=rows, vector=q[start:stop]) for i, (start, stop) in enumerate(parts)
        }, rows
    assert cfg.code is not None
    shares = encode_query(q, cfg.code, dim=cluster.data.d)
    return {
        s.worker_id: ProductRequest(query_id=query_id, rows=rows, vector=s.vector, beta=s.beta) for s in shares
    }, rows


def _completion_times(
    cluster: ClusterState,
    replies: dict[int, WorkerReply],
    run_id: int,
    query_id: int,
    rows_hint: float | None,
) -> dict[int, tuple[float, float, float]]:
    """worker id -> (l, sampled T_i, completion time)."""
    cfg = cluster.config
    out: dict[int, tuple[float, float, float]] = {}
    for w in cluster.workers:
        reply = replies[w.worker_id]
        rows = rows_hint if rows_hint is not None else float(reply.rows_loaded)
        rows = max(1.0, rows)
        if w.worker_id in cfg.unresponsive_workers:
            sampled = math.inf
        else:
            sampled = sample_min_time(cfg.straggler, rows, draw_uniform(w.stream, run_id, query_id))
        compute = reply.compute_s * cfg.compute_time_scale if cfg.include_compute_time else 0.0
        out[w.worker_id] = (rows, sampled, max(sampled, compute))
    return out


def _select(cluster: ClusterState, arrival: list[int], completion: dict[int, float]) -> tuple[list[int], float]:
    """Workers whose replies the master consumes, in arrival order, and the time the last one lands."""
    cfg = cluster.config
    if cfg.strategy not in CODED_STRATEGIES:
        return arrival, max(completion.values())
    assert cfg.code is not None
    k = cfg.code.recovery_threshold
    first_k = arrival[:k]
    t_k = completion[first_k[-1]]
    if cfg.strategy == "mp_systematic":
        systematic = list(range(cfg.code.m))
        t_sys = max(completion[i] for i in systematic)
        if t_sys <= t_k:
            return [i for i in arrival if i < cfg.code.m], t_sys
    return first_k, t_k


def _finish(
    cluster: ClusterState,
    q: VectorR,
    rows: np.ndarray | None,
    used: list[int],
    replies: dict[int, WorkerReply],
) -> tuple[Neighbors, str]:
    cfg = cluster.config
    if cfg.strategy == "single":
        result = replies[0].result
        assert isinstance(result, Neighbors)
        return result, "local"
    if cfg.strategy == "data_parallel":
        pooled = [pair for wid in used for pair in replies[wid].result.pairs()]  # type: ignore[union-attr]
        merged = top_k_by_distance(pooled, cfg.k)
        return (
            Neighbors(
                indices=np.array([i for i, _ in merged], dtype=np.int64),
                distances=np.array([d for _, d in merged], dtype=np.float64),
                requested_k=cfg.k,
            ),
            "merge",
        )

    assert rows is not None
    if cfg.strategy == "mp_uncoded":
        w = np.zeros(rows.size, dtype=np.float64)
        for wid in sorted(used):
            w += replies[wid].result  # type: ignore[operator]
        path = "sum"
    else:
        assert cfg.code is not None
        results = [replies[wid].result for wid in used]
        path = "systematic" if uses_systematic_fast_path(results, cfg.code) else "interpolation"  # type: ignore[arg-type]
        w = decode(results, cfg.code, int(rows.size))  # type: ignore[arg-type]
    return neighbors_from_dots(cluster.data, float(np.linalg.norm(q)), rows, w, cfg.k), path


def run_query(
    cluster: ClusterState,
    q: VectorR,
    *,
    query_id: int = 0,
    run_id: int = 0,
    rows_hint: float | None = None,
) -> QueryOutcome:
    cfg = cluster.config
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != cluster.data.d:
        raise DimensionMismatchError(f"query length {q.shape} does not match dimension {cluster.data.d}")

    requests, rows = _requests(cluster, q, query_id)
    replies = cluster.dispatch(requests)
    timing = _completion_times(
        cluster, replies, run_id, query_id, rows_hint if cfg.strategy == "data_parallel" else None
    )
    completion = {wid: t[2] for wid, t in timing.items()}
    # Ties in virtual time resolve by worker id.
    arrival = sorted(completion, key=lambda wid: (completion[wid], wid))
    used, ready_at = _select(cluster, arrival, completion)

    if not math.isfinite(ready_at) or (cfg.timeout_s is not None and ready_at > cfg.timeout_s):
        logger.warning("Query %d timed out under %s (ready at %s)", query_id, cfg.strategy, ready_at)
        raise QueryTimeoutError(
            f"query {query_id}: required worker results not available within "
            f"{'unbounded wait' if cfg.timeout_s is None else f'{cfg.timeout_s} s'} ({cfg.strategy})"
        )

    clock = VirtualClock()
    clock.advance_to(ready_at)
    start = time.perf_counter()
    neighbors, path = _finish(cluster, q, rows, used, replies)
    master_time = (time.perf_counter() - start) * cfg.master_time_scale if cfg.include_master_time else 0.0
    clock.advance_by(master_time)

    used_set = set(used)
    trace = tuple(
        WorkerTrace(
            query_id=query_id,
            worker_id=wid,
            strategy=cfg.strategy,
            rows=timing[wid][0],
            dispatch_t=0.0,
            sampled_t=timing[wid][1],
            completion_t=timing[wid][2],
            used=wid in used_set,
            compute_s=replies[wid].compute_s,
        )
        for wid in sorted(timing)
    )
    if cfg.strategy == "single":
        candidate_size = float(replies[0].rows_loaded)
    elif cfg.strategy == "data_parallel":
        candidate_size = float(sum(r.rows_loaded for r in replies.values()))
    else:
        assert rows is not None
        candidate_size = float(rows.size)

    return QueryOutcome(
        query_id=query_id,
        strategy=cfg.strategy,
        neighbors=neighbors,
        latency=clock.now,
        candidate_size=candidate_size,
        master_time=master_time,
        decode_path=path,
        trace=trace,
    )
