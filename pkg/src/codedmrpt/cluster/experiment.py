from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from codedmrpt.cluster.engine import ClusterState, run_query
from codedmrpt.cluster.model import QueryOutcome
from codedmrpt.errors import ConfigError
from codedmrpt.index.mrpt import Neighbors, recall

logger = logging.getLogger(__name__)

PER_QUERY_COLUMNS = ["run", "query_id", "latency", "recall", "candidate_size", "master_time", "decode_path"]


@dataclass(frozen=True)
class ExperimentSummary:
    strategy: str
    run_id: int
    n_queries: int
    mean_latency: float | None
    std_latency: float | None
    mean_recall: float | None
    mean_candidate_size: float | None
    per_query: pd.DataFrame = field(repr=False)
    outcomes: tuple[QueryOutcome, ...] = field(repr=False)


def _mean(s: pd.Series) -> float | None:
    return float(s.mean()) if len(s) else None


def run_experiment(
    cluster: ClusterState,
    queries: Sequence[np.ndarray] | np.ndarray,
    truth: Sequence[Neighbors],
    *,
    run_id: int = 0,
) -> ExperimentSummary:
    """Run queries sequentially; every (run, query, worker) gets a fresh straggler draw."""
    queries = np.asarray(queries, dtype=np.float64).reshape(len(queries), -1) if len(queries) else np.zeros((0, 0))
    if len(queries) != len(truth):
        raise ConfigError(f"{len(queries)} queries but {len(truth)} ground-truth lists")
    k = cluster.config.k

    rows_hint = cluster.data_parallel_rows(queries)
    if rows_hint is not None:
        logger.info("Data-parallel per-worker load l = %.2f (mean local |S|)", rows_hint)

    outcomes: list[QueryOutcome] = []
    rows: list[dict[str, object]] = []
    for qid, (q, t) in enumerate(zip(queries, truth)):
        outcome = run_query(cluster, q, query_id=qid, run_id=run_id, rows_hint=rows_hint)
        outcomes.append(outcome)
        rows.append(
            {
                "run": run_id,
                "query_id": qid,
                "latency": outcome.latency,
                "recall": recall(outcome.neighbors, t, k),
                "candidate_size": outcome.candidate_size,
                "master_time": outcome.master_time,
                "decode_path": outcome.decode_path,
            }
        )

    df = pd.DataFrame(rows, columns=PER_QUERY_COLUMNS)
    summary = ExperimentSummary(
        strategy=cluster.config.strategy,
        run_id=run_id,
        n_queries=int(len(df)),
        mean_latency=_mean(df["latency"]),
        # Population standard deviation over the query set.
        std_latency=float(df["latency"].std(ddof=0)) if len(df) else None,
        mean_recall=_mean(df["recall"]),
        mean_candidate_size=_mean(df["candidate_size"]),
        per_query=df,
        outcomes=tuple(outcomes),
    )
    if len(df):
        logger.info(
            "%s run %d: %d queries, latency %.4g ± %.4g, recall %.4f, |S| %.1f",
            summary.strategy,
            run_id,
            summary.n_queries,
            summary.mean_latency,
            summary.std_latency,
            summary.mean_recall,
            summary.mean_candidate_size,
        )
    return summary
