"""
Experiment runner.

Stages run in order (validate, load-data, ground-truth, build-index, then per
strategy build-cluster and run-experiment, finally write-outputs); any failure
is re-raised as `StageError` naming the stage so the CLI can report it and
pick the exit code from the wrapped cause.

Outputs written to `spec.out_dir`:
- summary.json / summary.csv: per-strategy statistics (byte-stable for a fixed spec)
- latency_table.csv: one row per (run, query), one latency column per strategy
- traces.jsonl: one record per (strategy, run, query, worker)
- queries.jsonl: per-query neighbors, ground truth, recall and latency
- summary.schema.json, schema_report.json, run_meta.json
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import pandas as pd

from codedmrpt.bench.datasets import gen_synthetic, load_points, sample_in_dataset, split_held_out, synthetic_points
from codedmrpt.bench.ground_truth import ground_truth
from codedmrpt.bench.outputs_schema import (
    SCHEMA_VERSION,
    RunRowModel,
    RunSummaryModel,
    SchemaReport,
    StrategySummaryModel,
    validate_outputs,
)
from codedmrpt.bench.spec import ExperimentSpec, cluster_config, code_config, validate_spec
from codedmrpt.cluster.engine import build_cluster, run_query
from codedmrpt.cluster.experiment import ExperimentSummary, run_experiment
from codedmrpt.cluster.model import CODED_STRATEGIES, StragglerModel
from codedmrpt.cluster.trace import trace_records, write_jsonl
from codedmrpt.coding.matdot import encode_data
from codedmrpt.coding.shard_io import write_shard
from codedmrpt.errors import DataError, StageError
from codedmrpt.index.mrpt import MRPTIndex, Neighbors, build_index, recall
from codedmrpt.index.rng import QUERY_STREAM, RngSeed
from codedmrpt.linalg.types import Dataset
from codedmrpt.run_meta import build_run_meta, file_meta, new_run_id, utc_now_iso, write_json

logger = logging.getLogger(__name__)

SUMMARY_CSV_COLUMNS = [
    "name",
    "mean_latency",
    "std_latency",
    "mean_recall",
    "mean_candidate_size",
    "max_worker_payload_bytes",
    "runs",
]


@dataclass(frozen=True)
class RunResult:
    summary: RunSummaryModel
    out_dir: Path
    artifacts: dict[str, Path] = field(default_factory=dict)
    schema_report: SchemaReport | None = None


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        logger.error("Stage '%s' failed: %s", name, e)
        raise StageError(name, e) from e


def prepare_data(spec: ExperimentSpec) -> tuple[Dataset, np.ndarray]:
    ds = spec.dataset
    query_rng = RngSeed(spec.seed).substream(QUERY_STREAM)
    if ds.source == "synthetic":
        if spec.in_dataset:
            data = gen_synthetic(ds.n, ds.d, ds.kind, ds.seed, clusters=ds.clusters)
            return data, sample_in_dataset(data, spec.queries, query_rng)
        # Held-out queries come from the same generator as the data.
        pts = synthetic_points(ds.n + spec.queries, ds.d, ds.kind, ds.seed, clusters=ds.clusters)
        return split_held_out(pts, spec.queries)

    assert ds.path is not None
    data = Dataset.from_points(load_points(Path(ds.path)))
    if ds.query_path and not spec.in_dataset:
        queries = load_points(Path(ds.query_path))
        if queries.shape[1] != data.d:
            raise DataError(f"query file {ds.query_path} has d={queries.shape[1]}, dataset has d={data.d}")
        if len(queries) < spec.queries:
            raise DataError(f"query file {ds.query_path} has {len(queries)} rows, {spec.queries} requested")
        return data, queries[: spec.queries]
    return data, sample_in_dataset(data, spec.queries, query_rng)


def _needs_global_index(spec: ExperimentSpec) -> bool:
    return any(s != "data_parallel" for s in spec.cluster.strategies)


def build_global_index(spec: ExperimentSpec, data: Dataset) -> MRPTIndex:
    idx = spec.index
    return build_index(data, idx.n_trees, idx.depth, spec.sparsity_for(data.d), spec.seed)


def encode_shards(spec: ExperimentSpec, data: Dataset, out_dir: Path) -> list[Path]:
    """Persist the off-line encodings of every coded strategy in the spec."""
    paths: list[Path] = []
    for strategy in spec.cluster.strategies:
        if strategy not in CODED_STRATEGIES:
            continue
        cfg = code_config(spec, systematic=strategy == "mp_systematic")
        for shard in encode_data(data.points, cfg):
            path = out_dir / "shards" / strategy / f"worker_{shard.worker_id:03d}.mdsh"
            paths.append(write_shard(path, shard, m=cfg.m, n_workers=cfg.n_workers))
    logger.info("Wrote %d shard file(s) under %s", len(paths), out_dir / "shards")
    return paths


def _strategy_summary(name: str, runs: list[ExperimentSummary], payload_bytes: int) -> StrategySummaryModel:
    frames = [r.per_query for r in runs if len(r.per_query)]
    per_query = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=["latency"])
    n = len(per_query)
    return StrategySummaryModel(
        name=name,
        mean_latency=float(per_query["latency"].mean()) if n else None,
        std_latency=float(per_query["latency"].std(ddof=0)) if n else None,
        mean_recall=float(per_query["recall"].mean()) if n else None,
        mean_candidate_size=float(per_query["candidate_size"].mean()) if n else None,
        max_worker_payload_bytes=payload_bytes,
        runs=[
            RunRowModel(
                run=r.run_id,
                n_queries=r.n_queries,
                mean_latency=r.mean_latency,
                std_latency=r.std_latency,
                mean_recall=r.mean_recall,
                mean_candidate_size=r.mean_candidate_size,
            )
            for r in runs
        ],
    )


def _query_records(strategy: str, run: ExperimentSummary, truth: list[Neighbors], k: int) -> list[dict[str, Any]]:
    out = []
    for outcome, row in zip(run.outcomes, run.per_query.itertuples(index=False)):
        out.append(
            {
                "strategy": strategy,
                "run": run.run_id,
                "query_id": outcome.query_id,
                "k": k,
                "found": [int(i) for i in outcome.neighbors.indices],
                "truth": [int(i) for i in truth[outcome.query_id].indices],
                "recall": float(row.recall),
                "latency": float(row.latency),
                "candidate_size": float(row.candidate_size),
                "decode_path": outcome.decode_path,
            }
        )
    return out


def _latency_table(per_strategy: dict[str, list[ExperimentSummary]]) -> pd.DataFrame:
    frames = []
    for name, runs in per_strategy.items():
        for r in runs:
            if len(r.per_query):
                frames.append(r.per_query[["run", "query_id", "latency"]].assign(strategy=name))
    if not frames:
        return pd.DataFrame(columns=["run", "query_id", *per_strategy.keys()])
    long = pd.concat(frames, ignore_index=True)
    wide = long.pivot(index=["run", "query_id"], columns="strategy", values="latency").reset_index()
    wide.columns.name = None
    return wide[["run", "query_id", *[s for s in per_strategy if s in wide.columns]]]


def write_outputs(
    spec: ExperimentSpec,
    summary: RunSummaryModel,
    per_strategy: dict[str, list[ExperimentSummary]],
    truth: list[Neighbors],
    out_dir: Path,
    *,
    settings_meta: dict[str, Any] | None = None,
) -> tuple[dict[str, Path], SchemaReport]:
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, Path] = {}

    artifacts["summary_json"] = write_json(out_dir / "summary.json", summary.model_dump(mode="json"))
    rows = [
        {**s.model_dump(exclude={"runs"}), "runs": len(s.runs)} for s in summary.strategies
    ]
    artifacts["summary_csv"] = out_dir / "summary.csv"
    pd.DataFrame(rows, columns=SUMMARY_CSV_COLUMNS).to_csv(artifacts["summary_csv"], index=False)

    artifacts["latency_table"] = out_dir / "latency_table.csv"
    _latency_table(per_strategy).to_csv(artifacts["latency_table"], index=False)

    traces: list[dict[str, Any]] = []
    queries: list[dict[str, Any]] = []
    for name, runs in per_strategy.items():
        for r in runs:
            traces.extend(trace_records(r.outcomes, run_id=r.run_id))
            queries.extend(_query_records(name, r, truth, spec.k))
    artifacts["traces"] = write_jsonl(out_dir / "traces.jsonl", traces)
    artifacts["queries"] = write_jsonl(out_dir / "queries.jsonl", queries)

    artifacts["schema"] = write_json(out_dir / "summary.schema.json", RunSummaryModel.model_json_schema())
    report = validate_outputs(out_dir)
    artifacts["schema_report"] = write_json(out_dir / "schema_report.json", report.as_dict())
    if not report.ok:
        logger.warning("Output schema check failed: %s", "; ".join(report.errors))

    run_meta = build_run_meta(
        run_id=new_run_id(),
        generated_at=utc_now_iso(),
        spec=spec.model_dump(mode="json"),
        spec_hash=summary.spec_hash,
        settings_meta=settings_meta,
        outputs=[file_meta(p) for p in artifacts.values()],
        schema_version=SCHEMA_VERSION,
    )
    artifacts["run_meta"] = write_json(out_dir / "run_meta.json", run_meta)
    return artifacts, report


def run(spec: ExperimentSpec, *, settings_meta: dict[str, Any] | None = None) -> RunResult:
    out_dir = Path(spec.out_dir)
    logger.info("Experiment %s: strategies=%s runs=%d queries=%d", spec.spec_hash()[:12], spec.cluster.strategies, spec.runs, spec.queries)

    with stage("validate"):
        validate_spec(spec)
    with stage("load-data"):
        data, queries = prepare_data(spec)
    with stage("validate"):
        validate_spec(spec, n=data.n, d=data.d)
    with stage("ground-truth"):
        truth = ground_truth(data, queries, spec.k)
    index: MRPTIndex | None = None
    if _needs_global_index(spec):
        with stage("build-index"):
            index = build_global_index(spec, data)
    if spec.write_shards:
        with stage("encode-shards"):
            encode_shards(spec, data, out_dir)

    per_strategy: dict[str, list[ExperimentSummary]] = {}
    strategies: list[StrategySummaryModel] = []
    for name in spec.cluster.strategies:
        with stage("build-cluster"):
            cluster = build_cluster(data, cluster_config(spec, name, data.d), index=index)
        with cluster:
            runs: list[ExperimentSummary] = []
            for r in range(spec.runs):
                with stage("run-experiment"):
                    runs.append(run_experiment(cluster, queries, truth, run_id=r))
            per_strategy[name] = runs
            strategies.append(_strategy_summary(name, runs, cluster.max_worker_payload_bytes))

    summary = RunSummaryModel(spec_hash=spec.spec_hash(), strategies=strategies)
    with stage("write-outputs"):
        artifacts, report = write_outputs(spec, summary, per_strategy, truth, out_dir, settings_meta=settings_meta)
    logger.info("Wrote outputs to %s", out_dir)
    return RunResult(summary=summary, out_dir=out_dir, artifacts=artifacts, schema_report=report)


def run_compute_benchmark(spec: ExperimentSpec) -> dict[str, Any]:
    """Wall-clock seconds per query with straggling disabled; written to compute_summary.json."""
    out_dir = Path(spec.out_dir)
    with stage("validate"):
        validate_spec(spec)
    with stage("load-data"):
        data, queries = prepare_data(spec)
    with stage("validate"):
        validate_spec(spec, n=data.n, d=data.d)
    with stage("ground-truth"):
        truth = ground_truth(data, queries, spec.k)
    index: MRPTIndex | None = None
    if _needs_global_index(spec):
        with stage("build-index"):
            index = build_global_index(spec, data)

    rows: list[dict[str, Any]] = []
    for name in spec.cluster.strategies:
        with stage("build-cluster"):
            cfg = cluster_config(spec, name, data.d, straggler=StragglerModel.none())
            cluster = build_cluster(data, cfg, index=index)
        walls: list[float] = []
        recalls: list[float] = []
        with cluster, stage("run-experiment"):
            for qid, (q, t) in enumerate(zip(queries, truth)):
                start = time.perf_counter()
                outcome = run_query(cluster, q, query_id=qid)
                walls.append(time.perf_counter() - start)
                recalls.append(recall(outcome.neighbors, t, spec.k))
        rows.append(
            {
                "name": name,
                "n_queries": len(walls),
                "mean_wall_s": float(np.mean(walls)) if walls else None,
                "std_wall_s": float(np.std(walls)) if walls else None,
                "mean_recall": float(np.mean(recalls)) if recalls else None,
            }
        )
    result = {"spec_hash": spec.spec_hash(), "clock": "wall", "strategies": rows}
    with stage("write-outputs"):
        write_json(out_dir / "compute_summary.json", result)
    return result
