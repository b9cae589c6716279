from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from codedmrpt.cluster.trace import TRACE_FIELDS

SCHEMA_VERSION = "summary-v1"
RECALL_TOLERANCE = 1e-12


class RunRowModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run: int = Field(ge=0)
    n_queries: int = Field(ge=0)
    mean_latency: float | None = Field(default=None, ge=0.0)
    std_latency: float | None = Field(default=None, ge=0.0)
    mean_recall: float | None = Field(default=None, ge=0.0, le=1.0)
    mean_candidate_size: float | None = Field(default=None, ge=0.0)


class StrategySummaryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    mean_latency: float | None = Field(default=None, ge=0.0)
    std_latency: float | None = Field(default=None, ge=0.0)
    mean_recall: float | None = Field(default=None, ge=0.0, le=1.0)
    mean_candidate_size: float | None = Field(default=None, ge=0.0)
    max_worker_payload_bytes: int = Field(ge=0)
    runs: list[RunRowModel] = Field(default_factory=list)


class RunSummaryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: str = SCHEMA_VERSION
    spec_hash: str
    strategies: list[StrategySummaryModel] = Field(default_factory=list)

    def strategy(self, name: str) -> StrategySummaryModel:
        for s in self.strategies:
            if s.name == name:
                return s
        raise KeyError(name)


@dataclass(frozen=True)
class SchemaReport:
    ok: bool
    errors: list[str]
    warnings: list[str]
    stats: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


def _read_jsonl(path: Path, *, label: str, errors: list[str]) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = []
    if not path.exists():
        errors.append(f"{label}: missing file {path.name}")
        return records
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as e:
            errors.append(f"{label}: line {lineno} is not valid JSON ({e.msg})")
    return records


def validate_summary(data: dict[str, Any]) -> tuple[RunSummaryModel | None, list[str]]:
    try:
        return RunSummaryModel.model_validate(data), []
    except ValidationError as e:
        return None, [f"summary: {'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]


def validate_outputs(out_dir: Path) -> SchemaReport:
    """Check summary.json against the schema, parse traces line by line, and recompute recall from queries.jsonl."""
    out_dir = Path(out_dir)
    errors: list[str] = []
    warnings: list[str] = []

    summary_path = out_dir / "summary.json"
    if not summary_path.exists():
        return SchemaReport(ok=False, errors=["summary: missing summary.json"], warnings=[], stats={})
    summary, summary_errors = validate_summary(json.loads(summary_path.read_text(encoding="utf-8")))
    errors.extend(summary_errors)

    traces = _read_jsonl(out_dir / "traces.jsonl", label="traces", errors=errors)
    for i, rec in enumerate(traces):
        missing = [f for f in TRACE_FIELDS if f not in rec]
        if missing:
            errors.append(f"traces: record {i} missing fields {missing}")
            break

    queries = _read_jsonl(out_dir / "queries.jsonl", label="queries", errors=errors)
    recomputed: dict[str, float] = {}
    if summary is not None:
        for strat in summary.strategies:
            rows = [q for q in queries if q.get("strategy") == strat.name]
            if not rows:
                if strat.mean_recall is not None:
                    errors.append(f"queries: no per-query rows for {strat.name}")
                continue
            values = []
            for q in rows:
                k = int(q["k"])
                hits = len(set(q["found"][:k]) & set(q["truth"][:k]))
                values.append(hits / k)
            recomputed[strat.name] = float(np.mean(values))
            if strat.mean_recall is None or abs(recomputed[strat.name] - strat.mean_recall) > RECALL_TOLERANCE:
                errors.append(
                    f"queries: recomputed recall {recomputed[strat.name]} != summary {strat.mean_recall} for {strat.name}"
                )
        if any(s.mean_latency is None for s in summary.strategies):
            warnings.append("summary: strategies without queries (empty experiment)")

    stats = {
        "strategies": [s.name for s in summary.strategies] if summary is not None else [],
        "trace_records": len(traces),
        "query_records": len(queries),
        "recomputed_recall": recomputed,
    }
    return SchemaReport(ok=len(errors) == 0, errors=errors, warnings=warnings, stats=stats)
