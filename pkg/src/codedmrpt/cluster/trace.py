from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable

from codedmrpt.cluster.model import QueryOutcome

TRACE_FIELDS = ("query_id", "worker_id", "strategy", "l", "sampled_t", "completion_t", "used")


def _finite_or_none(x: float) -> float | None:
    # JSON has no infinity; an unresponsive worker is recorded as null.
    return x if math.isfinite(x) else None


def trace_records(outcomes: Iterable[QueryOutcome], *, run_id: int | None = None) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = []
    for outcome in outcomes:
        for t in outcome.trace:
            rec: dict[str, Any] = {
                "query_id": t.query_id,
                "worker_id": t.worker_id,
                "strategy": t.strategy,
                "l": t.rows,
                "sampled_t": _finite_or_none(t.sampled_t),
                "completion_t": _finite_or_none(t.completion_t),
                "used": t.used,
            }
            if run_id is not None:
                rec["run"] = run_id
            records.append(rec)
    return records


def write_jsonl(path: Path, records: Iterable[dict[str, Any]], *, append: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a" if append else "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    return path


def read_jsonl(path: Path) -> list[dict[str, Any]]:
    with Path(path).open("r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
