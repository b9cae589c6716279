from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any
from uuid import uuid4


@dataclass(frozen=True)
class FileMeta:
    path: str
    exists: bool
    size_bytes: int | None
    sha256: str | None


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def file_meta(path: Path) -> FileMeta:
    p = Path(path)
    if not p.exists():
        return FileMeta(path=str(p), exists=False, size_bytes=None, sha256=None)
    return FileMeta(
        path=str(p),
        exists=True,
        size_bytes=int(p.stat().st_size),
        sha256=hashlib.sha256(p.read_bytes()).hexdigest(),
    )


def json_hash(data: Any) -> str:
    """SHA-256 of a canonical JSON encoding (sorted keys, no whitespace)."""
    raw = json.dumps(data, ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(raw).hexdigest()


def new_run_id() -> str:
    return uuid4().hex


def build_run_meta(
    *,
    run_id: str,
    generated_at: str,
    spec: dict[str, Any],
    spec_hash: str,
    settings_meta: dict[str, Any] | None,
    outputs: list[FileMeta],
    schema_version: str,
) -> dict[str, Any]:
    # Everything that varies between otherwise identical runs lives here, never in summary.json.
    return {
        "run_id": run_id,
        "generated_at": generated_at,
        "spec_hash": spec_hash,
        "spec": spec,
        "config": settings_meta or {},
        "outputs": [asdict(fm) for fm in outputs],
        "schema_version": schema_version,
    }


def write_json(path: Path, data: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # Sorted keys and a trailing newline keep the bytes stable for identical content.
    path.write_text(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
