"""
Typed experiment specification.

`spec_from_settings()` turns the merged YAML mapping (see `codedmrpt.settings`)
into an `ExperimentSpec`; `validate_spec()` checks every precondition that can
be checked before an index is built and reports all problems at once.
"""

from __future__ import annotations

import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from codedmrpt.cluster.model import CODED_STRATEGIES, ClusterConfig, StragglerModel
from codedmrpt.coding.matdot import DEFAULT_DECODE_CONDITION_LIMIT, CodeConfig
from codedmrpt.errors import ConfigError
from codedmrpt.index.mrpt import IndexParams
from codedmrpt.run_meta import json_hash

StrategyName = Literal["single", "data_parallel", "mp_uncoded", "mp_matdot", "mp_systematic"]

# Parameters applied when a straggler model is chosen by name (`--straggler`).
# A top-level `straggler_presets` mapping in the config file is merged over these.
STRAGGLER_PRESETS: dict[str, dict[str, float]] = {
    "none": {},
    "shifted_exponential": {"a": 1e-7, "mu": 15.0, "alpha": 1.0},
    "weibull": {"a": 0.2, "mu": 2.0, "alpha": 0.5},
}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSpec(_Strict):
    source: Literal["synthetic", "fvecs", "csv"] = "synthetic"
    path: str | None = None
    query_path: str | None = None
    n: int = Field(2000, ge=1)
    d: int = Field(48, ge=1)
    kind: Literal["gaussian", "clustered"] = "clustered"
    clusters: int = Field(20, ge=1)
    seed: int = Field(7, ge=0)


class IndexSpec(_Strict):
    n_trees: int = Field(20, ge=1)
    depth: int = Field(5, ge=1)
    # None -> 1/sqrt(d)
    sparsity: float | None = Field(None, gt=0.0, le=1.0)
    vote_threshold: int = Field(2, ge=1)


class StragglerSpec(_Strict):
    kind: Literal["none", "shifted_exponential", "weibull"] = "shifted_exponential"
    a: float = Field(1e-7, gt=0.0)
    mu: float = Field(15.0, gt=0.0)
    alpha: float = Field(1.0, gt=0.0)


class ClusterSpec(_Strict):
    strategies: list[StrategyName] = Field(
        default_factory=lambda: ["single", "data_parallel", "mp_uncoded", "mp_matdot", "mp_systematic"],
        min_length=1,
    )
    workers: int = Field(16, ge=1)
    m: int = Field(3, ge=1)
    tau: int | None = Field(None, ge=1)
    betas: Literal["chebyshev", "integer"] = "chebyshev"
    decode_condition_limit: float = Field(DEFAULT_DECODE_CONDITION_LIMIT, gt=0.0)
    straggler: StragglerSpec = Field(default_factory=StragglerSpec)
    timeout_s: float | None = Field(None, gt=0.0)
    unresponsive_workers: list[int] = Field(default_factory=list)
    include_compute_time: bool = False
    compute_time_scale: float = Field(1.0, ge=0.0)
    include_master_time: bool = False
    master_time_scale: float = Field(1.0, ge=0.0)
    deterministic: bool = True
    data_parallel_depth: int | None = Field(None, ge=1)


class ExperimentSpec(_Strict):
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    index: IndexSpec = Field(default_factory=IndexSpec)
    cluster: ClusterSpec = Field(default_factory=ClusterSpec)
    queries: int = Field(100, ge=0)
    runs: int = Field(1, ge=1)
    k: int = Field(10, ge=1)
    seed: int = Field(42, ge=0, lt=2**64)
    in_dataset: bool = False
    write_shards: bool = False
    out_dir: str = "results"

    def spec_hash(self) -> str:
        # The output directory does not change results.
        return json_hash(self.model_dump(mode="json", exclude={"out_dir"}))

    def sparsity_for(self, d: int) -> float:
        return self.index.sparsity if self.index.sparsity is not None else min(1.0, 1.0 / math.sqrt(d))


def spec_from_settings(settings: dict[str, Any]) -> ExperimentSpec:
    raw: dict[str, Any] = dict(settings.get("experiment", {}) or {})
    for section in ("dataset", "index", "cluster"):
        if section in settings:
            raw[section] = settings[section]
    if "out_dir" not in raw and "paths" in settings:
        raw["out_dir"] = settings["paths"]["out_dir"]
    try:
        return ExperimentSpec.model_validate(raw)
    except ValidationError as e:
        problems = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigError("invalid experiment spec:\n  " + "\n  ".join(problems)) from e


def spec_problems(spec: ExperimentSpec, *, n: int | None = None, d: int | None = None) -> list[str]:
    """All violated preconditions; N and d default to the synthetic generator's."""
    if spec.dataset.source == "synthetic":
        n = spec.dataset.n if n is None else n
        d = spec.dataset.d if d is None else d
    problems: list[str] = []
    idx, cl = spec.index, spec.cluster
    strategies = set(cl.strategies)

    if idx.vote_threshold > idx.n_trees:
        problems.append(f"index.vote_threshold = {idx.vote_threshold} exceeds index.n_trees = {idx.n_trees}")
    if "data_parallel" in strategies and cl.tau is not None and cl.tau < spec.k:
        problems.append(f"cluster.tau = {cl.tau} must be >= k = {spec.k}")
    if strategies & CODED_STRATEGIES and cl.workers < 2 * cl.m - 1:
        problems.append(f"cluster.workers = {cl.workers} is below the recovery threshold 2m-1 = {2 * cl.m - 1}")
    if any(not 0 <= w < cl.workers for w in cl.unresponsive_workers):
        problems.append(f"cluster.unresponsive_workers must be in [0, {cl.workers})")
    if len(set(cl.unresponsive_workers)) != len(cl.unresponsive_workers):
        problems.append("cluster.unresponsive_workers contains duplicates")
    if spec.dataset.source != "synthetic" and not spec.dataset.path:
        problems.append(f"dataset.path is required for source '{spec.dataset.source}'")
    if spec.dataset.source == "synthetic" and spec.dataset.kind == "clustered" and spec.dataset.clusters > spec.dataset.n:
        problems.append(f"dataset.clusters = {spec.dataset.clusters} exceeds dataset.n = {spec.dataset.n}")

    if n is not None:
        if (1 << idx.depth) > n:
            problems.append(f"2^index.depth = {1 << idx.depth} exceeds N = {n}")
        if spec.k > n:
            problems.append(f"k = {spec.k} exceeds N = {n}")
        if "data_parallel" in strategies:
            if cl.workers > n:
                problems.append(f"cluster.workers = {cl.workers} exceeds N = {n} for data-parallel search")
            elif n // cl.workers < 2:
                problems.append(f"data-parallel slices of {n // cl.workers} point(s) are too small for a tree")
            elif cl.data_parallel_depth is not None and (1 << cl.data_parallel_depth) > n // cl.workers:
                problems.append(f"2^cluster.data_parallel_depth exceeds the smallest slice ({n // cl.workers} points)")
        if spec.in_dataset and spec.queries > n:
            problems.append(f"{spec.queries} in-dataset queries exceed N = {n}")
    if d is not None:
        if strategies & CODED_STRATEGIES and cl.m > d:
            problems.append(f"cluster.m = {cl.m} exceeds d = {d}")
        if "mp_uncoded" in strategies and cl.workers > d:
            problems.append(f"cluster.workers = {cl.workers} exceeds d = {d} for uncoded model parallelism")
    return problems


def validate_spec(spec: ExperimentSpec, *, n: int | None = None, d: int | None = None) -> ExperimentSpec:
    problems = spec_problems(spec, n=n, d=d)
    if problems:
        raise ConfigError("invalid experiment spec:\n  " + "\n  ".join(problems))
    return spec


def code_config(spec: ExperimentSpec, *, systematic: bool) -> CodeConfig:
    cl = spec.cluster
    factory = CodeConfig.chebyshev if cl.betas == "chebyshev" else CodeConfig.integer
    return factory(cl.m, cl.workers, systematic=systematic, decode_condition_limit=cl.decode_condition_limit)


def cluster_config(spec: ExperimentSpec, strategy: str, d: int, *, straggler: StragglerModel | None = None) -> ClusterConfig:
    cl = spec.cluster
    code = code_config(spec, systematic=strategy == "mp_systematic") if strategy in CODED_STRATEGIES else None
    if straggler is None:
        s = cl.straggler
        straggler = StragglerModel(kind=s.kind, a=s.a, mu=s.mu, alpha=s.alpha)
    return ClusterConfig(
        strategy=strategy,  # type: ignore[arg-type]
        n_workers=cl.workers,
        k=spec.k,
        vote_threshold=spec.index.vote_threshold,
        index=IndexParams(n_trees=spec.index.n_trees, depth=spec.index.depth, sparsity=spec.sparsity_for(d)),
        tau=cl.tau,
        code=code,
        straggler=straggler,
        seed=spec.seed,
        timeout_s=cl.timeout_s,
        unresponsive_workers=frozenset() if strategy == "single" else frozenset(cl.unresponsive_workers),
        include_compute_time=cl.include_compute_time,
        compute_time_scale=cl.compute_time_scale,
        include_master_time=cl.include_master_time,
        master_time_scale=cl.master_time_scale,
        deterministic=cl.deterministic,
        data_parallel_depth=cl.data_parallel_depth,
    )
