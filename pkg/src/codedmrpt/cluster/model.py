from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from codedmrpt.coding.matdot import CodeConfig
from codedmrpt.errors import ConfigError
from codedmrpt.index.mrpt import IndexParams, Neighbors

Strategy = Literal["single", "data_parallel", "mp_uncoded", "mp_matdot", "mp_systematic"]
STRATEGIES: tuple[str, ...] = ("single", "data_parallel", "mp_uncoded", "mp_matdot", "mp_systematic")
CODED_STRATEGIES = frozenset({"mp_matdot", "mp_systematic"})
MODEL_PARALLEL_STRATEGIES = frozenset({"mp_uncoded", "mp_matdot", "mp_systematic"})

StragglerKind = Literal["none", "shifted_exponential", "weibull"]


@dataclass(frozen=True)
class StragglerModel:
    kind: StragglerKind = "none"
    a: float = 1e-7
    mu: float = 15.0
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "shifted_exponential", "weibull"):
            raise ConfigError(f"unknown straggler kind: {self.kind}")
        if self.kind == "none":
            return
        if not self.a > 0:
            raise ConfigError(f"straggler shift a must be > 0, got {self.a}")
        if not self.mu > 0:
            raise ConfigError(f"straggling parameter mu must be > 0, got {self.mu}")
        if self.kind == "weibull" and not self.alpha > 0:
            raise ConfigError(f"Weibull shape alpha must be > 0, got {self.alpha}")

    @classmethod
    def none(cls) -> "StragglerModel":
        return cls(kind="none")


@dataclass(frozen=True)
class ClusterConfig:
    strategy: Strategy
    n_workers: int
    k: int
    vote_threshold: int
    index: IndexParams
    tau: int | None = None
    code: CodeConfig | None = None
    straggler: StragglerModel = field(default_factory=StragglerModel.none)
    seed: int = 0
    timeout_s: float | None = None
    unresponsive_workers: frozenset[int] = frozenset()
    include_compute_time: bool = False
    compute_time_scale: float = 1.0
    include_master_time: bool = False
    master_time_scale: float = 1.0
    deterministic: bool = True
    data_parallel_depth: int | None = None

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy: {self.strategy}")
        if self.n_workers < 1:
            raise ConfigError(f"worker count must be >= 1, got {self.n_workers}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 1 <= self.vote_threshold <= self.index.n_trees:
            raise ConfigError(f"vote threshold must be in [1, {self.index.n_trees}], got {self.vote_threshold}")
        if self.strategy == "data_parallel" and self.effective_tau < self.k:
            raise ConfigError(f"tau = {self.tau} must be >= k = {self.k} for data-parallel search")
        if self.strategy in CODED_STRATEGIES:
            if self.code is None:
                raise ConfigError(f"strategy {self.strategy} needs a code configuration")
            if self.code.n_workers != self.n_workers:
                raise ConfigError(f"code has {self.code.n_workers} workers, cluster has {self.n_workers}")
            if self.code.systematic != (self.strategy == "mp_systematic"):
                raise ConfigError(f"code systematic={self.code.systematic} does not match strategy {self.strategy}")
        if any(not 0 <= w < self.worker_count for w in self.unresponsive_workers):
            raise ConfigError(f"unresponsive worker ids must be in [0, {self.worker_count})")
        if self.timeout_s is not None and not self.timeout_s > 0:
            raise ConfigError(f"timeout must be > 0, got {self.timeout_s}")
        if self.compute_time_scale < 0 or self.master_time_scale < 0:
            raise ConfigError("time scales must be >= 0")
        if self.data_parallel_depth is not None and self.data_parallel_depth < 1:
            raise ConfigError(f"data-parallel depth must be >= 1, got {self.data_parallel_depth}")

    @property
    def effective_tau(self) -> int:
        return self.k if self.tau is None else self.tau

    @property
    def worker_count(self) -> int:
        # The single-node baseline is one simulated node regardless of P.
        return 1 if self.strategy == "single" else self.n_workers


@dataclass(frozen=True)
class WorkerTrace:
    query_id: int
    worker_id: int
    strategy: str
    rows: float
    dispatch_t: float
    sampled_t: float
    completion_t: float
    used: bool
    compute_s: float = 0.0


@dataclass(frozen=True)
class QueryOutcome:
    query_id: int
    strategy: str
    neighbors: Neighbors
    latency: float
    candidate_size: float
    master_time: float
    decode_path: str
    trace: tuple[WorkerTrace, ...]

    @property
    def used_workers(self) -> list[int]:
        return [t.worker_id for t in self.trace if t.used]
