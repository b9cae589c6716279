"""
Minimum worker computation times under shifted-exponential and Weibull straggling.

Both models have a deterministic floor a·l, where l is the number of rows the
worker loads, and a random tail whose scale grows with l/μ. Samples are drawn by
inverse CDF from a uniform u, which makes them easy to pin in tests.
"""

from __future__ import annotations

import math

from codedmrpt.cluster.model import StragglerModel
from codedmrpt.errors import ConfigError
from codedmrpt.index.rng import STRAGGLER_STREAM, RngSeed


def sample_min_time(model: StragglerModel, rows: float, u: float) -> float:
    if not rows >= 1:
        raise ConfigError(f"row count must be >= 1, got {rows}")
    if not 0.0 <= u < 1.0:
        raise ConfigError(f"uniform draw must be in [0, 1), got {u}")
    if model.kind == "none":
        return 0.0
    tail = -math.log1p(-u)
    if model.kind == "weibull":
        # Standard form 1 − exp(−((μ/l)(t − a·l))^α), inverted.
        tail = tail ** (1.0 / model.alpha)
    return model.a * rows + (rows / model.mu) * tail


def worker_stream(seed: int | RngSeed, worker_id: int) -> RngSeed:
    base = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    return base.derive(STRAGGLER_STREAM, worker_id)


def draw_uniform(stream: RngSeed, run_id: int, query_id: int) -> float:
    # One draw per (run, query) from the worker's own stream; thread order never matters.
    return float(stream.substream(run_id, query_id).random())
