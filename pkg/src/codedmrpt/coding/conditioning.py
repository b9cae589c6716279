from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from codedmrpt.coding.matdot import CodeConfig

logger = logging.getLogger(__name__)

DEFAULT_WARN_THRESHOLD = 1e8
# Beyond this many (2m−1)-subsets a seeded random sample is checked instead.
MAX_SUBSETS = 20_000


@dataclass(frozen=True)
class ConditioningReport:
    condition: float
    worst_betas: tuple[float, ...]
    subsets_checked: int
    exhaustive: bool
    threshold: float
    warning: bool

    def as_dict(self) -> dict[str, object]:
        return {
            "condition": self.condition if math.isfinite(self.condition) else None,
            "worst_betas": list(self.worst_betas),
            "subsets_checked": self.subsets_checked,
            "exhaustive": self.exhaustive,
            "threshold": self.threshold,
            "warning": self.warning,
        }


def vandermonde_condition(betas: Sequence[float]) -> float:
    vander = np.vander(np.asarray(betas, dtype=np.float64), len(betas), increasing=True)
    return float(np.linalg.cond(vander))


def _subsets(cfg: CodeConfig, max_subsets: int, seed: int) -> tuple[list[tuple[float, ...]], bool]:
    k = cfg.recovery_threshold
    total = math.comb(cfg.n_workers, k)
    if total <= max_subsets:
        return list(itertools.combinations(cfg.betas, k)), True
    rng = np.random.default_rng(seed)
    betas = np.asarray(cfg.betas)
    picks = [tuple(betas[np.sort(rng.choice(cfg.n_workers, size=k, replace=False))]) for _ in range(max_subsets)]
    # Clustered betas are the usual worst case; always include the k closest consecutive ones.
    ordered = np.sort(betas)
    spans = ordered[k - 1 :] - ordered[: len(ordered) - k + 1]
    start = int(np.argmin(spans))
    picks.append(tuple(ordered[start : start + k]))
    return picks, False


def conditioning_report(
    cfg: CodeConfig,
    threshold: float = DEFAULT_WARN_THRESHOLD,
    *,
    max_subsets: int = MAX_SUBSETS,
    seed: int = 0,
) -> ConditioningReport:
    """Worst-case 2-norm condition number of the decoding Vandermonde system over (2m−1)-subsets of betas."""
    subsets, exhaustive = _subsets(cfg, max_subsets, seed)
    worst = -1.0
    worst_betas: tuple[float, ...] = ()
    for subset in subsets:
        cond = vandermonde_condition(subset)
        if math.isnan(cond):
            cond = math.inf
        if cond > worst:
            worst, worst_betas = cond, tuple(float(b) for b in subset)
    warning = not worst <= threshold
    if warning:
        logger.warning(
            "Vandermonde condition %.3e exceeds %.1e for m=%d P=%d; decoding may lose precision",
            worst,
            threshold,
            cfg.m,
            cfg.n_workers,
        )
    return ConditioningReport(
        condition=worst,
        worst_betas=worst_betas,
        subsets_checked=len(subsets),
        exhaustive=exhaustive,
        threshold=threshold,
        warning=warning,
    )
