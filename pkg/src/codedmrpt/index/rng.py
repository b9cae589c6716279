"""
Seedable, splittable random streams.

All randomness is derived from a master seed plus a tuple of stream keys via
`numpy.random.SeedSequence`, so a tree, a worker or a single straggler draw
gets the same numbers regardless of how many threads run or in which order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from codedmrpt.errors import ConfigError

# Stream tags keep unrelated consumers of the same master seed apart.
TREE_STREAM = 0
WORKER_INDEX_STREAM = 1
STRAGGLER_STREAM = 2
QUERY_STREAM = 3


@dataclass(frozen=True)
class RngSeed:
    seed: int

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def substream(self, *keys: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=tuple(int(k) for k in keys))
        return np.random.default_rng(ss)

    def tree_rng(self, tree_id: int) -> np.random.Generator:
        return self.substream(TREE_STREAM, tree_id)

    def derive(self, *keys: int) -> "RngSeed":
        """A child seed, e.g. for a data-parallel worker's local forest."""
        state = np.random.SeedSequence(entropy=int(self.seed), spawn_key=tuple(int(k) for k in keys)).generate_state(
            2, dtype=np.uint32
        )
        return RngSeed(int(state[0]) << 32 | int(state[1]))


def as_seed(seed: int | RngSeed) -> RngSeed:
    return seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
