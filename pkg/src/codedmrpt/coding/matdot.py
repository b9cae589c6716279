"""
MatDot and systematic MatDot codes for the product w = X(S)ᵀq.

Xᵀ (N×d) is split vertically into m column blocks X_jᵀ and q into m parts q_j,
both zero-padded to a common width ⌈d/m⌉. Worker i stores P_Xᵀ(β_i) and receives
P_q(β_i); the product of the two polynomials has degree 2m−2, so any 2m−1
distinct evaluations determine it.

- MatDot: P_Xᵀ(β) = Σ_j X_jᵀ β^(j−1), P_q(β) = Σ_j q_j β^(m−j); w is the β^(m−1)
  coefficient of the product.
- Systematic MatDot: both encodings use the Lagrange basis L_j over the first m
  evaluation points, so workers 0..m−1 hold the uncoded blocks and w is the sum
  of the product evaluated at those m points.

Row selection commutes with encoding: the rows of P_Xᵀ(β) indexed by S are
P_X(S)ᵀ(β), which is why shards can be encoded off-line before S is known.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from codedmrpt.errors import (
    BetaMismatchError,
    ConfigError,
    DimensionMismatchError,
    DuplicateBetaError,
    IllConditionedError,
    InsufficientResultsError,
)
from codedmrpt.linalg.kernels import row_subset_matvec
from codedmrpt.linalg.types import ColumnSplit, DenseMatrix, IndexSet, VectorR

logger = logging.getLogger(__name__)

DEFAULT_DECODE_CONDITION_LIMIT = 1e12


def chebyshev_nodes(count: int) -> tuple[float, ...]:
    """Chebyshev points of the first kind on [−1, 1]."""
    return tuple(math.cos((2 * i + 1) * math.pi / (2 * count)) for i in range(count))


@dataclass(frozen=True)
class CodeConfig:
    m: int
    n_workers: int
    betas: tuple[float, ...]
    systematic: bool = False
    decode_condition_limit: float = DEFAULT_DECODE_CONDITION_LIMIT

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.n_workers < self.recovery_threshold:
            raise ConfigError(
                f"P = {self.n_workers} workers is below the recovery threshold 2m-1 = {self.recovery_threshold}"
            )
        if len(self.betas) != self.n_workers:
            raise ConfigError(f"expected {self.n_workers} evaluation points, got {len(self.betas)}")
        if not all(math.isfinite(b) for b in self.betas):
            raise ConfigError("evaluation points must be finite")
        if len(set(self.betas)) != len(self.betas):
            raise ConfigError("evaluation points must be pairwise distinct")

    @classmethod
    def chebyshev(cls, m: int, n_workers: int, *, systematic: bool = False, **kwargs: float) -> "CodeConfig":
        return cls(m=m, n_workers=n_workers, betas=chebyshev_nodes(n_workers), systematic=systematic, **kwargs)

    @classmethod
    def integer(cls, m: int, n_workers: int, *, systematic: bool = False, **kwargs: float) -> "CodeConfig":
        # β_i = 1..P; reproduces the Vandermonde blow-up seen with naive points.
        return cls(
            m=m,
            n_workers=n_workers,
            betas=tuple(float(i) for i in range(1, n_workers + 1)),
            systematic=systematic,
            **kwargs,
        )

    @property
    def recovery_threshold(self) -> int:
        return 2 * self.m - 1

    @property
    def basis_nodes(self) -> tuple[float, ...]:
        return self.betas[: self.m]


@dataclass(frozen=True)
class EncodedShard:
    worker_id: int
    beta: float
    matrix: DenseMatrix

    @property
    def width(self) -> int:
        return int(self.matrix.shape[1])


@dataclass(frozen=True)
class EncodedQueryShare:
    worker_id: int
    beta: float
    vector: VectorR


@dataclass(frozen=True)
class CodedResult:
    worker_id: int
    beta: float
    values: VectorR


def lagrange_basis(nodes: Sequence[float], x: float) -> VectorR:
    """[L_1(x), …, L_m(x)] over `nodes`; L_j(nodes[i]) is exactly δ_ij."""
    m = len(nodes)
    out = np.ones(m, dtype=np.float64)
    for j in range(m):
        for r in range(m):
            if r != j:
                out[j] *= (x - nodes[r]) / (nodes[j] - nodes[r])
    return out


def data_coefficients(cfg: CodeConfig) -> DenseMatrix:
    """P×m table: entry (i, j) multiplies block X_{j+1}ᵀ in worker i's shard."""
    if cfg.systematic:
        return np.stack([lagrange_basis(cfg.basis_nodes, b) for b in cfg.betas])
    powers = np.arange(cfg.m)
    return np.array([[b**p for p in powers] for b in cfg.betas], dtype=np.float64)


def query_coefficients(cfg: CodeConfig) -> DenseMatrix:
    """P×m table: entry (i, j) multiplies q_{j+1} in worker i's share (reversed powers for MatDot)."""
    if cfg.systematic:
        return data_coefficients(cfg)
    powers = np.arange(cfg.m)[::-1]
    return np.array([[b**p for p in powers] for b in cfg.betas], dtype=np.float64)


def _padded_blocks(xt: DenseMatrix, m: int) -> np.ndarray:
    n, d = xt.shape
    split = ColumnSplit.even(d, m)
    width = split.max_width
    blocks = np.zeros((m, n, width), dtype=np.float64)
    for j, (start, stop) in enumerate(split.ranges):
        blocks[j, :, : stop - start] = xt[:, start:stop]
    return blocks


def _padded_parts(q: VectorR, m: int) -> np.ndarray:
    split = ColumnSplit.even(q.shape[0], m)
    parts = np.zeros((m, split.max_width), dtype=np.float64)
    for j, (start, stop) in enumerate(split.ranges):
        parts[j, : stop - start] = q[start:stop]
    return parts


def _combine(coeffs: VectorR, pieces: np.ndarray) -> np.ndarray:
    acc = np.zeros(pieces.shape[1:], dtype=np.float64)
    for c, piece in zip(coeffs, pieces):
        # Zero coefficients are skipped so systematic shards are bit-exact copies of their block.
        if c != 0.0:
            acc += c * piece
    return acc


def encode_data(xt: DenseMatrix, cfg: CodeConfig) -> list[EncodedShard]:
    xt = np.asarray(xt, dtype=np.float64)
    if xt.ndim != 2:
        raise DimensionMismatchError(f"Xᵀ must be 2-D (N×d), got shape {xt.shape}")
    if cfg.m > xt.shape[1]:
        raise ConfigError(f"m = {cfg.m} exceeds the dimension d = {xt.shape[1]}")
    blocks = _padded_blocks(xt, cfg.m)
    coeffs = data_coefficients(cfg)
    shards = [
        EncodedShard(worker_id=i, beta=float(beta), matrix=_combine(coeffs[i], blocks))
        for i, beta in enumerate(cfg.betas)
    ]
    logger.debug(
        "Encoded %d shards (m=%d, systematic=%s, width=%d)", len(shards), cfg.m, cfg.systematic, blocks.shape[2]
    )
    return shards


def encode_query(q: VectorR, cfg: CodeConfig, *, dim: int | None = None) -> list[EncodedQueryShare]:
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1:
        raise DimensionMismatchError(f"query must be a vector, got shape {q.shape}")
    if dim is not None and q.shape[0] != dim:
        raise DimensionMismatchError(f"query length {q.shape[0]} does not match encoded dimension {dim}")
    if cfg.m > q.shape[0]:
        raise ConfigError(f"m = {cfg.m} exceeds the query length {q.shape[0]}")
    parts = _padded_parts(q, cfg.m)
    coeffs = query_coefficients(cfg)
    return [
        EncodedQueryShare(worker_id=i, beta=float(beta), vector=_combine(coeffs[i], parts))
        for i, beta in enumerate(cfg.betas)
    ]


def coded_product(shard: EncodedShard, rows: IndexSet, share: EncodedQueryShare) -> CodedResult:
    if shard.beta != share.beta or shard.worker_id != share.worker_id:
        raise BetaMismatchError(
            f"shard (worker {shard.worker_id}, β={shard.beta}) received share "
            f"(worker {share.worker_id}, β={share.beta})"
        )
    if share.vector.shape[0] != shard.width:
        raise DimensionMismatchError(f"share width {share.vector.shape[0]} != shard width {shard.width}")
    return CodedResult(
        worker_id=shard.worker_id,
        beta=shard.beta,
        values=row_subset_matvec(shard.matrix, rows, share.vector),
    )


def _checked(results: Sequence[CodedResult], cfg: CodeConfig, expected_len: int) -> list[CodedResult]:
    seen: set[float] = set()
    out: list[CodedResult] = []
    for r in results:
        if not 0 <= r.worker_id < cfg.n_workers or cfg.betas[r.worker_id] != r.beta:
            raise BetaMismatchError(f"result from worker {r.worker_id} carries unexpected β={r.beta}")
        if r.beta in seen:
            raise DuplicateBetaError(f"two results carry β={r.beta}")
        if r.values.shape != (expected_len,):
            raise DimensionMismatchError(f"result length {r.values.shape} != expected {expected_len}")
        seen.add(r.beta)
        out.append(r)
    return out


def interpolate_coefficients(
    results: Sequence[CodedResult],
    cfg: CodeConfig,
    expected_len: int,
) -> DenseMatrix:
    """
    Coefficients (rows = powers 0..2m−2) of the per-coordinate product polynomial,
    from the first 2m−1 results in arrival order.
    """
    checked = _checked(results, cfg, expected_len)
    k = cfg.recovery_threshold
    if len(checked) < k:
        raise InsufficientResultsError(len(checked), k)
    chosen = checked[:k]
    vander = np.vander(np.array([r.beta for r in chosen]), k, increasing=True)
    condition = float(np.linalg.cond(vander))
    if not condition <= cfg.decode_condition_limit:
        raise IllConditionedError(condition, cfg.decode_condition_limit)
    if expected_len == 0:
        return np.zeros((k, 0), dtype=np.float64)
    # One LU factorisation of the small (2m−1)×(2m−1) system serves all |S| coordinates.
    values = np.stack([r.values for r in chosen])
    return lu_solve(lu_factor(vander), values)


def decode(results: Sequence[CodedResult], cfg: CodeConfig, expected_len: int) -> VectorR:
    checked = _checked(results, cfg, expected_len)
    if cfg.systematic:
        systematic = {r.worker_id: r for r in checked if r.worker_id < cfg.m}
        if len(systematic) == cfg.m:
            w = np.zeros(expected_len, dtype=np.float64)
            for i in range(cfg.m):
                w += systematic[i].values
            return w

    coeffs = interpolate_coefficients(checked, cfg, expected_len)
    if not cfg.systematic:
        return np.array(coeffs[cfg.m - 1])
    # Evaluate the interpolated product at the m basis nodes and sum.
    weights = np.vander(np.array(cfg.basis_nodes), cfg.recovery_threshold, increasing=True).sum(axis=0)
    return weights @ coeffs


def uses_systematic_fast_path(results: Sequence[CodedResult], cfg: CodeConfig) -> bool:
    return cfg.systematic and {r.worker_id for r in results if r.worker_id < cfg.m} == set(range(cfg.m))
