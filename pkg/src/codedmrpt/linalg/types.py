"""
Dense data containers used by every query strategy.

Points are stored column-wise: `Dataset.values` is a d×N float64 matrix whose
column j is point x_j, and `Dataset.norms[j]` caches ‖x_j‖ so distances can
be recovered from dot products alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from codedmrpt.errors import ConfigError, DataError

# Dense row-major float64 matrix (Xᵀ, X(S)ᵀ, column blocks X_iᵀ).
DenseMatrix = npt.NDArray[np.float64]
# Dense float64 vector (q, q_i, w).
VectorR = npt.NDArray[np.float64]
# Ascending unique point indices.
IndexSet = npt.NDArray[np.int64]


def as_index_set(rows: object) -> IndexSet:
    arr = np.asarray(rows, dtype=np.int64).reshape(-1)
    return arr


@dataclass(frozen=True)
class Dataset:
    values: DenseMatrix
    norms: VectorR = field(repr=False)

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise DataError(f"dataset values must be 2-D (d×N), got shape {self.values.shape}")
        d, n = self.values.shape
        if d < 1 or n < 1:
            raise DataError(f"dataset needs d >= 1 and N >= 1, got d={d} N={n}")
        if not np.all(np.isfinite(self.values)):
            raise DataError("dataset contains non-finite values")
        if self.norms.shape != (n,):
            raise DataError(f"norms must have length N={n}, got shape {self.norms.shape}")
        self.values.setflags(write=False)
        self.norms.setflags(write=False)

    @classmethod
    def from_columns(cls, values: npt.ArrayLike) -> "Dataset":
        vals = np.array(values, dtype=np.float64, order="C")
        if vals.ndim != 2:
            raise DataError(f"dataset values must be 2-D (d×N), got shape {vals.shape}")
        norms = np.sqrt(np.einsum("ij,ij->j", vals, vals))
        return cls(values=vals, norms=norms)

    @classmethod
    def from_points(cls, points: npt.ArrayLike) -> "Dataset":
        """Build from an N×d array of points (one point per row)."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2:
            raise DataError(f"points must be 2-D (N×d), got shape {pts.shape}")
        return cls.from_columns(pts.T)

    @property
    def d(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    @property
    def points(self) -> DenseMatrix:
        # Xᵀ as an N×d view.
        return self.values.T

    def point(self, j: int) -> VectorR:
        return np.array(self.values[:, j])

    def subset(self, start: int, stop: int) -> "Dataset":
        return Dataset.from_columns(self.values[:, start:stop])


@dataclass(frozen=True)
class ColumnSplit:
    """Contiguous partition of [0, width) into `parts` ranges; earlier parts take the extra column."""

    width: int
    boundaries: tuple[int, ...]

    @classmethod
    def even(cls, width: int, parts: int) -> "ColumnSplit":
        if not 1 <= parts <= width:
            raise ConfigError(f"parts must be in [1, {width}], got {parts}")
        base, extra = divmod(width, parts)
        starts = [0]
        for i in range(parts - 1):
            starts.append(starts[-1] + base + (1 if i < extra else 0))
        return cls(width=width, boundaries=tuple(starts))

    @property
    def parts(self) -> int:
        return len(self.boundaries)

    @property
    def ranges(self) -> list[tuple[int, int]]:
        ends = list(self.boundaries[1:]) + [self.width]
        return list(zip(self.boundaries, ends))

    @property
    def max_width(self) -> int:
        return max(stop - start for start, stop in self.ranges)
