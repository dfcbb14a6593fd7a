from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True, eq=False)
class Band:
    """Per-row column intervals ``[lo[i], hi[i]]`` of an ``(n+1) x (m+1)`` cost matrix."""

    lo: np.ndarray
    hi: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return len(self.lo) - 1

    @classmethod
    def full(cls, n: int, m: int) -> Band:
        return cls(np.zeros(n + 1, dtype=np.int64), np.full(n + 1, m, dtype=np.int64), m)

    def widths(self) -> np.ndarray:
        return self.hi - self.lo + 1

    def cell_count(self) -> int:
        return int(self.widths().sum())

    def contains(self, i: int, j: int) -> bool:
        return 0 <= i <= self.n and self.lo[i] <= j <= self.hi[i]

    def is_full(self) -> bool:
        return bool(np.all(self.lo == 0) and np.all(self.hi == self.m))

    def validate(self, n: int | None = None, m: int | None = None) -> None:
        """Raise ConfigurationError unless the band is a usable feasible region."""
        if n is not None and self.n != n:
            raise ConfigurationError(f"band has {self.n + 1} rows, expected {n + 1}")
        if m is not None and self.m != m:
            raise ConfigurationError(f"band is for m={self.m}, expected {m}")
        lo, hi = self.lo, self.hi
        if len(lo) != len(hi) or len(lo) == 0:
            raise ConfigurationError("band lo/hi must be non-empty and of equal length")
        if np.any(lo > hi) or np.any(lo < 0) or np.any(hi > self.m):
            raise ConfigurationError("band intervals must be non-empty and within [0, m]")
        if np.any(np.diff(lo) < 0) or np.any(np.diff(hi) < 0):
            raise ConfigurationError("band interval bounds must be non-decreasing")
        if np.any(lo[1:] > hi[:-1] + 1):
            raise ConfigurationError("band rows must overlap or touch diagonally")
        if lo[0] != 0:
            raise ConfigurationError("band must contain the start cell (0, 0)")
        if hi[-1] != self.m:
            raise ConfigurationError(f"band must contain the end cell ({self.n}, {self.m})")

    def __repr__(self) -> str:
        return f"Band(n={self.n}, m={self.m}, cells={self.cell_count()})"
