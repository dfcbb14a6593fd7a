"""Fixed-region (banded) DTW and FastDTW on top of the exact engine."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .band import Band
from .distance import Distance
from .dtw import AlignConfig, AlignmentResult, WarpPath, backtrack, forward_pass, run_dtw
from .errors import ConfigurationError
from .store import CostMatrixStore
from .trace_model import Trace

__all__ = ["Band", "FastDtwConfig", "sakoe_band", "dtw_banded", "coarsen", "expand_window", "fastdtw"]


@dataclass(frozen=True)
class FastDtwConfig:
    radius: int = 1
    min_size: int = 16

    def __post_init__(self):
        if self.radius < 0:
            raise ConfigurationError("FastDTW radius must be >= 0")
        if self.min_size < 0:
            raise ConfigurationError("FastDTW min_size must be >= 0")


def _close_band(lo: np.ndarray, hi: np.ndarray, m: int) -> Band:
    """Make interval bounds monotone and contiguous, anchored at (0, 0) and (n, m)."""
    lo = lo.copy()
    hi = hi.copy()
    lo[0] = 0
    hi[-1] = m
    lo = np.minimum.accumulate(lo[::-1])[::-1]
    hi = np.maximum.accumulate(hi)
    lo[1:] = np.minimum(lo[1:], hi[:-1] + 1)
    return Band(lo.astype(np.int64), hi.astype(np.int64), m)


def sakoe_band(n: int, m: int, width: int) -> Band:
    """Band of half-width ``width`` around the straight line from (0, 0) to (n, m).

    Row ``i`` is centred on ``round(i * m / n)``; when the line is steeper than
    one column per row the interval also reaches the next row's centre, so
    the band stays connected.
    """
    if width < 0:
        raise ConfigurationError("band width must be >= 0")
    if n == 0:
        return Band(np.zeros(1, dtype=np.int64), np.full(1, m, dtype=np.int64), m)
    i = np.arange(n + 2, dtype=np.int64)
    centre = (2 * i * m + n) // (2 * n)  # round half up
    lo = np.clip(centre[:-1] - width, 0, m)
    hi = np.clip(np.maximum(centre[:-1], centre[1:] - 1) + width, 0, m)
    return _close_band(lo, hi, m)


def dtw_banded(x: Trace, y: Trace, dist: Distance, band: Band, *, store: CostMatrixStore | None = None,
               config: AlignConfig | None = None) -> AlignmentResult:
    """DTW restricted to ``band``; cells outside it count as unreachable.

    With ``store`` given the caller owns it (and must build it with the same
    band); otherwise a store is created from ``config``.
    """
    band.validate(len(x), len(y))
    if store is None:
        return run_dtw(x, y, dist, config if config is not None else AlignConfig(), band=band)
    if store.band is None or not (np.array_equal(store.band.lo, band.lo) and np.array_equal(store.band.hi, band.hi)):
        raise ConfigurationError("store was not created for this band")
    cost, cells = forward_pass(x, y, dist, store)
    path = backtrack(store, x, y, dist)
    result = AlignmentResult(cost, path, len(x), len(y))
    result.stats.cells_computed = cells
    result.stats.peak_resident_cells = store.peak_resident_cells
    return result


def coarsen(trace: Trace) -> Trace:
    """Halve the resolution, keeping the first event of each pair."""
    return Trace(trace.events[::2], source=trace.source, functions=trace.functions)


def _fine(index: int, limit: int) -> tuple[int, int]:
    # coarse matrix index I covers fine events 2I-2, 2I-1, i.e. fine matrix rows 2I-1, 2I
    if index == 0:
        return 0, 0
    return min(2 * index - 1, limit), min(2 * index, limit)


def expand_window(path: WarpPath, radius: int, n: int, m: int) -> Band:
    """Project a half-resolution warp path to full resolution and widen it by ``radius``."""
    path.check((n + 1) // 2, (m + 1) // 2)
    proj_lo = np.full(n + 1, m, dtype=np.int64)
    proj_hi = np.zeros(n + 1, dtype=np.int64)
    for ci, cj in path.steps:
        r0, r1 = _fine(ci, n)
        c0, c1 = _fine(cj, m)
        proj_lo[r0:r1 + 1] = np.minimum(proj_lo[r0:r1 + 1], c0)
        proj_hi[r0:r1 + 1] = np.maximum(proj_hi[r0:r1 + 1], c1)
    # bounds of a monotone path are monotone, so the dilation window
    # minimum/maximum sits at its first/last row
    rows = np.arange(n + 1)
    lo = np.clip(proj_lo[np.clip(rows - radius, 0, n)] - radius, 0, m)
    hi = np.clip(proj_hi[np.clip(rows + radius, 0, n)] + radius, 0, m)
    return _close_band(lo, hi, m)


def fastdtw(x: Trace, y: Trace, dist: Distance, fconfig: FastDtwConfig | None = None,
            config: AlignConfig | None = None) -> AlignmentResult:
    """Coarsen, solve, project the path into a window, refine inside the window.

    ``stats.cells_computed`` sums all resolution levels.
    """
    fconfig = fconfig if fconfig is not None else FastDtwConfig()
    config = config if config is not None else AlignConfig()
    n, m = len(x), len(y)
    if min(n, m) <= fconfig.min_size + fconfig.radius:
        return run_dtw(x, y, dist, config)

    inner = replace(config, cost_only=False, keep_matrix=False)
    coarse = fastdtw(coarsen(x), coarsen(y), dist, fconfig, inner)
    band = expand_window(coarse.path, fconfig.radius, n, m)
    result = run_dtw(x, y, dist, config, band=band)
    stats = result.stats
    stats.cells_computed += coarse.stats.cells_computed
    stats.peak_resident_cells = max(stats.peak_resident_cells, coarse.stats.peak_resident_cells)
    stats.levels = coarse.stats.levels + 1
    return result
