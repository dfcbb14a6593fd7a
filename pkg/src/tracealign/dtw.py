"""Exact DTW over a row store: forward pass, backtracking, aligned traces.

The cost matrix follows the global-alignment recurrence::

    D[0, j] = gap * j,   D[i, 0] = gap * i
    D[i, j] = min(D[i-1, j] + gap, D[i, j-1] + gap, D[i-1, j-1] + d(x_i, y_j))

Rows run over the first trace. A row is computed with numpy in one shot:
the up/diagonal candidates are elementwise, and the left-to-right gap chain
``D[i, j] = min_k (best[k] + gap * (j - k))`` is a running minimum of
``best[k] - gap * k``.
"""
from __future__ import annotations

import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .band import Band
from .distance import Distance, DistanceSpec, make_distance
from .errors import CellOverflowError, ConfigurationError, ContractError, CorruptionError
from .store import DEFAULT_MEM_BUDGET, Backing, CostMatrixStore, RollingStore, choose_backing, create_store
from .trace_model import Trace, TraceEvent

__all__ = [
    "GAP",
    "WarpPath",
    "AlignedTracePair",
    "AlignmentStats",
    "AlignmentResult",
    "AlignConfig",
    "dtw_forward",
    "forward_pass",
    "backtrack",
    "replay_cost",
    "apply_path",
    "resolve_cell_width",
    "run_dtw",
    "align",
    "WORKDIR_ENV",
]

GAP = None
INF = np.int64(1 << 62)
WORKDIR_ENV = "TRACEALIGN_WORKDIR"
MODES = ("exact", "banded", "fastdtw")
_MOVES = {(1, 1), (1, 0), (0, 1)}


@dataclass(frozen=True)
class WarpPath:
    steps: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def check(self, n: int, m: int) -> None:
        """Raise ContractError unless this is a monotone path from (0, 0) to (n, m)."""
        steps = self.steps
        if not steps or steps[0] != (0, 0) or steps[-1] != (n, m):
            raise ContractError(f"warp path must run from (0, 0) to ({n}, {m})")
        for (i0, j0), (i1, j1) in zip(steps, steps[1:]):
            if (i1 - i0, j1 - j0) not in _MOVES:
                raise ContractError(f"illegal warp path step ({i0}, {j0}) -> ({i1}, {j1})")

    def to_csv(self) -> str:
        return "i,j\n" + "".join(f"{i},{j}\n" for i, j in self.steps)


@dataclass(frozen=True)
class AlignedTracePair:
    """Two equal-length columns; ``None`` marks a gap."""

    left: tuple[TraceEvent | None, ...]
    right: tuple[TraceEvent | None, ...]

    def __len__(self) -> int:
        return len(self.left)

    def gaps(self) -> tuple[int, int]:
        return self.left.count(GAP), self.right.count(GAP)

    def to_text(self) -> str:
        """Side-by-side listing, one aligned column per line, gaps as ``-``."""
        left = ["-" if e is GAP else str(e) for e in self.left]
        right = ["-" if e is GAP else str(e) for e in self.right]
        width = max((len(s) for s in left), default=1)
        return "".join(f"{a:<{width}}  {b}\n" for a, b in zip(left, right))


@dataclass
class AlignmentStats:
    cells_computed: int = 0
    rows_spilled: int = 0
    backtrack_reads: int = 0
    wall_time: float = 0.0
    peak_resident_cells: int = 0
    spill_bytes: int = 0
    backing: str = "memory"
    cell_width: int = 4
    levels: int = 1


@dataclass
class AlignmentResult:
    cost: int
    path: WarpPath | None
    n: int
    m: int
    stats: AlignmentStats = field(default_factory=AlignmentStats)
    aligned: AlignedTracePair | None = None

    @property
    def difficulty(self) -> int:
        return self.n * self.m

    def to_dict(self) -> dict:
        return {
            "cost": self.cost,
            "difficulty": self.difficulty,
            "n": self.n,
            "m": self.m,
            "path_len": len(self.path) if self.path is not None else None,
            "stats": vars(self.stats).copy(),
        }


@dataclass
class AlignConfig:
    distance: DistanceSpec = field(default_factory=DistanceSpec)
    custom_distance: Callable[[TraceEvent, TraceEvent], int] | None = None
    mode: str = "exact"
    band_width: int | None = None
    radius: int = 1
    min_size: int = 16
    backing: str = "auto"
    cell_width: int | None = None
    workdir: str | os.PathLike | None = None
    mem_budget: int | None = DEFAULT_MEM_BUDGET
    disk_budget: int | None = None
    keep_matrix: bool = False
    cost_only: bool = False

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "banded" and self.band_width is None:
            raise ConfigurationError("banded mode requires a band width")
        if self.band_width is not None and self.mode != "banded":
            raise ConfigurationError("a band width only applies to banded mode")
        if self.band_width is not None and self.band_width < 0:
            raise ConfigurationError("band width must be >= 0")
        if self.radius < 0 or self.min_size < 0:
            raise ConfigurationError("radius and min_size must be >= 0")
        if self.backing not in ("auto", "memory", "disk"):
            raise ConfigurationError(f"backing must be auto, memory or disk, got {self.backing!r}")
        if self.cell_width not in (None, 4, 8):
            raise ConfigurationError("cell width must be 4 or 8")

    def spill_dir(self) -> str:
        if self.workdir is not None:
            return os.fspath(self.workdir)
        return os.environ.get(WORKDIR_ENV) or tempfile.gettempdir()


# ---------------------------------------------------------------- forward pass

class _RowDistances:
    """Distances ``d(x_i, y_j)`` for a row segment; column 0 is a dummy."""

    def __init__(self, dist: Distance, x: Trace, y: Trace, swapped: bool = False):
        self.dist = dist
        self.x, self.y = x, y
        self.swapped = swapped
        codes = dist.encode(x, y)
        if codes is not None:
            self.xcodes = codes[0]
            self.ycodes = np.concatenate(([-1], codes[1]))
            self._match = np.int64(dist.spec.match_cost)
            self._mismatch = np.int64(dist.spec.mismatch_cost)
        else:
            self.xcodes = self.ycodes = None

    def row(self, i: int, lo: int, hi: int) -> np.ndarray:
        if self.xcodes is not None:
            hit = self.ycodes[lo:hi + 1] == self.xcodes[i - 1]
            return np.where(hit, self._match, self._mismatch)
        xi = self.x[i - 1]
        out = np.zeros(hi - lo + 1, dtype=np.int64)
        for j in range(max(lo, 1), hi + 1):
            yj = self.y[j - 1]
            out[j - lo] = self.dist(yj, xi) if self.swapped else self.dist(xi, yj)
        return out


def _next_row(prev_lo: int, prev: np.ndarray, lo: int, hi: int, drow: np.ndarray, gap: int,
              ramp: np.ndarray) -> np.ndarray:
    """Row ``i`` over columns ``[lo, hi]`` from row ``i-1`` (``prev`` starts at column ``prev_lo``).

    ``ramp`` is ``gap * arange(k)`` for some ``k >= hi - lo + 1``.
    """
    width = hi - lo + 1
    prev_hi = prev_lo + len(prev) - 1
    if prev_lo == lo == 0 and prev_hi == hi:
        up = prev
        diag = np.empty(width, dtype=np.int64)
        diag[0] = INF
        diag[1:] = prev[:-1]
    else:
        up = np.full(width, INF, dtype=np.int64)
        a, b = max(lo, prev_lo), min(hi, prev_hi)
        if a <= b:
            up[a - lo:b - lo + 1] = prev[a - prev_lo:b - prev_lo + 1]
        diag = np.full(width, INF, dtype=np.int64)
        a, b = max(lo, prev_lo + 1, 1), min(hi, prev_hi + 1)
        if a <= b:
            diag[a - lo:b - lo + 1] = prev[a - 1 - prev_lo:b - prev_lo]
    best = np.minimum(up + gap, diag + drow)
    ramp = ramp[:width]
    best -= ramp
    cur = np.minimum.accumulate(best)
    cur += ramp
    return np.minimum(cur, INF, out=cur)


def forward_pass(x: Trace, y: Trace, dist: Distance, store: CostMatrixStore, swapped: bool = False) -> tuple[int, int]:
    """Fill ``store`` row by row; return ``(D[N, M], cells computed)``."""
    n, m = len(x), len(y)
    if store.shape != (n + 1, m + 1):
        raise ContractError(f"store shape {store.shape} does not match traces ({n + 1}, {m + 1})")
    if store.rows_filled:
        raise ContractError("store already holds rows")
    gap = dist.gap
    rows = _RowDistances(dist, x, y, swapped)

    ramp = gap * np.arange(m + 1, dtype=np.int64)
    lo, hi = store.interval(0)
    cur = ramp[lo:hi + 1].copy()
    store.write_row(0, cur)
    cells = len(cur)
    for i in range(1, n + 1):
        prev_lo, prev = store.read_row(i - 1)
        lo, hi = store.interval(i)
        # stored cells are never the out-of-band sentinel: every in-band cell is reachable
        cur = _next_row(prev_lo, prev.astype(np.int64), lo, hi, rows.row(i, lo, hi), gap, ramp)
        if cur[-1] >= INF or cur[0] >= INF:
            raise ContractError(f"row {i} of the band is unreachable")
        store.write_row(i, cur)
        cells += len(cur)
    store.flush()
    return int(cur[-1]), cells


def dtw_forward(x: Trace, y: Trace, dist: Distance, store: CostMatrixStore) -> int:
    """Run the forward pass and return the alignment cost ``D[N, M]``."""
    return forward_pass(x, y, dist, store)[0]


# ---------------------------------------------------------------- backtracking

def backtrack(store: CostMatrixStore, x: Trace, y: Trace, dist: Distance) -> WarpPath:
    """Walk back from ``(N, M)`` to ``(0, 0)``.

    Every step is re-derived from the recurrence: the first neighbour (diagonal,
    then up, then left) whose value plus the step cost reproduces the current
    cell is taken. Rows are visited in decreasing order, so each row is fetched
    from the store at most once.
    """
    n, m = len(x), len(y)
    if store.shape != (n + 1, m + 1):
        raise ContractError(f"store shape {store.shape} does not match traces ({n + 1}, {m + 1})")
    if store.rows_filled != store.rows:
        raise ContractError("forward pass has not completed on this store")
    gap, inf = dist.gap, store.inf
    codes = dist.encode(x, y)
    if codes is not None:
        xc, yc = codes[0].tolist(), codes[1].tolist()
        match, mismatch = dist.spec.match_cost, dist.spec.mismatch_cost

        def d(i, j):
            return match if xc[i - 1] == yc[j - 1] else mismatch
    else:
        def d(i, j):
            return dist(x[i - 1], y[j - 1])

    def cell(row, j):
        lo, cells = row
        k = j - lo
        return int(cells[k]) if 0 <= k < len(cells) else inf

    i, j = n, m
    here = store.read_row(i)
    above = store.read_row(i - 1) if i > 0 else None
    cur = cell(here, j)
    reads = 1
    steps = [(i, j)]
    while i > 0 or j > 0:
        if i > 0:
            reads += 1
            if j > 0:
                v = cell(above, j - 1)
                if v != inf and v + d(i, j) == cur:
                    i, j, cur = i - 1, j - 1, v
                    steps.append((i, j))
                    here, above = above, (store.read_row(i - 1) if i > 0 else None)
                    continue
                reads += 1
            v = cell(above, j)
            if v != inf and v + gap == cur:
                i, cur = i - 1, v
                steps.append((i, j))
                here, above = above, (store.read_row(i - 1) if i > 0 else None)
                continue
        if j > 0:
            reads += 1
            v = cell(here, j - 1)
            if v != inf and v + gap == cur:
                j, cur = j - 1, v
                steps.append((i, j))
                continue
        raise CorruptionError(f"cell ({i}, {j}) = {cur} is not explained by any neighbour")
    store.counters.cells_read += reads
    if cur != 0:
        raise CorruptionError(f"cell (0, 0) holds {cur}, expected 0")
    steps.reverse()
    return WarpPath(tuple(steps))


def replay_cost(path: WarpPath | Sequence[tuple[int, int]], x: Trace, y: Trace, dist) -> int:
    """Sum of step costs along ``path``; ``dist`` may be a Distance or any callable with ``.gap``."""
    steps = path.steps if isinstance(path, WarpPath) else tuple(path)
    WarpPath(steps).check(len(x), len(y))
    gap = dist.gap
    total = 0
    for (i0, j0), (i1, j1) in zip(steps, steps[1:]):
        if i1 > i0 and j1 > j0:
            total += dist(x[i1 - 1], y[j1 - 1])
        else:
            total += gap
    return total


def apply_path(x: Trace, y: Trace, path: WarpPath) -> AlignedTracePair:
    path.check(len(x), len(y))
    left, right = [], []
    for (i0, j0), (i1, j1) in zip(path.steps, path.steps[1:]):
        left.append(x[i1 - 1] if i1 > i0 else GAP)
        right.append(y[j1 - 1] if j1 > j0 else GAP)
    return AlignedTracePair(tuple(left), tuple(right))


# ---------------------------------------------------------------- orchestration

def resolve_cell_width(n: int, m: int, spec: DistanceSpec, requested: int | None = None) -> int:
    needs_wide = (max(n, m) + 1) * max(spec.gap_cost, spec.mismatch_cost) >= 2**32
    if requested is None:
        return 8 if needs_wide else 4
    if requested == 4 and needs_wide:
        raise CellOverflowError(
            f"costs for traces of length {n} and {m} may exceed 4-byte cells; use cell width 8"
        )
    return requested


def _make_store(n: int, m: int, config: AlignConfig, cell_width: int, band: Band | None) -> CostMatrixStore:
    if config.cost_only:
        return RollingStore(n, m, cell_width, band)
    backing = config.backing
    if backing == "auto":
        backing = choose_backing(n, m, cell_width, config.mem_budget if config.mem_budget is not None else float("inf"), band)
    return create_store(
        n, m, Backing(backing), cell_width, config.spill_dir(), band=band,
        mem_budget=config.mem_budget, disk_budget=config.disk_budget, keep=config.keep_matrix,
    )


def run_dtw(x: Trace, y: Trace, dist: Distance, config: AlignConfig, band: Band | None = None) -> AlignmentResult:
    """One DTW run (full matrix or restricted to ``band``) with its own store."""
    n0, m0 = len(x), len(y)
    if band is not None:
        band.validate(n0, m0)
    cell_width = resolve_cell_width(n0, m0, dist.spec, config.cell_width)
    swapped = config.cost_only and band is None and n0 < m0
    if swapped:
        # rows along the longer trace: the two resident rows span the shorter one
        x, y = y, x
    n, m = len(x), len(y)

    t0 = time.perf_counter()
    store = _make_store(n, m, config, cell_width, band)
    try:
        cost, cells = forward_pass(x, y, dist, store, swapped)
        path = None
        reads_before = store.counters.rows_read
        if not config.cost_only:
            path = backtrack(store, x, y, dist)
        stats = AlignmentStats(
            cells_computed=cells,
            rows_spilled=store.counters.rows_written if store.backing is Backing.DISK and not config.cost_only else 0,
            backtrack_reads=store.counters.rows_read - reads_before,
            peak_resident_cells=store.peak_resident_cells,
            spill_bytes=store.spill_bytes,
            backing="rolling" if config.cost_only else store.backing.value,
            cell_width=cell_width,
        )
    finally:
        store.close()
    stats.wall_time = time.perf_counter() - t0
    return AlignmentResult(cost, path, n0, m0, stats)


def align(x: Trace, y: Trace, config: AlignConfig | None = None, *, with_aligned: bool = False) -> AlignmentResult:
    """Align two traces according to ``config`` (exact, banded or FastDTW)."""
    from . import approx

    config = config if config is not None else AlignConfig()
    config.validate()
    dist = make_distance(config.distance, config.custom_distance)
    t0 = time.perf_counter()
    if config.mode == "exact":
        result = run_dtw(x, y, dist, config)
    elif config.mode == "banded":
        band = approx.sakoe_band(len(x), len(y), config.band_width)
        result = run_dtw(x, y, dist, config, band=band)
    else:
        fconfig = approx.FastDtwConfig(radius=config.radius, min_size=config.min_size)
        result = approx.fastdtw(x, y, dist, fconfig, config)
    result.stats.wall_time = time.perf_counter() - t0
    if with_aligned and result.path is not None:
        result.aligned = apply_path(x, y, result.path)
    return result
