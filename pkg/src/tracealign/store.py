"""Row-oriented storage for the DTW cost matrix.

Three stores share one interface:

* ``MemoryStore`` keeps every row in RAM.
* ``DiskStore`` streams rows to a spill file and keeps at most two rows
  resident, both while the matrix is filled and while it is read back for
  backtracking.
* ``RollingStore`` keeps only the previous row and never spills; it serves
  cost-only runs.

Spill-file layout (little-endian)::

    header   magic "STRC" | version u32 | rows u64 | cols u32 | cell_width u32
    version 1 (dense)   rows x cols cells, row-major
    version 2 (banded)  per row: lo u32 | hi u32 | (hi - lo + 1) cells

Cells are unsigned integers of ``cell_width`` bytes.
"""
from __future__ import annotations

import enum
import os
import shutil
import struct
import tempfile
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .band import Band
from .errors import CapacityError, CellOverflowError, ConfigurationError, ContractError, CorruptionError, QuotaError

__all__ = [
    "Backing",
    "IOCounters",
    "CostMatrixStore",
    "MemoryStore",
    "DiskStore",
    "RollingStore",
    "SpillHeader",
    "create_store",
    "choose_backing",
    "matrix_bytes",
    "read_spill_header",
    "iter_spill_rows",
    "HEADER",
    "MAGIC",
    "DENSE_LAYOUT",
    "BANDED_LAYOUT",
    "DEFAULT_MEM_BUDGET",
]

MAGIC = b"STRC"
DENSE_LAYOUT = 1
BANDED_LAYOUT = 2
HEADER = struct.Struct("<4sIQII")
ROW_PREFIX = struct.Struct("<II")
DEFAULT_MEM_BUDGET = 512 * 2**20
_WRITE_BUFFER = 1 << 20


class Backing(str, enum.Enum):
    MEMORY = "memory"
    DISK = "disk"


@dataclass
class IOCounters:
    rows_written: int = 0
    rows_read: int = 0
    cells_read: int = 0


def _dtype_for(cell_width: int) -> np.dtype:
    if cell_width == 4:
        return np.dtype("<u4")
    if cell_width == 8:
        return np.dtype("<u8")
    raise ConfigurationError(f"cell width must be 4 or 8 bytes, got {cell_width}")


def matrix_bytes(n: int, m: int, cell_width: int, band: Band | None = None) -> int:
    """Bytes needed for the cells alone (no header, no row prefixes)."""
    cells = band.cell_count() if band is not None else (n + 1) * (m + 1)
    return cells * cell_width


def choose_backing(n: int, m: int, cell_width: int, mem_budget: int = DEFAULT_MEM_BUDGET,
                   band: Band | None = None) -> Backing:
    if matrix_bytes(n, m, cell_width, band) <= mem_budget:
        return Backing.MEMORY
    return Backing.DISK


class CostMatrixStore:
    """Base class: ordered row writes, cached row reads, instrumentation."""

    backing: Backing

    def __init__(self, n: int, m: int, cell_width: int = 4, band: Band | None = None):
        if n < 0 or m < 0:
            raise ContractError(f"matrix dimensions must be non-negative, got n={n}, m={m}")
        self.dtype = _dtype_for(cell_width)
        if band is not None:
            band.validate(n, m)
        self.n, self.m = n, m
        self.rows, self.cols = n + 1, m + 1
        self.cell_width = cell_width
        self.band = band
        # the largest representable value is reserved for "outside the band"
        self.inf = int(np.iinfo(self.dtype).max)
        self.counters = IOCounters()
        self.rows_filled = 0
        self.peak_resident_cells = 0
        self._cache: OrderedDict[int, tuple[int, np.ndarray]] = OrderedDict()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def banded(self) -> bool:
        return self.band is not None

    def interval(self, i: int) -> tuple[int, int]:
        if self.band is None:
            return 0, self.m
        return int(self.band.lo[i]), int(self.band.hi[i])

    @property
    def resident_cells(self) -> int:
        return sum(len(arr) for _, arr in self._cache.values())

    def _note_resident(self, extra: int = 0) -> None:
        self.peak_resident_cells = max(self.peak_resident_cells, self.resident_cells + extra)

    # -- writing

    def write_row(self, i: int, values) -> None:
        """Append row ``i``; ``values`` covers the row's band interval (or the full row)."""
        if i != self.rows_filled:
            raise ContractError(f"rows must be written in order: expected row {self.rows_filled}, got {i}")
        lo, hi = self.interval(i)
        arr = np.asarray(values)
        if arr.shape != (hi - lo + 1,):
            raise ContractError(f"row {i} must hold {hi - lo + 1} cells, got shape {arr.shape}")
        if arr.size:
            if arr.min() < 0:
                raise ContractError(f"row {i} holds a negative cost")
            if int(arr.max()) >= self.inf:
                raise CellOverflowError(
                    f"cost {int(arr.max())} in row {i} does not fit a {self.cell_width}-byte cell; "
                    "retry with cell width 8"
                )
        self._store_row(i, lo, arr.astype(self.dtype))
        self.rows_filled += 1
        self.counters.rows_written += 1

    def _store_row(self, i: int, lo: int, cells: np.ndarray) -> None:
        raise NotImplementedError

    def flush(self) -> None:
        pass

    # -- reading

    def read_row(self, i: int) -> tuple[int, np.ndarray]:
        """Return ``(lo, cells)`` for row ``i`` through a two-row cache."""
        if not 0 <= i < self.rows_filled:
            raise ContractError(f"row {i} has not been written")
        if i in self._cache:
            self._cache.move_to_end(i)
            return self._cache[i]
        lo, cells = self._fetch_row(i)
        self.counters.rows_read += 1
        self._cache[i] = (lo, cells)
        while len(self._cache) > 2:
            self._cache.popitem(last=False)
        self._note_resident()
        return lo, cells

    def _fetch_row(self, i: int) -> tuple[int, np.ndarray]:
        raise NotImplementedError

    def read_cell(self, i: int, j: int) -> int:
        if not 0 <= j < self.cols:
            raise ContractError(f"column {j} outside [0, {self.m}]")
        lo, cells = self.read_row(i)
        self.counters.cells_read += 1
        k = j - lo
        if 0 <= k < len(cells):
            return int(cells[k])
        return self.inf

    def to_array(self) -> np.ndarray:
        """Dense copy of the matrix (out-of-band cells hold ``inf``); for small matrices only."""
        out = np.full(self.shape, self.inf, dtype=self.dtype)
        for i in range(self.rows_filled):
            lo, cells = self.read_row(i)
            out[i, lo:lo + len(cells)] = cells
        return out

    # -- lifetime

    @property
    def spill_bytes(self) -> int:
        return 0

    def close(self) -> None:
        self._cache.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(shape={self.shape}, cell_width={self.cell_width}, banded={self.banded})"


class MemoryStore(CostMatrixStore):
    backing = Backing.MEMORY

    def __init__(self, n, m, cell_width=4, band=None):
        super().__init__(n, m, cell_width, band)
        self._rows: list[tuple[int, np.ndarray]] = []
        self._written_cells = 0

    @property
    def resident_cells(self) -> int:
        return self._written_cells

    def _store_row(self, i, lo, cells):
        self._rows.append((lo, cells))
        self._written_cells += len(cells)
        self._note_resident()

    def _fetch_row(self, i):
        return self._rows[i]

    def close(self):
        super().close()
        self._rows = []


class RollingStore(CostMatrixStore):
    """Keeps only the last written row; the row being computed is the second."""

    backing = Backing.MEMORY

    def _store_row(self, i, lo, cells):
        self._note_resident(len(cells))
        self._cache.clear()
        self._cache[i] = (lo, cells)

    def _fetch_row(self, i):
        raise ContractError(f"row {i} was evicted; a rolling store keeps only the last row")


class DiskStore(CostMatrixStore):
    """Spills every row to a file; at most two rows stay resident."""

    backing = Backing.DISK

    def __init__(self, n, m, cell_width=4, band=None, spill_dir=None, disk_budget=None, keep=False):
        super().__init__(n, m, cell_width, band)
        if band is None:
            self.version = DENSE_LAYOUT
            row_bytes = np.full(self.rows, self.cols * cell_width, dtype=np.int64)
        else:
            self.version = BANDED_LAYOUT
            row_bytes = ROW_PREFIX.size + band.widths() * cell_width
        self._offsets = HEADER.size + np.concatenate(([0], np.cumsum(row_bytes)[:-1]))
        self.expected_file_size = HEADER.size + int(row_bytes.sum())

        spill_dir = os.fspath(spill_dir) if spill_dir is not None else tempfile.gettempdir()
        if disk_budget is not None and self.expected_file_size > disk_budget:
            raise QuotaError(
                f"spill file needs {self.expected_file_size} bytes, over the disk budget of "
                f"{disk_budget}; raise --disk-budget or use an approximate mode"
            )
        if disk_budget is None and os.path.isdir(spill_dir):
            free = shutil.disk_usage(spill_dir).free
            if self.expected_file_size > free:
                raise QuotaError(
                    f"spill file needs {self.expected_file_size} bytes but only {free} are free in {spill_dir}"
                )
        fd, self.spill_path = tempfile.mkstemp(prefix="costmatrix-", suffix=".strc", dir=spill_dir)
        self.keep = keep
        self._file = os.fdopen(fd, "w+b", buffering=_WRITE_BUFFER)
        self._file.write(HEADER.pack(MAGIC, self.version, self.rows, self.cols, cell_width))
        self._file.flush()
        self._dirty = False

    def _store_row(self, i, lo, cells):
        # resident while writing: the previous row plus the incoming one
        self._note_resident(len(cells))
        if self.version == BANDED_LAYOUT:
            self._file.write(ROW_PREFIX.pack(lo, lo + len(cells) - 1))
        self._file.write(cells.tobytes())
        self._dirty = True
        self._cache.clear()
        self._cache[i] = (lo, cells)

    def flush(self):
        if self._dirty:
            self._file.flush()
            self._dirty = False

    def _fetch_row(self, i):
        self.flush()
        lo, hi = self.interval(i)
        fd = self._file.fileno()
        offset = int(self._offsets[i])
        if self.version == BANDED_LAYOUT:
            prefix = os.pread(fd, ROW_PREFIX.size, offset)
            if len(prefix) != ROW_PREFIX.size or ROW_PREFIX.unpack(prefix) != (lo, hi):
                raise CorruptionError(f"spill file {self.spill_path}: bad interval prefix for row {i}")
            offset += ROW_PREFIX.size
        nbytes = (hi - lo + 1) * self.cell_width
        # unbuffered positional read: a buffered read would pull in a whole
        # buffer's worth of rows we are about to walk away from
        buf = os.pread(fd, nbytes, offset)
        if len(buf) != nbytes:
            raise CorruptionError(f"spill file {self.spill_path}: short read for row {i}")
        return lo, np.frombuffer(buf, dtype=self.dtype)

    @property
    def spill_bytes(self) -> int:
        """Bytes of the spill file written so far (header included)."""
        if self.rows_filled == self.rows:
            return self.expected_file_size
        return int(self._offsets[self.rows_filled])

    def close(self):
        super().close()
        if self._file is not None:
            self._file.close()
            self._file = None
            if not self.keep and os.path.exists(self.spill_path):
                os.remove(self.spill_path)


def create_store(n: int, m: int, backing: Backing | str = Backing.MEMORY, cell_width: int = 4,
                 spill_dir=None, *, band: Band | None = None, mem_budget: int | None = DEFAULT_MEM_BUDGET,
                 disk_budget: int | None = None, keep: bool = False) -> CostMatrixStore:
    backing = Backing(backing)
    _dtype_for(cell_width)
    if backing is Backing.MEMORY:
        need = matrix_bytes(n, m, cell_width, band)
        if mem_budget is not None and need > mem_budget:
            raise CapacityError(
                f"in-memory cost matrix needs {need} bytes, over the memory budget of "
                f"{mem_budget}; use the disk backing"
            )
        return MemoryStore(n, m, cell_width, band)
    return DiskStore(n, m, cell_width, band, spill_dir=spill_dir, disk_budget=disk_budget, keep=keep)


# ---------------------------------------------------------------- spill file readers

@dataclass(frozen=True)
class SpillHeader:
    version: int
    rows: int
    cols: int
    cell_width: int


def read_spill_header(path) -> SpillHeader:
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    if len(raw) != HEADER.size:
        raise CorruptionError(f"{path}: truncated header")
    magic, version, rows, cols, width = HEADER.unpack(raw)
    if magic != MAGIC:
        raise CorruptionError(f"{path}: bad magic {magic!r}")
    if version not in (DENSE_LAYOUT, BANDED_LAYOUT):
        raise CorruptionError(f"{path}: unknown layout version {version}")
    return SpillHeader(version, rows, cols, width)


def iter_spill_rows(path) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(lo, cells)`` for every row of a spill file, in order."""
    header = read_spill_header(path)
    dtype = _dtype_for(header.cell_width)
    with open(path, "rb") as fh:
        fh.seek(HEADER.size)
        for i in range(header.rows):
            if header.version == DENSE_LAYOUT:
                lo, hi = 0, header.cols - 1
            else:
                prefix = fh.read(ROW_PREFIX.size)
                if len(prefix) != ROW_PREFIX.size:
                    raise CorruptionError(f"{path}: truncated at row {i}")
                lo, hi = ROW_PREFIX.unpack(prefix)
            nbytes = (hi - lo + 1) * header.cell_width
            buf = fh.read(nbytes)
            if len(buf) != nbytes:
                raise CorruptionError(f"{path}: truncated at row {i}")
            yield lo, np.frombuffer(buf, dtype=dtype)
