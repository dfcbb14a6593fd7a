"""Global alignment of large bytecode traces with a disk-backed DTW cost matrix."""
from .approx import FastDtwConfig, coarsen, dtw_banded, expand_window, fastdtw, sakoe_band
from .band import Band
from .distance import Distance, DistanceMode, DistanceSpec, d_inst, d_sen, make_distance
from .dtw import (
    GAP,
    AlignConfig,
    AlignedTracePair,
    AlignmentResult,
    AlignmentStats,
    WarpPath,
    align,
    apply_path,
    backtrack,
    dtw_forward,
    replay_cost,
)
from .errors import (
    CapacityError,
    CellOverflowError,
    ConfigurationError,
    ContractError,
    CorruptionError,
    QuotaError,
    TraceAlignError,
    TraceParseError,
)
from .store import Backing, CostMatrixStore, create_store
from .trace_model import (
    Trace,
    TraceEvent,
    TraceStats,
    parse_events,
    parse_v8_trace,
    read_trace,
    serialize_trace,
    shuffle_blocks,
    synth_trace,
    trace_stats,
)

__version__ = "0.1.0"
