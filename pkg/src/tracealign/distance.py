"""Event distances and the gap/mismatch/match cost scheme."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np

from .errors import ConfigurationError
from .trace_model import Trace, TraceEvent

__all__ = ["DistanceMode", "DistanceSpec", "Distance", "d_sen", "d_inst", "make_distance"]


class DistanceMode(str, enum.Enum):
    SEN = "sen"
    INST = "inst"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DistanceSpec:
    mode: DistanceMode = DistanceMode.SEN
    mismatch_cost: int = 5
    match_cost: int = 0
    gap_cost: int = 1
    allow_gap_geq_mismatch: bool = False

    def validate(self) -> None:
        for name in ("mismatch_cost", "match_cost", "gap_cost"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 0:
                raise ConfigurationError(f"{name} must be a non-negative integer, got {value!r}")
        if self.gap_cost >= self.mismatch_cost and not self.allow_gap_geq_mismatch:
            raise ConfigurationError(
                f"gap cost ({self.gap_cost}) must be below the mismatch cost "
                f"({self.mismatch_cost}); pass --allow-gap-geq-mismatch to override"
            )
        if self.match_cost > self.gap_cost:
            raise ConfigurationError(
                f"match cost ({self.match_cost}) must not exceed the gap cost ({self.gap_cost})"
            )


def d_sen(a: TraceEvent, b: TraceEvent, spec: DistanceSpec) -> int:
    """``match_cost`` iff both events are the same instruction (operator and operands)."""
    return spec.match_cost if a.canonical == b.canonical else spec.mismatch_cost


def d_inst(a: TraceEvent, b: TraceEvent, spec: DistanceSpec) -> int:
    """``match_cost`` iff both events share the operator."""
    return spec.match_cost if a.operator == b.operator else spec.mismatch_cost


def _sen_key(e: TraceEvent) -> Hashable:
    return e.canonical


def _inst_key(e: TraceEvent) -> Hashable:
    return e.operator


class Distance:
    """A validated event-pair distance bound to its cost spec.

    SEN and INST distances are "keyed": two events are at distance
    ``match_cost`` iff their keys are equal. The DTW engine uses the keys to
    compute whole rows of distances with numpy. CUSTOM distances are called
    pair by pair.
    """

    def __init__(self, spec: DistanceSpec, custom: Callable[[TraceEvent, TraceEvent], int] | None = None):
        spec.validate()
        if spec.mode is DistanceMode.CUSTOM:
            if custom is None:
                raise ConfigurationError("CUSTOM distance mode requires a distance function")
            self.key = None
        elif spec.mode is DistanceMode.SEN:
            self.key = _sen_key
        elif spec.mode is DistanceMode.INST:
            self.key = _inst_key
        else:
            raise ConfigurationError(f"unknown distance mode {spec.mode!r}")
        self.spec = spec
        self._custom = custom

    @property
    def gap(self) -> int:
        return self.spec.gap_cost

    def __call__(self, a: TraceEvent, b: TraceEvent) -> int:
        if self.key is not None:
            return self.spec.match_cost if self.key(a) == self.key(b) else self.spec.mismatch_cost
        value = self._custom(a, b)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not (
            0 <= value <= self.spec.mismatch_cost
        ):
            raise ConfigurationError(
                f"custom distance returned {value!r}; values must be integers in "
                f"[0, {self.spec.mismatch_cost}]"
            )
        return int(value)

    def encode(self, *traces: Trace) -> list[np.ndarray] | None:
        """Map each trace to an int array of shared key codes (None for CUSTOM)."""
        if self.key is None:
            return None
        vocab: dict[Hashable, int] = {}
        out = []
        for trace in traces:
            codes = [vocab.setdefault(self.key(e), len(vocab)) for e in trace.events]
            out.append(np.asarray(codes, dtype=np.int64))
        return out

    def __repr__(self) -> str:
        return f"Distance({self.spec!r})"


def make_distance(spec: DistanceSpec | None = None, custom=None) -> Distance:
    return Distance(spec if spec is not None else DistanceSpec(), custom)
