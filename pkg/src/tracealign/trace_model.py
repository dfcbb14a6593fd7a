"""Trace and event types, the ``--print-bytecode`` parser and synthetic traces."""
from __future__ import annotations

import io
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ContractError, TraceParseError

__all__ = [
    "TraceEvent",
    "Trace",
    "TraceStats",
    "parse_v8_trace",
    "parse_events",
    "read_trace",
    "serialize_trace",
    "trace_stats",
    "synth_trace",
    "shuffle_blocks",
]


@dataclass(frozen=True)
class TraceEvent:
    operator: str
    operands: tuple[str, ...] = ()
    raw_bytes: tuple[int, ...] | None = None
    source_offset: tuple[int, str] | None = None
    address: str | None = None
    bytecode_offset: int | None = None
    function_name: str | None = None

    def __post_init__(self):
        if not self.operator:
            raise ValueError("TraceEvent.operator must be non-empty")

    @property
    def canonical(self) -> tuple[str, tuple[str, ...]]:
        """Run-independent identity of the instruction."""
        return (self.operator, self.operands)

    def __str__(self) -> str:
        return " ".join((self.operator,) + self.operands)


@dataclass(frozen=True)
class Trace:
    events: tuple[TraceEvent, ...]
    source: str = "synthetic"
    functions: tuple[str, ...] = ()

    @classmethod
    def from_operators(cls, operators: Iterable[str], source: str = "synthetic") -> Trace:
        """Build a trace of operand-less events, e.g. ``Trace.from_operators("abc")``."""
        return cls(tuple(TraceEvent(op) for op in operators), source=source)

    @property
    def length(self) -> int:
        return len(self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, index):
        return self.events[index]

    def __iter__(self):
        return iter(self.events)

    def operators(self) -> list[str]:
        return [e.operator for e in self.events]


@dataclass(frozen=True)
class TraceStats:
    event_count: int
    operator_histogram: dict[str, int] = field(default_factory=dict)
    function_count: int = 0

    def to_dict(self) -> dict:
        return {
            "event_count": self.event_count,
            "function_count": self.function_count,
            "operator_histogram": dict(sorted(self.operator_histogram.items())),
        }


# ---------------------------------------------------------------- parsing

_FUNCTION_HEADER = re.compile(r"^\s*\[generated bytecode for function:\s*([^\s\]]*)")
_INSTRUCTION = re.compile(
    r"""^\s*
    (?:(?P<src>\d+)\s+(?P<kind>[A-Za-z])>\s+)?     # 30 E>
    (?P<addr>0x[0-9a-fA-F]+)?\s*                    # 0x1373c709b6
    @\s*(?P<offset>\d+)\s+:\s+                      # @    0 :
    (?P<bytes>(?:[0-9a-fA-F]{2}\s+)*)               # a5 00 00 00
    (?P<op>[A-Z][A-Za-z0-9_.]*)                     # StackCheck
    (?P<rest>.*)$""",
    re.VERBOSE,
)
# (0x1373c70a12 @ 12) -> @12
_JUMP_TARGET = re.compile(r"\(\s*(?:0x[0-9a-fA-F]+\s*)?@\s*(\d+)\s*\)")


def _split_operands(rest: str) -> tuple[str, ...]:
    targets = _JUMP_TARGET.findall(rest)
    rest = _JUMP_TARGET.sub("", rest)
    operands = [re.sub(r"\s+", "", tok) for tok in rest.split(",")]
    operands = [tok for tok in operands if tok]
    operands.extend(f"@{t}" for t in targets)
    return tuple(operands)


def parse_v8_trace(stream: TextIO | str, source: str | None = None) -> Trace:
    """Parse the text printed by V8 with ``--print-bytecode``.

    Only instruction lines become events; parameter/register counts, constant
    pools and blank lines are skipped. Each function header sets the
    ``function_name`` of the instructions that follow it.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    if source is None:
        source = getattr(stream, "name", "<stream>")

    events: list[TraceEvent] = []
    functions: list[str] = []
    current_function: str | None = None
    for lineno, line in enumerate(stream, start=1):
        header = _FUNCTION_HEADER.match(line)
        if header:
            current_function = header.group(1)
            functions.append(current_function)
            continue
        if " : " not in line:
            continue
        match = _INSTRUCTION.match(line.rstrip("\r\n"))
        if match is None:
            raise TraceParseError(f"malformed bytecode line: {line.strip()!r}", lineno)
        src = match.group("src")
        events.append(
            TraceEvent(
                operator=match.group("op"),
                operands=_split_operands(match.group("rest")),
                raw_bytes=tuple(int(b, 16) for b in match.group("bytes").split()),
                source_offset=(int(src), match.group("kind")) if src is not None else None,
                address=match.group("addr"),
                bytecode_offset=int(match.group("offset")),
                function_name=current_function,
            )
        )
    return Trace(tuple(events), source=source, functions=tuple(functions))


def serialize_trace(trace: Trace) -> str:
    """Debug format: one ``Mnemonic op1 op2 ...`` line per event."""
    return "".join(f"{event}\n" for event in trace.events)


def parse_events(stream: TextIO | str, source: str | None = None) -> Trace:
    """Inverse of :func:`serialize_trace`. Blank lines and ``#`` comments are skipped."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    if source is None:
        source = getattr(stream, "name", "<stream>")
    events = []
    for line in stream:
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        events.append(TraceEvent(tokens[0], tuple(tokens[1:])))
    return Trace(tuple(events), source=source)


def _looks_like_v8(text: str) -> bool:
    return " : " in text or "[generated bytecode for function" in text


def read_trace(path, fmt: str = "auto") -> Trace:
    """Load a trace file in V8 dump format or the debug event-per-line format."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "auto":
        fmt = "v8" if _looks_like_v8(text) else "events"
    if fmt == "v8":
        return parse_v8_trace(text, source=str(path))
    if fmt == "events":
        return parse_events(text, source=str(path))
    raise ValueError(f"unknown trace format {fmt!r}")


def trace_stats(trace: Trace) -> TraceStats:
    histogram = Counter(e.operator for e in trace.events)
    return TraceStats(
        event_count=trace.length,
        operator_histogram=dict(histogram),
        function_count=len(trace.functions),
    )


# ---------------------------------------------------------------- synthetic traces

def synth_trace(length: int, alphabet_size: int, seed: int) -> Trace:
    """Random operand-less trace over the operators ``op0 .. op{alphabet_size-1}``."""
    if length < 0:
        raise ValueError("length must be >= 0")
    if alphabet_size < 1:
        raise ValueError("alphabet_size must be >= 1")
    rng = np.random.default_rng(seed)
    symbols = [TraceEvent(f"op{k}") for k in range(alphabet_size)]
    picks = rng.integers(0, alphabet_size, size=length)
    return Trace(tuple(symbols[k] for k in picks), source="synthetic")


def shuffle_blocks(trace: Trace, block_boundaries: Sequence[int], seed: int) -> Trace:
    """Cut ``trace`` at ``block_boundaries`` and return the blocks in a random order.

    Mimics scripts being compiled in a different order across two loads of
    the same page.
    """
    bounds = list(block_boundaries)
    n = trace.length
    if any(b < 0 or b > n for b in bounds):
        raise ContractError(f"block boundaries must lie in [0, {n}]: {bounds}")
    if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
        raise ContractError(f"block boundaries must be strictly increasing: {bounds}")

    cuts = sorted({0, n, *bounds})
    blocks = [trace.events[a:b] for a, b in zip(cuts, cuts[1:]) if b > a]
    order = np.random.default_rng(seed).permutation(len(blocks))
    events = tuple(e for k in order for e in blocks[k])
    return Trace(events, source=trace.source, functions=trace.functions)
