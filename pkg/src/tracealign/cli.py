"""Command-line interface: ``parse``, ``align``, ``batch`` and ``bench``.

Exit codes: 0 success, 1 some batch pairs failed, 2 parse error,
3 resource error (disk quota, memory budget, cell overflow, I/O),
4 configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .distance import DistanceMode, DistanceSpec
from .dtw import AlignConfig, align
from .errors import ConfigurationError, ResourceError, TraceAlignError, TraceParseError
from .store import DEFAULT_MEM_BUDGET
from .trace_model import read_trace, serialize_trace, synth_trace, trace_stats

SCHEMA = 1
EXIT_OK, EXIT_BATCH_FAILED, EXIT_PARSE, EXIT_RESOURCE, EXIT_CONFIG = 0, 1, 2, 3, 4

_SIZE = re.compile(r"^\s*(\d+)\s*([kKmMgGtT]?)[bB]?\s*$")
_UNITS = {"": 1, "k": 2**10, "m": 2**20, "g": 2**30, "t": 2**40}


def parse_bytes(text: str) -> int:
    """``"512M"`` -> 536870912."""
    match = _SIZE.match(text)
    if not match:
        raise argparse.ArgumentTypeError(f"not a byte size: {text!r}")
    return int(match.group(1)) * _UNITS[match.group(2).lower()]


def parse_count(text: str) -> int:
    """``"4k"`` -> 4000 (decimal, for trace lengths)."""
    text = text.strip().lower()
    scale = 1
    if text.endswith("k"):
        text, scale = text[:-1], 1000
    elif text.endswith("m"):
        text, scale = text[:-1], 1_000_000
    try:
        return int(float(text) * scale)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}") from None


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, TraceParseError):
        return EXIT_PARSE
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(exc, (ResourceError, OSError, MemoryError)):
        return EXIT_RESOURCE
    return EXIT_RESOURCE if isinstance(exc, TraceAlignError) else 1


# ---------------------------------------------------------------- argument parsing

def _add_alignment_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("distance")
    g.add_argument("--distance", choices=["sen", "inst"], default="sen")
    g.add_argument("--gap", type=int, default=1, help="gap cost")
    g.add_argument("--mismatch", type=int, default=5, help="mismatch cost")
    g.add_argument("--match", type=int, default=0, help="match cost")
    g.add_argument("--allow-gap-geq-mismatch", action="store_true")

    g = p.add_argument_group("mode")
    g.add_argument("--mode", choices=["exact", "banded", "fastdtw"], default="exact")
    g.add_argument("--band-width", type=int, default=None)
    g.add_argument("--radius", type=int, default=None)
    g.add_argument("--min-size", type=int, default=None)

    g = p.add_argument_group("cost matrix store")
    g.add_argument("--backing", choices=["auto", "memory", "disk"], default="auto")
    g.add_argument("--cell-width", type=int, choices=[4, 8], default=None)
    g.add_argument("--workdir", default=None,
                   help="spill directory (default: $TRACEALIGN_WORKDIR or the system temp dir)")
    g.add_argument("--mem-budget", type=parse_bytes, default=DEFAULT_MEM_BUDGET)
    g.add_argument("--disk-budget", type=parse_bytes, default=None)
    g.add_argument("--keep-matrix", action="store_true")
    g.add_argument("--cost-only", action="store_true", help="skip backtracking; never spills")

    p.add_argument("--output", choices=["json", "text"], default="json")
    p.add_argument("--format", choices=["auto", "v8", "events"], default="auto", help="trace file format")


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; exit 2 is reserved for trace parse failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tracealign", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a --print-bytecode dump")
    p.add_argument("trace")
    p.add_argument("--stats", action="store_true", help="print a stats report instead of the events")
    p.add_argument("--format", choices=["auto", "v8", "events"], default="auto")
    p.add_argument("--output", choices=["json", "text"], default="json")

    p = sub.add_parser("align", help="align two traces")
    p.add_argument("trace_a")
    p.add_argument("trace_b")
    _add_alignment_flags(p)
    p.add_argument("--emit-path", metavar="FILE", help="write the warp path as CSV")
    p.add_argument("--emit-aligned", metavar="FILE", help="write the aligned traces side by side")

    p = sub.add_parser("batch", help="align every pair listed in a manifest (one 'a<TAB>b' per line)")
    p.add_argument("manifest")
    _add_alignment_flags(p)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("bench", help="time alignments of synthetic trace pairs")
    p.add_argument("--sizes", default="1k,2k,4k", help="comma-separated trace lengths, e.g. 1k,2k,4k")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet", type=int, default=16)
    _add_alignment_flags(p)
    return parser


def config_from_args(args: argparse.Namespace) -> AlignConfig:
    """Build and validate an AlignConfig; raises ConfigurationError before any I/O."""
    if args.radius is not None and args.mode != "fastdtw":
        raise ConfigurationError("--radius requires --mode fastdtw")
    if args.min_size is not None and args.mode != "fastdtw":
        raise ConfigurationError("--min-size requires --mode fastdtw")
    if args.band_width is not None and args.mode != "banded":
        raise ConfigurationError("--band-width requires --mode banded")
    if args.cost_only and (getattr(args, "emit_path", None) or getattr(args, "emit_aligned", None)):
        raise ConfigurationError("--cost-only cannot be combined with --emit-path/--emit-aligned")
    if args.cost_only and args.keep_matrix:
        raise ConfigurationError("--cost-only never writes a matrix to keep")
    if getattr(args, "jobs", 1) < 1:
        raise ConfigurationError("--jobs must be >= 1")
    spec = DistanceSpec(
        mode=DistanceMode(args.distance),
        mismatch_cost=args.mismatch,
        match_cost=args.match,
        gap_cost=args.gap,
        allow_gap_geq_mismatch=args.allow_gap_geq_mismatch,
    )
    spec.validate()
    config = AlignConfig(
        distance=spec,
        mode=args.mode,
        band_width=args.band_width,
        radius=args.radius if args.radius is not None else 1,
        min_size=args.min_size if args.min_size is not None else 16,
        backing=args.backing,
        cell_width=args.cell_width,
        workdir=args.workdir,
        mem_budget=args.mem_budget,
        disk_budget=args.disk_budget,
        keep_matrix=args.keep_matrix,
        cost_only=args.cost_only,
    )
    config.validate()
    return config


def _config_summary(config: AlignConfig) -> dict:
    spec = config.distance
    out = {
        "mode": config.mode,
        "distance": spec.mode.value,
        "gap": spec.gap_cost,
        "mismatch": spec.mismatch_cost,
        "match": spec.match_cost,
        "cost_only": config.cost_only,
    }
    if config.mode == "banded":
        out["band_width"] = config.band_width
    if config.mode == "fastdtw":
        out.update(radius=config.radius, min_size=config.min_size)
    return out


def _print(report: dict, output: str, text_lines=None) -> None:
    if output == "json":
        print(json.dumps(report, indent=2))
    else:
        for line in text_lines if text_lines is not None else _flatten(report):
            print(line)


def _flatten(report: dict, prefix: str = ""):
    for key, value in report.items():
        if isinstance(value, dict):
            yield from _flatten(value, f"{prefix}{key}.")
        else:
            yield f"{prefix}{key}: {value}"


def _table(rows: list[dict], columns: list[str]) -> list[str]:
    cells = [[str(r.get(c, "")) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[k]) for row in cells]) for k, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in cells]
    return lines


# ---------------------------------------------------------------- subcommands

def cmd_parse(args) -> int:
    trace = read_trace(args.trace, args.format)
    if args.stats:
        report = {"schema": SCHEMA, "source": args.trace, **trace_stats(trace).to_dict()}
        _print(report, args.output)
    else:
        sys.stdout.write(serialize_trace(trace))
    return EXIT_OK


def cmd_align(args) -> int:
    config = config_from_args(args)
    a = read_trace(args.trace_a, args.format)
    b = read_trace(args.trace_b, args.format)
    result = align(a, b, config, with_aligned=bool(args.emit_aligned))
    if args.emit_path and result.path is not None:
        Path(args.emit_path).write_text(result.path.to_csv())
    if args.emit_aligned and result.aligned is not None:
        Path(args.emit_aligned).write_text(result.aligned.to_text())
    report = {"schema": SCHEMA, "a": args.trace_a, "b": args.trace_b, **_config_summary(config), **result.to_dict()}
    _print(report, args.output)
    return EXIT_OK


def read_manifest(path) -> list[tuple[str, str]]:
    base = Path(path).parent
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ConfigurationError(f"{path}:{lineno}: expected two tab-separated paths")
            pairs.append(tuple(str(p if os.path.isabs(p) else base / p) for p in parts))
    return pairs


def align_pair(pair_id: int, path_a: str, path_b: str, config: AlignConfig, fmt: str = "auto") -> dict:
    """One batch row; failures are captured in the row."""
    row = {"pair": pair_id, "a": path_a, "b": path_b}
    try:
        a = read_trace(path_a, fmt)
        b = read_trace(path_b, fmt)
        result = align(a, b, config)
    except (TraceAlignError, OSError, MemoryError) as exc:
        row.update(status="failed", error=str(exc), exit_code=_exit_code(exc))
        return row
    row.update(
        status="ok",
        n=result.n,
        m=result.m,
        difficulty=result.difficulty,
        cost=result.cost,
        wall_time=round(result.stats.wall_time, 6),
        peak_resident_cells=result.stats.peak_resident_cells,
    )
    return row


def run_batch(pairs, config: AlignConfig, jobs: int = 1, fmt: str = "auto") -> list[dict]:
    ids = range(len(pairs))
    if jobs == 1:
        return [align_pair(k, a, b, config, fmt) for k, (a, b) in zip(ids, pairs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(align_pair, k, a, b, config, fmt) for k, (a, b) in zip(ids, pairs)]
        return [f.result() for f in futures]


def cmd_batch(args) -> int:
    config = config_from_args(args)
    pairs = read_manifest(args.manifest)
    rows = run_batch(pairs, config, args.jobs, args.format)
    failed = sum(r["status"] != "ok" for r in rows)
    report = {"schema": SCHEMA, **_config_summary(config), "pairs": len(rows), "failed": failed, "rows": rows}
    columns = ["pair", "status", "n", "m", "difficulty", "cost", "wall_time", "peak_resident_cells", "error"]
    _print(report, args.output, _table(rows, columns))
    return EXIT_BATCH_FAILED if failed else EXIT_OK


def run_bench(sizes, config: AlignConfig, seed: int = 0, alphabet: int = 16) -> list[dict]:
    rows = []
    for k, size in enumerate(sizes):
        x = synth_trace(size, alphabet, seed + 2 * k)
        y = synth_trace(size, alphabet, seed + 2 * k + 1)
        row = {"size": size, "n": size, "m": size, "difficulty": size * size}
        try:
            result = align(x, y, config)
        except (TraceAlignError, OSError, MemoryError) as exc:
            row.update(status="failed", error=str(exc))
        else:
            stats = result.stats
            row.update(
                status="ok",
                cost=result.cost,
                wall_time=round(stats.wall_time, 6),
                cells_computed=stats.cells_computed,
                peak_resident_cells=stats.peak_resident_cells,
                spill_bytes=stats.spill_bytes,
                backing=stats.backing,
            )
        rows.append(row)
    return rows


def cmd_bench(args) -> int:
    config = config_from_args(args)
    sizes = [parse_count(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes or min(sizes) < 1:
        raise ConfigurationError("--sizes must list positive trace lengths")
    rows = run_bench(sizes, config, args.seed, args.alphabet)
    report = {"schema": SCHEMA, **_config_summary(config), "seed": args.seed, "rows": rows}
    columns = ["size", "difficulty", "cost", "wall_time", "cells_computed", "peak_resident_cells", "spill_bytes",
               "backing", "status"]
    _print(report, args.output, _table(rows, columns))
    return EXIT_BATCH_FAILED if any(r["status"] != "ok" for r in rows) else EXIT_OK


COMMANDS = {"parse": cmd_parse, "align": cmd_align, "batch": cmd_batch, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (TraceAlignError, OSError, MemoryError) as exc:
        print(f"tracealign {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
