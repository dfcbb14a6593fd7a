"""End-to-end acceptance checks, one test per criterion.

Each test records a ``criterion N: PASS|FAIL`` line that is echoed in the
pytest terminal summary (and printed directly under ``-s``).
"""
import itertools
import os

import numpy as np
import pytest

from tracealign import (
    AlignConfig,
    Band,
    DistanceMode,
    DistanceSpec,
    FastDtwConfig,
    Trace,
    align,
    dtw_banded,
    fastdtw,
    make_distance,
    parse_events,
    read_trace,
    replay_cost,
    serialize_trace,
    synth_trace,
)
from tracealign.cli import run_bench
from tracealign.corpus import make_web
from tracealign.store import iter_spill_rows

from .conftest import ACCEPTANCE_LINES
from .oracles import dtw_exhaustive, dtw_matrix, dtw_memo, random_events


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _random_spec(rng) -> DistanceSpec:
    mode = DistanceMode.SEN if rng.integers(2) else DistanceMode.INST
    s = int(rng.integers(1, 10))
    g = int(rng.integers(0, s))
    c = int(rng.integers(0, g + 1))
    return DistanceSpec(mode, mismatch_cost=s, match_cost=c, gap_cost=g)


def test_criterion_1_small_golden(small_pair):
    x, y, spec = small_pair
    result = align(x, y, AlignConfig(distance=spec))
    steps = result.path.steps
    replay = replay_cost(result.path, x, y, make_distance(spec))
    ok = result.cost == 4 and steps[0] == (0, 0) and steps[-1] == (8, 6) and replay == 4
    record(1, ok, f"cost={result.cost} start={steps[0]} end={steps[-1]} replay={replay}")


def test_criterion_2_parser_golden(data_dir):
    trace = read_trace(data_dir / "plus_one.txt")
    ops = trace.operators()
    operands = [list(e.operands) for e in trace]
    back = parse_events(serialize_trace(trace))
    ok = (
        ops == ["StackCheck", "LdaNamedProperty", "AddSmi", "Return"]
        and operands == [[], ["a0", "[0]", "[1]"], ["[1]", "[0]"], []]
        and [e.canonical for e in back] == [e.canonical for e in trace]
    )
    record(2, ok, f"events={len(trace)} operators={ops}")


def test_criterion_3_oracle_equivalence():
    rng = np.random.default_rng(2024)
    mismatches, exhaustive_checked = [], 0
    for k in range(500):
        max_len = 8 if k < 120 else 64
        alphabet = int(rng.integers(1, 9))
        x = random_events(rng, int(rng.integers(0, max_len + 1)), alphabet)
        y = random_events(rng, int(rng.integers(0, max_len + 1)), alphabet)
        spec = _random_spec(rng)
        dist = make_distance(spec)
        cost = align(x, y, AlignConfig(distance=spec)).cost
        if cost != dtw_memo(x.events, y.events, dist, spec.gap_cost):
            mismatches.append(k)
        if len(x) <= 8 and len(y) <= 8:
            exhaustive_checked += 1
            if cost != dtw_exhaustive(x.events, y.events, dist, spec.gap_cost):
                mismatches.append(k)
    record(3, not mismatches, f"500 pairs, {exhaustive_checked} also exhaustive, mismatches={mismatches}")


def test_criterion_4_backing_equivalence(tmp_path):
    rng = np.random.default_rng(77)
    bad = []
    for k in range(100):
        x = random_events(rng, int(rng.integers(0, 65)), int(rng.integers(1, 9)))
        y = random_events(rng, int(rng.integers(0, 65)), int(rng.integers(1, 9)))
        spec = _random_spec(rng)
        spill = tmp_path / f"pair{k}"
        spill.mkdir()
        mem = align(x, y, AlignConfig(distance=spec, backing="memory"))
        disk = align(x, y, AlignConfig(distance=spec, backing="disk", workdir=spill, keep_matrix=True))
        (path,) = spill.glob("*.strc")
        on_disk = [cells.tolist() for _, cells in iter_spill_rows(path)]
        expected = dtw_matrix(x.events, y.events, make_distance(spec), spec.gap_cost)
        if mem.cost != disk.cost or mem.path != disk.path or on_disk != expected:
            bad.append(k)
        os.remove(path)
    record(4, not bad, f"100 pairs, differing={bad}")


@pytest.fixture(scope="module")
def run_10k(tmp_path_factory):
    spill = tmp_path_factory.mktemp("spill10k")
    x, y = synth_trace(10_000, 16, 1), synth_trace(10_000, 16, 2)
    result = align(x, y, AlignConfig(backing="disk", workdir=spill, keep_matrix=True))
    (path,) = spill.glob("*.strc")
    size = os.path.getsize(path)
    os.remove(path)
    return result, size


@pytest.mark.slow
def test_criterion_5_residency_bound(run_10k):
    result, size = run_10k
    peak = result.stats.peak_resident_cells
    expected_size = 24 + 10_001 * 10_001 * 4
    ok = result.stats.backing == "disk" and peak <= 2 * 10_001 and size == expected_size
    record(5, ok, f"peak_resident_cells={peak} (bound {2 * 10_001}) spill={size} (expected {expected_size}) "
                  f"time={result.stats.wall_time:.1f}s")


@pytest.mark.slow
def test_criterion_6_backtrack_reads(run_10k):
    result, _ = run_10k
    reads = result.stats.backtrack_reads
    record(6, reads <= 10_000 + 2, f"distinct row fetches={reads} (bound {10_002})")


def test_criterion_7_approximations():
    rng = np.random.default_rng(7)
    dist = make_distance()
    bad = []
    for k in range(100):
        x = random_events(rng, int(rng.integers(0, 80)), int(rng.integers(1, 9)))
        y = random_events(rng, int(rng.integers(0, 80)), int(rng.integers(1, 9)))
        exact = align(x, y).cost
        full = dtw_banded(x, y, dist, Band.full(len(x), len(y))).cost
        wide = fastdtw(x, y, dist, FastDtwConfig(radius=max(len(x), len(y)), min_size=2)).cost
        narrow = fastdtw(x, y, dist, FastDtwConfig(radius=1, min_size=2)).cost
        if not (full == exact == wide and narrow >= exact):
            bad.append(k)
    sizes = [1000, 2000, 4000, 8000]
    cells = [
        fastdtw(synth_trace(n, 16, 3 * n), synth_trace(n, 16, 3 * n + 1), dist, FastDtwConfig(radius=1))
        .stats.cells_computed
        for n in sizes
    ]
    ratios = [round(b / a, 2) for a, b in zip(cells, cells[1:])]
    ok = not bad and all(r < 4 for r in ratios)
    record(7, ok, f"contract violations={bad} fastdtw cells={cells} ratios={ratios}")


@pytest.fixture(scope="module")
def corpus_costs():
    web = make_web(4, seed=0)
    same = [(web.visit(p, 2 * k), web.visit(p, 2 * k + 1)) for k, p in enumerate([0, 1, 2, 3] * 3)][:10]
    cross = [(web.visit(a, 100 + k), web.visit(b, 200 + k))
             for k, (a, b) in enumerate(itertools.islice(itertools.cycle(itertools.combinations(range(4), 2)), 10))]
    costs = {}
    for mode in (DistanceMode.SEN, DistanceMode.INST):
        cfg = AlignConfig(distance=DistanceSpec(mode), cost_only=True)
        costs[mode] = ([align(a, b, cfg).cost for a, b in same], [align(a, b, cfg).cost for a, b in cross])
    return costs


def test_criterion_8_clustering(corpus_costs):
    same, cross = corpus_costs[DistanceMode.SEN]
    record(8, max(same) < min(cross), f"same-page max={max(same)} cross-page min={min(cross)} over 20 pairs")


def test_criterion_9_distance_sensitivity(corpus_costs):
    sen_same, sen_cross = corpus_costs[DistanceMode.SEN]
    inst_same, inst_cross = corpus_costs[DistanceMode.INST]
    pairwise = all(i <= s for i, s in zip(inst_same + inst_cross, sen_same + sen_cross))
    sen_margin = min(sen_cross) - max(sen_same)
    inst_margin = min(inst_cross) - max(inst_same)
    record(9, pairwise and inst_margin <= sen_margin,
           f"inst<=sen pairwise={pairwise} margin sen={sen_margin} inst={inst_margin}")


@pytest.mark.slow
def test_criterion_10_quadratic_time(tmp_path):
    sizes = [4000, 8000, 16000, 32000]
    rows = run_bench(sizes, AlignConfig(backing="disk", workdir=tmp_path), seed=0)
    times = [r["wall_time"] for r in rows]
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ratios = [round(b / a, 2) for a, b in zip(times, times[1:])]
    ok = all(r["status"] == "ok" for r in rows) and abs(slope - 2.0) <= 0.3
    record(10, ok, f"sizes={sizes} wall={[round(t, 2) for t in times]} ratios={ratios} exponent={slope:.2f}")
