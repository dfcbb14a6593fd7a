import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracealign import (
    GAP,
    AlignConfig,
    ContractError,
    CorruptionError,
    DistanceMode,
    DistanceSpec,
    Trace,
    WarpPath,
    align,
    apply_path,
    backtrack,
    create_store,
    make_distance,
    replay_cost,
    synth_trace,
)
from tracealign.dtw import forward_pass, resolve_cell_width
from tracealign.errors import CellOverflowError

from .oracles import dtw_exhaustive, dtw_memo

ONE_CHAR = DistanceSpec(DistanceMode.INST, mismatch_cost=2, match_cost=0, gap_cost=1)

traces = st.text(alphabet="abcd", max_size=14).map(Trace.from_operators)
specs = st.builds(
    lambda mode, s, g: DistanceSpec(mode, mismatch_cost=s, match_cost=0, gap_cost=g),
    st.sampled_from([DistanceMode.SEN, DistanceMode.INST]),
    st.integers(2, 9),
    st.integers(1, 1),
) | st.integers(2, 9).flatmap(
    lambda s: st.integers(0, s - 1).map(lambda g: DistanceSpec(mismatch_cost=s, gap_cost=g, match_cost=0))
)


class TestSmallPair:
    def test_cost_and_path(self, small_pair):
        x, y, spec = small_pair
        result = align(x, y, AlignConfig(distance=spec))
        assert result.cost == 4
        assert result.path.steps[0] == (0, 0) and result.path.steps[-1] == (8, 6)
        assert replay_cost(result.path, x, y, make_distance(spec)) == 4
        assert result.difficulty == 48

    def test_tie_broken_path(self, small_pair):
        x, y, spec = small_pair
        path = align(x, y, AlignConfig(distance=spec)).path
        assert path.steps == ((0, 0), (1, 1), (2, 1), (3, 1), (4, 2), (5, 3), (6, 4), (7, 4), (8, 5), (8, 6))

    def test_aligned_pair(self, small_pair):
        x, y, spec = small_pair
        result = align(x, y, AlignConfig(distance=spec), with_aligned=True)
        aligned = result.aligned
        assert len(aligned) == len(result.path) - 1 == 9
        assert [e for e in aligned.left if e is not GAP] == list(x.events)
        assert [e for e in aligned.right if e is not GAP] == list(y.events)
        assert aligned.gaps() == (1, 3)
        assert aligned.to_text().splitlines()[1] == "b  -"

    @pytest.mark.parametrize("backing", ["memory", "disk"])
    def test_backings_and_cost_only(self, small_pair, backing, tmp_path):
        x, y, spec = small_pair
        result = align(x, y, AlignConfig(distance=spec, backing=backing, workdir=tmp_path))
        assert result.cost == 4
        only = align(x, y, AlignConfig(distance=spec, cost_only=True, workdir=tmp_path))
        assert only.cost == 4 and only.path is None and only.stats.spill_bytes == 0
        assert list(tmp_path.iterdir()) == []


def test_ab_b():
    x, y = Trace.from_operators("ab"), Trace.from_operators("b")
    result = align(x, y, AlignConfig(distance=ONE_CHAR), with_aligned=True)
    assert result.cost == 1
    assert [(str(a) if a else None, str(b) if b else None) for a, b in zip(result.aligned.left, result.aligned.right)] \
        == [("a", None), ("b", "b")]


@pytest.mark.parametrize("m", [0, 1, 7])
def test_empty_left(m):
    y = synth_trace(m, 3, 0)
    result = align(Trace(()), y)
    assert result.cost == m
    assert result.path.steps == tuple((0, j) for j in range(m + 1))
    assert align(y, Trace(())).cost == m


def test_identity_is_diagonal():
    x = synth_trace(40, 5, 3)
    result = align(x, x)
    assert result.cost == 0
    assert result.path.steps == tuple((k, k) for k in range(41))
    assert apply_path(x, x, result.path).gaps() == (0, 0)


@settings(max_examples=200, deadline=None)
@given(traces, traces, specs)
def test_matches_memo_oracle(x, y, spec):
    dist = make_distance(spec)
    result = align(x, y, AlignConfig(distance=spec))
    assert result.cost == dtw_memo(x.events, y.events, dist, spec.gap_cost)
    result.path.check(len(x), len(y))
    assert replay_cost(result.path, x, y, dist) == result.cost
    assert len(result.path) <= len(x) + len(y) + 1


@settings(max_examples=80, deadline=None)
@given(st.text(alphabet="ab", max_size=6).map(Trace.from_operators),
       st.text(alphabet="abc", max_size=6).map(Trace.from_operators), specs)
def test_matches_exhaustive(x, y, spec):
    dist = make_distance(spec)
    assert align(x, y, AlignConfig(distance=spec)).cost == dtw_exhaustive(x.events, y.events, dist, spec.gap_cost)


@settings(max_examples=60, deadline=None)
@given(traces, traces, specs)
def test_symmetry_and_bounds(x, y, spec):
    cfg = AlignConfig(distance=spec)
    cost = align(x, y, cfg).cost
    assert cost == align(y, x, cfg).cost
    g = spec.gap_cost
    assert g * abs(len(x) - len(y)) <= cost <= g * (len(x) + len(y))
    assert align(x, x, cfg).cost == 0


@settings(max_examples=40, deadline=None)
@given(traces, traces)
def test_cost_only_residency(x, y):
    result = align(x, y, AlignConfig(cost_only=True))
    assert result.cost == align(x, y).cost
    assert result.stats.peak_resident_cells <= 2 * (min(len(x), len(y)) + 1)
    assert result.stats.spill_bytes == 0


def test_backing_equivalence_1000(tmp_path):
    x, y = synth_trace(1000, 8, 1), synth_trace(1000, 8, 2)
    mem = align(x, y, AlignConfig(backing="memory"))
    disk = align(x, y, AlignConfig(backing="disk", workdir=tmp_path))
    assert mem.cost == disk.cost
    assert mem.path == disk.path
    assert disk.stats.peak_resident_cells <= 2 * 1001
    assert disk.stats.backtrack_reads <= 1002


def test_custom_distance_against_oracle():
    rng = np.random.default_rng(5)

    def ord_dist(a, b):
        return min(abs(ord(a.operator) - ord(b.operator)), 4)

    spec = DistanceSpec(DistanceMode.CUSTOM, mismatch_cost=4, gap_cost=2, match_cost=0)
    for _ in range(25):
        x = Trace.from_operators(rng.choice(list("abcdef"), size=int(rng.integers(0, 10))).tolist())
        y = Trace.from_operators(rng.choice(list("abcdef"), size=int(rng.integers(0, 10))).tolist())
        result = align(x, y, AlignConfig(distance=spec, custom_distance=ord_dist))
        assert result.cost == dtw_memo(x.events, y.events, ord_dist, 2)
        assert replay_cost(result.path, x, y, make_distance(spec, ord_dist)) == result.cost


def test_tampered_spill_file_is_detected(tmp_path):
    x, y = synth_trace(30, 4, 7), synth_trace(30, 4, 8)
    dist = make_distance()
    store = create_store(30, 30, "disk", spill_dir=tmp_path)
    try:
        forward_pass(x, y, dist, store)
        row_bytes = 31 * 4
        os.pwrite(os.open(store.spill_path, os.O_WRONLY), np.full(31, 7, dtype="<u4").tobytes(), 24 + 15 * row_bytes)
        with pytest.raises(CorruptionError):
            backtrack(store, x, y, dist)
    finally:
        store.close()


def test_backtrack_needs_complete_forward_pass():
    store = create_store(2, 2, "memory")
    store.write_row(0, [0, 1, 2])
    with pytest.raises(ContractError):
        backtrack(store, synth_trace(2, 2, 0), synth_trace(2, 2, 1), make_distance())


class TestWarpPath:
    def test_invalid_paths(self):
        for steps in [((0, 0), (2, 2)), ((0, 0), (1, 1)), ((1, 1), (2, 2)), ()]:
            with pytest.raises(ContractError):
                WarpPath(steps).check(2, 2)

    def test_csv(self):
        assert WarpPath(((0, 0), (1, 1))).to_csv() == "i,j\n0,0\n1,1\n"

    def test_apply_invalid(self):
        with pytest.raises(ContractError):
            apply_path(synth_trace(2, 2, 0), synth_trace(2, 2, 0), WarpPath(((0, 0), (2, 2))))


def test_cell_width_precheck():
    spec = DistanceSpec()
    assert resolve_cell_width(10, 10, spec) == 4
    assert resolve_cell_width(2**30, 5, spec) == 8
    with pytest.raises(CellOverflowError):
        resolve_cell_width(2**30, 5, spec, requested=4)


def test_large_gap_needs_wide_cells(tmp_path):
    spec = DistanceSpec(mismatch_cost=2**31, gap_cost=2**30, allow_gap_geq_mismatch=False)
    x, y = synth_trace(6, 2, 0), synth_trace(4, 2, 1)
    result = align(x, y, AlignConfig(distance=spec, backing="disk", workdir=tmp_path))
    assert result.stats.cell_width == 8
    assert result.cost == dtw_memo(x.events, y.events, make_distance(spec), spec.gap_cost)


def test_workdir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TRACEALIGN_WORKDIR", str(tmp_path))
    assert AlignConfig().spill_dir() == str(tmp_path)
    result = align(synth_trace(20, 3, 0), synth_trace(20, 3, 1), AlignConfig(backing="disk", keep_matrix=True))
    assert len(list(tmp_path.glob("costmatrix-*.strc"))) == 1
    assert result.stats.spill_bytes == 24 + 21 * 21 * 4
