from pathlib import Path

import pytest

from tracealign import DistanceMode, DistanceSpec, Trace

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def small_pair():
    """The abcababc / aabaca example with gap 1, mismatch 2, match 0."""
    x = Trace.from_operators("abcababc")
    y = Trace.from_operators("aabaca")
    spec = DistanceSpec(DistanceMode.INST, mismatch_cost=2, match_cost=0, gap_cost=1)
    return x, y, spec


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
