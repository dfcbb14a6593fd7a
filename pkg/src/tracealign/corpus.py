"""Synthetic "web page" traces for clustering experiments.

A page visit is a shared builtin prefix followed by the page's script
blocks. Two visits of the same page differ only in the order of their
script blocks, the way network timing reorders script compilation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trace_model import Trace, TraceEvent, shuffle_blocks


def synth_events(length: int, alphabet_size: int, seed: int, operand_pool: int = 8) -> tuple[TraceEvent, ...]:
    """Random events with 0-2 register/slot operands each."""
    rng = np.random.default_rng(seed)
    ops = rng.integers(0, alphabet_size, size=length)
    arity = rng.integers(0, 3, size=length)
    regs = rng.integers(0, operand_pool, size=(length, 2))
    kinds = rng.integers(0, 2, size=(length, 2))
    events = []
    for k in range(length):
        operands = tuple(
            f"r{regs[k, a]}" if kinds[k, a] else f"[{regs[k, a]}]" for a in range(arity[k])
        )
        events.append(TraceEvent(f"op{ops[k]}", operands))
    return tuple(events)


@dataclass(frozen=True)
class SyntheticWeb:
    builtin: tuple[TraceEvent, ...]
    pages: tuple[tuple[tuple[TraceEvent, ...], ...], ...]

    def visit(self, page: int, seed: int) -> Trace:
        """One load of ``page``: builtin prefix, then its script blocks in a seeded order."""
        blocks = self.pages[page]
        scripts = Trace(tuple(e for block in blocks for e in block), source=f"page{page}")
        cuts = np.cumsum([len(b) for b in blocks])[:-1].tolist()
        shuffled = shuffle_blocks(scripts, cuts, seed)
        return Trace(self.builtin + shuffled.events, source=f"page{page}/visit{seed}")


def make_web(n_pages: int, seed: int = 0, builtin_length: int = 2000, scripts_per_page: tuple[int, int] = (3, 5),
             script_length: tuple[int, int] = (150, 400), alphabet_size: int = 16) -> SyntheticWeb:
    rng = np.random.default_rng(seed)
    builtin = synth_events(builtin_length, alphabet_size, int(rng.integers(2**31)))
    pages = []
    for _ in range(n_pages):
        n_scripts = int(rng.integers(scripts_per_page[0], scripts_per_page[1] + 1))
        pages.append(tuple(
            synth_events(int(rng.integers(script_length[0], script_length[1] + 1)), alphabet_size,
                         int(rng.integers(2**31)))
            for _ in range(n_scripts)
        ))
    return SyntheticWeb(builtin, tuple(pages))
