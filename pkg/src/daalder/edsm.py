"""Passive evidence-driven state merging over the complete dataset.

The whole store is loaded into one prefix tree up front, then the red-blue
loop repeatedly takes the blue node with the most traces through it and
merges it into the red node with the highest evidence, or promotes it when
no red node is consistent.  No sink states, no score lower bound.
"""

from __future__ import annotations

import time
import tracemalloc
from dataclasses import asdict, dataclass, field
from typing import Callable

from .core import MooreMachine, minimize
from .store import TraceStore
from .tree import ObservationTree


@dataclass
class EdsmStats:
    pta_nodes: int = 0
    traces_included: int = 0
    steps: int = 0
    merges: int = 0
    promotions: int = 0
    hypothesis_states: int = 0
    peak_memory_bytes: int | None = None
    # consistent candidate count of every merge/promote step, in order
    candidates: list[int] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("log")
        d.pop("candidates")
        return d


def load_pta(store: TraceStore, guard: Callable[[], None] | None = None) -> ObservationTree:
    tree = ObservationTree(store.input_size, store.output_size)
    for i, (trace, label) in enumerate(store):
        if guard is not None and not i & 1023:
            guard()
        tree.add_trace(trace, label)
    return tree


def edsm_learn(
    store: TraceStore, guard: Callable[[], None] | None = None
) -> tuple[MooreMachine, EdsmStats]:
    if store.record_count == 0:
        raise ValueError("cannot learn from an empty store")
    t0 = time.perf_counter()
    stats = EdsmStats()
    tree = load_pta(store, guard)
    stats.pta_nodes = len(tree)
    stats.traces_included = tree.num_labeled

    def step(node: int, traces: int, consistent: int, target: int) -> None:
        if guard is not None:
            guard()
        stats.steps += 1
        stats.candidates.append(consistent)
        if target >= 0:
            stats.merges += 1
        else:
            stats.promotions += 1
        stats.log.append(
            {
                "event": "step",
                "step": stats.steps,
                "blue_traces": traces,
                "candidates": consistent,
                "action": "merge" if target >= 0 else "promote",
                "elapsed": round(time.perf_counter() - t0, 6),
            }
        )

    states = tree.complete_states([0], None, on_step=step)
    machine = minimize(tree.quotient(states))
    stats.hypothesis_states = machine.num_states
    if tracemalloc.is_tracing():
        stats.peak_memory_bytes = tracemalloc.get_traced_memory()[1]
    return machine, stats
