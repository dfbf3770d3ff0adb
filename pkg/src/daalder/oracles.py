"""Equivalence oracles: the store-backed randomized one and an exact one for testing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .core import LabeledTrace, MooreMachine, equivalent
from .store import TraceStore


@dataclass(frozen=True)
class OracleVerdict:
    counterexample: LabeledTrace | None = None
    checked: int = 0

    @property
    def accepted(self) -> bool:
        return self.counterexample is None


def randomized_equivalence(
    store: TraceStore,
    h: MooreMachine,
    budget: int | None = None,
    seed: int = 0,
    guard: Callable[[], None] | None = None,
) -> OracleVerdict:
    """Stream stored records in seeded random order and return the first one ``h`` gets wrong.

    ``budget=None`` checks the whole store.
    """
    limit = store.record_count if budget is None else min(budget, store.record_count)
    delta, outputs, init = h.delta, h.outputs, h.initial
    checked = 0
    for trace, label in store.random_stream(seed):
        if checked >= limit:
            break
        checked += 1
        if guard is not None and not checked & 4095:
            guard()
        s = init
        for a in trace:
            s = delta[s][a]
        if outputs[s] != label:
            return OracleVerdict(LabeledTrace(trace, label), checked)
    return OracleVerdict(None, checked)


def exact_equivalence(target: MooreMachine, h: MooreMachine) -> OracleVerdict:
    """Shortest distinguishing trace, labelled by ``target``; accept if none exists."""
    sigma = equivalent(target, h)
    if sigma is None:
        return OracleVerdict(None)
    return OracleVerdict(LabeledTrace(sigma, target(sigma)))
