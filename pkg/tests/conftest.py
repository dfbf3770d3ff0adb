from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import strategies as st

from daalder.core import LabeledTrace, MooreMachine
from daalder.store import TraceStore


def all_traces(alphabet: int, max_len: int, min_len: int = 0):
    for n in range(min_len, max_len + 1):
        yield from itertools.product(range(alphabet), repeat=n)


def random_machine(rng: random.Random, n: int, inputs: int = 2, outputs: int = 2) -> MooreMachine:
    delta = [[rng.randrange(n) for _ in range(inputs)] for _ in range(n)]
    out = [rng.randrange(outputs) for _ in range(n)]
    return MooreMachine.build(delta, out, num_inputs=inputs, num_outputs=outputs)


def exhaustive_sample(m: MooreMachine, max_len: int) -> list[LabeledTrace]:
    return [LabeledTrace(t, m(t)) for t in all_traces(m.num_inputs, max_len)]


@st.composite
def machines(draw, max_states: int = 5, inputs: int = 2, outputs: int = 2):
    n = draw(st.integers(1, max_states))
    delta = [[draw(st.integers(0, n - 1)) for _ in range(inputs)] for _ in range(n)]
    out = [draw(st.integers(0, outputs - 1)) for _ in range(n)]
    init = draw(st.integers(0, n - 1))
    return MooreMachine.build(delta, out, initial=init, num_inputs=inputs, num_outputs=outputs)


@pytest.fixture
def parity() -> MooreMachine:
    # output 1 iff the number of 1s read is odd
    return MooreMachine.build([[0, 1], [1, 0]], [0, 1])


@pytest.fixture
def make_store(tmp_path):
    counter = itertools.count()
    opened: list[TraceStore] = []

    def make(records, input_size=2, output_size=2, **kw) -> TraceStore:
        s = TraceStore.build(records, tmp_path / f"store{next(counter)}", input_size, output_size, **kw)
        opened.append(s)
        return s

    yield make
    for s in opened:
        s.close()


# acceptance results, filled in by test_acceptance and printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
