from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings

from daalder.core import (
    InputDomainError,
    MachineFormatError,
    MooreMachine,
    canonical,
    dumps,
    equivalent,
    evaluate,
    loads,
    minimize,
    reachable_states,
    to_dot,
)

from conftest import all_traces, machines, random_machine


def test_one_state_machine_outputs_its_label():
    m = MooreMachine.build([[0, 0]], [1], num_outputs=2)
    assert evaluate(m, ()) == 1
    assert evaluate(m, (0, 1, 1, 0)) == 1


def test_empty_trace_gives_initial_output():
    m = MooreMachine.build([[1, 0], [1, 1]], [0, 1], initial=1)
    assert evaluate(m, ()) == 1


def test_three_cycle():
    m = MooreMachine.build([[1, 1], [2, 2], [0, 0]], [0, 1, 0])
    rng = random.Random(5)
    for length in range(12):
        t = tuple(rng.randrange(2) for _ in range(length))
        assert evaluate(m, t) == (length % 3) % 2


def test_symbol_outside_alphabet():
    m = MooreMachine.build([[0, 0]], [0])
    with pytest.raises(InputDomainError):
        evaluate(m, (2,))
    with pytest.raises(InputDomainError):
        evaluate(m, (-1,))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(delta=[[0, 1]], outputs=[0]),  # target out of range
        dict(delta=[[0]], outputs=[0], num_inputs=2),  # incomplete row
        dict(delta=[[0, 0]], outputs=[0], initial=1),
        dict(delta=[], outputs=[]),
        dict(delta=[[0, 0]], outputs=[2], num_outputs=2),
    ],
)
def test_invalid_machines_rejected(kwargs):
    with pytest.raises(ValueError):
        MooreMachine.build(**kwargs)


def test_minimize_keeps_minimal_parity(parity):
    assert minimize(parity).num_states == 2


def test_minimize_collapses_duplicate_state():
    # states 1 and 2 have equal output and equal successors
    m = MooreMachine.build([[1, 2], [0, 0], [0, 0]], [0, 1, 1])
    assert minimize(m).num_states == 2


def test_minimize_drops_unreachable():
    m = MooreMachine.build([[0, 0], [1, 0]], [0, 1])
    assert reachable_states(m) == [0]
    assert minimize(m).num_states == 1


def test_minimize_random_12_state_agrees_up_to_length_10():
    m = random_machine(random.Random(12), 12)
    mm = minimize(m)
    for t in all_traces(2, 10):
        assert mm(t) == m(t)


@settings(max_examples=200, deadline=None)
@given(machines(max_states=6))
def test_minimize_idempotent_and_equivalent(m):
    mm = minimize(m)
    assert minimize(mm).num_states == mm.num_states
    assert equivalent(m, mm) is None
    # no two states of the minimal machine are equivalent
    for s, t in itertools.combinations(range(mm.num_states), 2):
        a = MooreMachine(mm.num_inputs, mm.num_outputs, s, mm.delta, mm.outputs)
        b = MooreMachine(mm.num_inputs, mm.num_outputs, t, mm.delta, mm.outputs)
        assert equivalent(a, b) is not None


def test_canonical_is_isomorphism_invariant():
    m = MooreMachine.build([[1, 2], [0, 0], [2, 1]], [0, 1, 1])
    perm = [2, 0, 1]
    inv = {p: i for i, p in enumerate(perm)}
    relabelled = MooreMachine.build(
        [[inv[m.delta[perm[i]][a]] for a in range(2)] for i in range(3)],
        [m.outputs[perm[i]] for i in range(3)],
        initial=inv[0],
    )
    assert canonical(m) == canonical(relabelled)


def test_equivalent_reflexive(parity):
    assert equivalent(parity, parity) is None


def test_parity_vs_constant_short_counterexample(parity):
    const = MooreMachine.build([[0, 0]], [0], num_outputs=2)
    sigma = equivalent(parity, const)
    assert sigma is not None and len(sigma) <= 1
    assert parity(sigma) != const(sigma)


def test_equivalent_alphabet_mismatch(parity):
    three = MooreMachine.build([[0, 0, 0]], [0], num_outputs=2)
    with pytest.raises(ValueError):
        equivalent(parity, three)


@settings(max_examples=300, deadline=None)
@given(machines(max_states=4), machines(max_states=3))
def test_equivalent_matches_bounded_enumeration(a, b):
    bound = a.num_states * b.num_states
    agree = all(a(t) == b(t) for t in all_traces(2, bound))
    sigma = equivalent(a, b)
    assert (sigma is None) == agree
    if sigma is not None:
        assert a(sigma) != b(sigma)
        # shortest: nothing shorter distinguishes them
        assert all(a(t) == b(t) for t in all_traces(2, len(sigma) - 1))


def test_text_round_trip_one_state():
    m = MooreMachine.build([[0, 0]], [1], num_outputs=2)
    assert loads(dumps(m)) == m


def test_text_round_trip_200_states():
    m = random_machine(random.Random(200), 200)
    back = loads(dumps(m))
    assert equivalent(m, back) is None
    assert back == m


def test_truncated_text_reports_line():
    text = dumps(MooreMachine.build([[1, 0], [0, 1]], [0, 1]))
    cut = "\n".join(text.splitlines()[:-2])
    with pytest.raises(MachineFormatError) as err:
        loads(cut)
    assert err.value.lineno >= 1
    assert "missing transition" in str(err.value)


@pytest.mark.parametrize(
    "text, line",
    [
        ("not a header\n", 1),
        ("# moore-machine v1\nstates 1\nbogus 1\n", 3),
        ("# moore-machine v1\nstates x\n", 2),
    ],
)
def test_malformed_text(text, line):
    with pytest.raises(MachineFormatError) as err:
        loads(text)
    assert err.value.lineno == line


def test_dot_export_mentions_every_state(parity):
    dot = to_dot(parity)
    assert dot.startswith("digraph")
    assert "s0/0" in dot and "s1/1" in dot
