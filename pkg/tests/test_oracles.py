from __future__ import annotations

import random

from daalder.core import MooreMachine
from daalder.oracles import exact_equivalence, randomized_equivalence

from conftest import exhaustive_sample, random_machine


def test_generator_accepted_at_any_budget(make_store, parity):
    s = make_store(exhaustive_sample(parity, 6))
    for budget in (1, 10, None):
        v = randomized_equivalence(s, parity, budget=budget, seed=3)
        assert v.accepted
    assert randomized_equivalence(s, parity, budget=None).checked == s.record_count


def test_flipped_initial_output_finds_empty_trace(make_store):
    m = MooreMachine.build([[0, 0]], [1], num_outputs=2)
    flipped = MooreMachine.build([[0, 0]], [0], num_outputs=2)
    s = make_store([((), 1)])
    v = randomized_equivalence(s, flipped, budget=None, seed=0)
    assert v.counterexample == ((), 1)
    assert randomized_equivalence(s, m).accepted


def test_poisoned_record_found_with_full_budget(make_store):
    m = random_machine(random.Random(1), 6)
    rng = random.Random(2)
    recs = {}
    while len(recs) < 1000:
        t = tuple(rng.randrange(2) for _ in range(rng.randint(0, 14)))
        recs[t] = m(t)
    poisoned = sorted(recs)[417]
    recs[poisoned] = 1 - recs[poisoned]
    s = make_store(recs.items())
    for seed in range(10):
        v = randomized_equivalence(s, m, budget=None, seed=seed)
        assert v.counterexample == (poisoned, recs[poisoned])


def test_budget_limits_records_checked(make_store, parity):
    s = make_store(exhaustive_sample(parity, 6))
    assert randomized_equivalence(s, parity, budget=17).checked == 17


def test_same_seed_same_counterexample(make_store, parity):
    s = make_store(exhaustive_sample(parity, 6))
    const = MooreMachine.build([[0, 0]], [0], num_outputs=2)
    a = randomized_equivalence(s, const, budget=50, seed=9)
    b = randomized_equivalence(s, const, budget=50, seed=9)
    assert a == b and not a.accepted
    trace, label = a.counterexample
    assert const(trace) != label


def test_full_budget_accepts_iff_consistent(make_store):
    rng = random.Random(8)
    target = random_machine(rng, 4)
    s = make_store(exhaustive_sample(target, 5))
    for _ in range(30):
        h = random_machine(rng, rng.randint(1, 4))
        consistent = all(h(t) == lab for t, lab in s)
        assert randomized_equivalence(s, h, budget=None, seed=rng.randrange(100)).accepted == consistent


def test_exact_accepts_equivalent(parity):
    bigger = MooreMachine.build([[2, 1], [1, 0], [0, 3], [3, 2]], [0, 1, 0, 1])
    assert exact_equivalence(parity, bigger).accepted


def test_exact_finds_shortest_after_rerouting(parity):
    rerouted = MooreMachine.build([[0, 1], [0, 0]], [0, 1])  # delta(1, 0) now 0
    v = exact_equivalence(parity, rerouted)
    assert v.counterexample is not None
    trace, label = v.counterexample
    assert trace == (1, 0)
    assert label == parity(trace) != rerouted(trace)
