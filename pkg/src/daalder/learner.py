"""DAALder: state merging that pulls its data from a trace store on demand.

The learner keeps an observation tree holding only the traces it has asked
for.  Each round classifies the blue fringe against the red core: a blue node
with exactly one consistent red candidate is identified, one with none is
promoted, and one with several is unidentified.  Unidentified nodes whose best
candidate does not clearly beat the runner-up trigger prefix queries for the
nodes involved; the answers are inserted at the start of the next round.
Once a round neither promotes nor finds new data, the merges are folded into
a hypothesis and checked against a streaming equivalence oracle.
"""

from __future__ import annotations

import enum
import json
import math
import time
import tracemalloc
from dataclasses import asdict, dataclass, field
from itertools import islice
from typing import Callable, TextIO

from .core import LabeledTrace, MooreMachine, Trace
from .oracles import randomized_equivalence
from .store import TraceStore
from .tree import FoldConflict, ObservationTree

DEFAULT_ORACLE_BUDGET = 50_000


@dataclass
class LearnerConfig:
    k: int = 10
    n: int | None = None
    ambiguity_factor: float = 2.0
    # None: reset once new traces exceed half the traces in the tree
    reset_threshold: float | None = None
    init_fringe_traces: int = 32
    # None: the oracle streams the whole store
    oracle_budget: int | None = DEFAULT_ORACLE_BUDGET
    max_oracle_calls: int | None = None
    seed: int = 0
    verify_hypotheses: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.n is not None and self.n < 0:
            raise ValueError("n must be non-negative")
        if not self.ambiguity_factor > 1:
            raise ValueError("ambiguity_factor must exceed 1")
        if self.reset_threshold is not None and self.reset_threshold < 0:
            raise ValueError("reset_threshold must be non-negative")
        if self.init_fringe_traces < 0:
            raise ValueError("init_fringe_traces must be non-negative")
        if self.oracle_budget is not None and self.oracle_budget < 1:
            raise ValueError("oracle_budget must be positive")


@dataclass
class MergePlan:
    """Ordered (blue, red) identifications.

    ``forced`` holds the blue nodes whose pair is only a tie-break after their
    queries came back empty; those are re-decided on the folded structure
    when the hypothesis is built.
    """

    pairs: list[tuple[int, int]] = field(default_factory=list)
    forced: set[int] = field(default_factory=set)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def add(self, blue: int, red: int, forced: bool = False) -> None:
        self.pairs.append((blue, red))
        if forced:
            self.forced.add(blue)

    def extend(self, other: MergePlan | list[tuple[int, int]]) -> MergePlan:
        merged = MergePlan(self.pairs + list(other), set(self.forced))
        if isinstance(other, MergePlan):
            merged.forced |= other.forced
        return merged


@dataclass
class RoundOutcome:
    identified: list[tuple[int, int]] = field(default_factory=list)
    unidentified: list[int] = field(default_factory=list)
    isolated: bool = False
    promoted: list[int] = field(default_factory=list)
    new_traces_added: int = 0
    # blue node -> [(red, evidence)] for every consistent red, in red creation order
    scores: dict[int, list[tuple[int, int]]] = field(default_factory=dict)


@dataclass
class LearnStats:
    rounds: int = 0
    queries: int = 0
    oracle_calls: int = 0
    oracle_records_checked: int = 0
    resets: int = 0
    traces_included: int = 0
    tree_nodes: int = 0
    hypothesis_states: int = 0
    accepted: bool = False
    exhausted: bool = False
    hypothesis_checks: int = 0
    consistency_violations: int = 0
    peak_memory_bytes: int | None = None
    log: list[dict] = field(default_factory=list)

    @property
    def no_characteristic_set(self) -> bool:
        """The learner had to pull in the whole store, or gave up before acceptance."""
        return self.exhausted or not self.accepted

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("log")
        d["no_characteristic_set"] = self.no_characteristic_set
        return d

    def write_log(self, out: TextIO) -> None:
        for rec in self.log:
            out.write(json.dumps(rec) + "\n")


class Decision(enum.Enum):
    CALL_ORACLE = "call_oracle"
    RESET_AND_CONTINUE = "reset_and_continue"


class QueryBuffer:
    """Prefix queries against the store, with answers staged until the next round.

    The store is immutable and answers are deterministic, so a prefix that
    was already asked is not asked again.
    """

    def __init__(self, store: TraceStore, tree: ObservationTree, k: int, n: int | None):
        self.store = store
        self.tree = tree
        self.k = k
        self.n = n
        self.staged: dict[Trace, int] = {}
        self.asked: set[Trace] = set()
        self.queries = 0

    def stage(self, lt: LabeledTrace) -> bool:
        if lt.trace in self.staged or self.tree.contains(lt.trace):
            return False
        self.staged[lt.trace] = lt.label
        return True

    def query(self, prefix: Trace) -> int:
        """Ask for traces extending ``prefix``; returns how many were new."""
        if prefix in self.asked:
            return 0
        self.asked.add(prefix)
        self.queries += 1
        return sum(self.stage(lt) for lt in self.store.prefix_query(prefix, self.n, self.k))

    def flush(self) -> int:
        added = 0
        for trace, label in self.staged.items():
            if not self.tree.contains(trace):
                self.tree.add_trace(trace, label)
                added += 1
        self.staged.clear()
        return added


def classify_fringe(tree: ObservationTree) -> RoundOutcome:
    """Sort every blue node into identified, unidentified or isolated (and promote the latter).

    Blue nodes are visited in shortlex order of their access traces and
    compared with the red nodes in creation order, including reds promoted
    earlier in the same pass.
    """
    out = RoundOutcome()
    for p in tree.blue_nodes():
        consistent = []
        for q in tree.red:
            score = tree.check_consistency(p, q)
            if score.consistent:
                consistent.append((q, score.evidence))
        if not consistent:
            tree.promote(p)
            out.promoted.append(p)
            out.isolated = True
        elif len(consistent) == 1:
            out.identified.append((p, consistent[0][0]))
        else:
            out.unidentified.append(p)
        out.scores[p] = consistent
    return out


def _ranked(tree: ObservationTree, candidates: list[tuple[int, int]]) -> list[tuple[int, int]]:
    return sorted(candidates, key=lambda qe: (-qe[1], tree.access_trace(qe[0])))


def process_unidentified(
    tree: ObservationTree,
    buffer: QueryBuffer,
    unidentified: list[int],
    cfg: LearnerConfig,
    scores: dict[int, list[tuple[int, int]]] | None = None,
) -> tuple[bool, MergePlan]:
    """Resolve clear-cut merges; ask for more data on the doubtful ones.

    A node merges with its best candidate when the best evidence is at least
    ``ambiguity_factor`` times the second best.  Otherwise the access traces
    of the node and of every candidate within that factor of the best are
    queried.  If none of those queries yields a trace new to the tree, the
    node falls back to its best candidate (highest evidence, then smallest
    red access trace), marked as forced.
    """
    explore_more = False
    plan = MergePlan()
    for p in unidentified:
        if scores is not None and p in scores:
            cands = scores[p]
        else:
            cands = []
            for q in tree.red:
                s = tree.check_consistency(p, q)
                if s.consistent:
                    cands.append((q, s.evidence))
        ranked = _ranked(tree, cands)
        best_q, best = ranked[0]
        second = ranked[1][1] if len(ranked) > 1 else 0
        if best >= cfg.ambiguity_factor * second:
            plan.add(p, best_q)
            continue
        involved = [p] + [q for q, ev in ranked if ev == best or cfg.ambiguity_factor * ev > best]
        new = sum(buffer.query(tree.access_trace(node)) for node in involved)
        if new:
            explore_more = True
        else:
            plan.add(p, best_q, forced=True)
    return explore_more, plan


def process_counterexample(
    tree: ObservationTree, buffer: QueryBuffer, sigma: LabeledTrace
) -> int:
    """Add the counterexample, query every proper prefix of it, then reset the colouring.

    Returns the number of traces staged by the queries.
    """
    if not tree.contains(sigma.trace):
        tree.add_trace(sigma.trace, sigma.label)
    staged = sum(buffer.query(sigma.trace[:i]) for i in range(len(sigma.trace)))
    tree.reset()
    return staged


def decide_oracle_or_reset(
    new_traces_added: int, cfg: LearnerConfig, tree_traces: int = 0
) -> Decision:
    threshold = cfg.reset_threshold
    if threshold is None:
        threshold = 0.5 * tree_traces
    if new_traces_added > threshold:
        return Decision.RESET_AND_CONTINUE
    return Decision.CALL_ORACLE


def build_hypothesis(tree: ObservationTree, plan: MergePlan | list[tuple[int, int]]) -> MooreMachine:
    """Fold the plan and complete the rest greedily.

    Unforced pairs are folded with the blue node carrying the most traces
    first.  Forced pairs, and pairs that conflict with the ones folded before
    them, are left to :meth:`ObservationTree.complete_states`, which decides
    them on the folded structure.
    """
    forced = plan.forced if isinstance(plan, MergePlan) else set()
    plan = sorted(
        ((p, q) for p, q in plan if p not in forced),
        key=lambda pq: (-tree.count[pq[0]], tree.access_trace(pq[0])),
    )
    while True:
        try:
            return tree.build_hypothesis(plan)
        except FoldConflict as e:
            plan = [(p, q) for p, q in plan if p != e.blue]


def count_inconsistencies(tree: ObservationTree, h: MooreMachine) -> int:
    return sum(h(trace) != label for trace, label in tree.labeled_traces())


def learn(
    store: TraceStore,
    cfg: LearnerConfig | None = None,
    guard: Callable[[], None] | None = None,
) -> tuple[MooreMachine, LearnStats]:
    """Learn a Moore machine from ``store``, reading only the traces it asks for."""
    cfg = cfg or LearnerConfig()
    if store.record_count == 0:
        raise ValueError("cannot learn from an empty store")
    guard = guard or (lambda: None)
    t0 = time.perf_counter()
    tree = ObservationTree(store.input_size, store.output_size)
    buffer = QueryBuffer(store, tree, cfg.k, cfg.n)
    stats = LearnStats()
    for lt in islice(store.random_stream(cfg.seed), cfg.init_fringe_traces):
        buffer.stage(lt)

    new_since_oracle = 0
    h: MooreMachine | None = None
    while True:
        guard()
        added = buffer.flush()
        new_since_oracle += added
        outcome = classify_fringe(tree) if tree.blue_nodes() else RoundOutcome()
        outcome.new_traces_added = added
        queries_before = buffer.queries
        explore_more, merges = process_unidentified(
            tree, buffer, outcome.unidentified, cfg, outcome.scores
        )
        stats.rounds += 1
        stats.log.append(
            {
                "event": "round",
                "round": stats.rounds,
                "fringe": len(outcome.scores),
                "identified": len(outcome.identified),
                "unidentified": len(outcome.unidentified),
                "isolated": len(outcome.promoted),
                "red": len(tree.red),
                "queries": buffer.queries - queries_before,
                "new_traces": added,
                "traces_included": tree.num_labeled,
                "elapsed": round(time.perf_counter() - t0, 6),
            }
        )
        if explore_more or outcome.isolated:
            continue
        if decide_oracle_or_reset(new_since_oracle, cfg, tree.num_labeled) is Decision.RESET_AND_CONTINUE:
            tree.reset()
            stats.resets += 1
            new_since_oracle = 0
            continue

        h = build_hypothesis(tree, MergePlan(outcome.identified).extend(merges))
        if cfg.verify_hypotheses:
            stats.hypothesis_checks += 1
            stats.consistency_violations += count_inconsistencies(tree, h)
        if cfg.max_oracle_calls is not None and stats.oracle_calls >= cfg.max_oracle_calls:
            break
        stats.oracle_calls += 1
        verdict = randomized_equivalence(
            store, h, cfg.oracle_budget, seed=cfg.seed + stats.oracle_calls, guard=guard
        )
        stats.oracle_records_checked += verdict.checked
        new_since_oracle = 0
        stats.log.append(
            {
                "event": "oracle",
                "call": stats.oracle_calls,
                "states": h.num_states,
                "checked": verdict.checked,
                "counterexample": None if verdict.accepted else list(verdict.counterexample.trace),
                "elapsed": round(time.perf_counter() - t0, 6),
            }
        )
        if verdict.accepted:
            stats.accepted = True
            break
        process_counterexample(tree, buffer, verdict.counterexample)

    stats.queries = buffer.queries
    stats.traces_included = tree.num_labeled
    stats.tree_nodes = len(tree)
    stats.hypothesis_states = h.num_states
    stats.exhausted = tree.num_labeled >= store.record_count
    if tracemalloc.is_tracing():
        stats.peak_memory_bytes = tracemalloc.get_traced_memory()[1]
    return h, stats
