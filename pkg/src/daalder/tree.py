"""Observation tree (prefix tree acceptor) with red/blue colouring and merge folding.

Nodes live in flat parallel lists indexed by node id; ``child[node * A + a]``
holds the child of ``node`` on input ``a`` (or -1).  Merges are folds with
deterministic closure performed in place; trial merges record every write in
an undo journal and roll it back afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence

from .core import LabeledTrace, MooreMachine, Trace, minimize

WHITE, BLUE, RED = 0, 1, 2
NO_LABEL = -1

_COLOR_NAMES = {WHITE: "white", BLUE: "blue", RED: "red"}


class LabelConflictError(ValueError):
    """Two different labels were given for the same trace."""


class FoldConflict(Exception):
    """A merge plan cannot be folded without unifying two different labels."""

    def __init__(self, blue: int, red: int):
        super().__init__(f"merging node {blue} into node {red} unifies conflicting labels")
        self.blue = blue
        self.red = red


@dataclass(frozen=True)
class MergeScore:
    consistent: bool
    evidence: int


Journal = list  # of (list, index, old value)


def _undo(journal: Journal) -> None:
    for arr, idx, old in reversed(journal):
        arr[idx] = old
    journal.clear()


class ObservationTree:
    def __init__(self, num_inputs: int, num_outputs: int):
        if num_inputs < 1 or num_outputs < 1:
            raise ValueError("alphabet sizes must be positive")
        self.num_inputs = num_inputs
        self.num_outputs = num_outputs
        self.child: list[int] = [-1] * num_inputs
        self.label: list[int] = [NO_LABEL]
        self.count: list[int] = [0]
        self.parent: list[int] = [-1]
        self.via: list[int] = [-1]
        self.color: list[int] = [RED]
        self.red: list[int] = [0]
        self.label_counts = [0] * num_outputs

    # -- construction ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.label)

    @property
    def num_labeled(self) -> int:
        """Number of distinct traces stored (labelled nodes)."""
        return sum(self.label_counts)

    def _new_node(self, parent: int, sym: int) -> int:
        node = len(self.label)
        self.child.extend([-1] * self.num_inputs)
        self.label.append(NO_LABEL)
        self.count.append(0)
        self.parent.append(parent)
        self.via.append(sym)
        self.color.append(BLUE if self.color[parent] == RED else WHITE)
        self.child[parent * self.num_inputs + sym] = node
        return node

    def add_trace(self, trace: Iterable[int], label: int) -> int:
        """Insert a labelled trace; returns the id of its endpoint node."""
        if not 0 <= label < self.num_outputs:
            raise ValueError(f"label {label} outside output alphabet")
        trace = tuple(trace)
        A = self.num_inputs
        for a in trace:
            if not 0 <= a < A:
                raise ValueError(f"symbol {a} outside input alphabet")
        old = self.find(trace)
        if old >= 0 and self.label[old] not in (NO_LABEL, label):
            raise LabelConflictError(
                f"trace {trace!r} already labelled {self.label[old]}, got {label}"
            )
        node = 0
        self.count[0] += 1
        for a in trace:
            nxt = self.child[node * A + a]
            if nxt < 0:
                nxt = self._new_node(node, a)
            node = nxt
            self.count[node] += 1
        if self.label[node] == NO_LABEL:
            self.label[node] = label
            self.label_counts[label] += 1
        return node

    def find(self, trace: Sequence[int]) -> int:
        """Node reached by ``trace`` in the (unmerged) tree, or -1."""
        A = self.num_inputs
        node = 0
        for a in trace:
            node = self.child[node * A + a]
            if node < 0:
                return -1
        return node

    def contains(self, trace: Sequence[int]) -> bool:
        node = self.find(trace)
        return node >= 0 and self.label[node] != NO_LABEL

    def access_trace(self, node: int) -> Trace:
        syms = []
        while node > 0:
            syms.append(self.via[node])
            node = self.parent[node]
        return tuple(reversed(syms))

    def children(self, node: int) -> list[tuple[int, int]]:
        base = node * self.num_inputs
        return [(a, c) for a in range(self.num_inputs) if (c := self.child[base + a]) >= 0]

    def labeled_traces(self) -> Iterator[LabeledTrace]:
        """Every labelled node as (access trace, label), depth first."""
        stack: list[tuple[int, Trace]] = [(0, ())]
        A = self.num_inputs
        while stack:
            node, trace = stack.pop()
            if self.label[node] != NO_LABEL:
                yield LabeledTrace(trace, self.label[node])
            base = node * A
            for a in range(A - 1, -1, -1):
                c = self.child[base + a]
                if c >= 0:
                    stack.append((c, trace + (a,)))

    # -- colouring ---------------------------------------------------------------

    def blue_nodes(self) -> list[int]:
        """Current fringe, ordered by access trace (shorter first, then lexicographic)."""
        blues = [n for n, c in enumerate(self.color) if c == BLUE]
        blues.sort(key=lambda n: (self.depth(n), self.access_trace(n)))
        return blues

    def depth(self, node: int) -> int:
        d = 0
        while node > 0:
            node = self.parent[node]
            d += 1
        return d

    def promote(self, p: int) -> None:
        if self.color[p] != BLUE:
            raise ValueError(f"node {p} is not blue")
        self.color[p] = RED
        self.red.append(p)
        for _, c in self.children(p):
            if self.color[c] != RED:
                self.color[c] = BLUE

    def reset(self) -> None:
        """Forget the colouring: only the root stays red.  Nodes and labels are kept."""
        self.color = [WHITE] * len(self.label)
        self.color[0] = RED
        self.red = [0]
        for _, c in self.children(0):
            self.color[c] = BLUE

    # -- folding -----------------------------------------------------------------

    def _fold(self, x: int, y: int, journal: Journal | None, counts: bool = False) -> int:
        """Fold the structure under ``x`` into ``y``; returns evidence, or -1 on conflict.

        On conflict the writes made so far are left for the caller to undo.
        """
        A = self.num_inputs
        child = self.child
        label = self.label
        count = self.count
        evidence = 0
        stack = [(x, y)]
        pop, push = stack.pop, stack.append
        rng = range(A)
        while stack:
            x, y = pop()
            lx = label[x]
            if lx >= 0:
                ly = label[y]
                if ly >= 0:
                    if lx != ly:
                        return -1
                    evidence += 1
                else:
                    if journal is not None:
                        journal.append((label, y, ly))
                    label[y] = lx
            if counts:
                if journal is not None:
                    journal.append((count, y, count[y]))
                count[y] += count[x]
            bx = x * A
            by = y * A
            for a in rng:
                cx = child[bx + a]
                if cx >= 0:
                    cy = child[by + a]
                    if cy >= 0:
                        push((cx, cy))
                    else:
                        if journal is not None:
                            journal.append((child, by + a, -1))
                        child[by + a] = cx
        return evidence

    def _redirect(self, src: int, sym: int, target: int, journal: Journal | None) -> None:
        idx = src * self.num_inputs + sym
        if journal is not None:
            journal.append((self.child, idx, self.child[idx]))
        self.child[idx] = target

    def trial_merge(self, src: int, sym: int, x: int, y: int) -> MergeScore:
        """Score redirecting edge ``src --sym-->`` from ``x`` to ``y`` and folding ``x`` into ``y``.

        The tree is left unchanged.
        """
        journal: Journal = []
        self._redirect(src, sym, y, journal)
        evidence = self._fold(x, y, journal)
        _undo(journal)
        return MergeScore(evidence >= 0, max(evidence, 0))

    def check_consistency(self, p: int, q: int) -> MergeScore:
        """Score merging blue node ``p`` into red node ``q`` without changing the tree."""
        return self.trial_merge(self.parent[p], self.via[p], p, q)

    def merge(self, src: int, sym: int, x: int, y: int, journal: Journal | None = None) -> None:
        """Perform a merge (redirect plus fold, with trace counts).  Raises on conflict."""
        self._redirect(src, sym, y, journal)
        if self._fold(x, y, journal, counts=True) < 0:
            raise FoldConflict(x, y)

    # -- hypotheses ----------------------------------------------------------------

    def default_label(self) -> int:
        """Most frequent output label in the tree (smallest symbol on ties)."""
        best = max(self.label_counts)
        return self.label_counts.index(best)

    def dangling(self, states: Sequence[int], is_state: set[int]) -> dict[int, tuple[int, int]]:
        """Non-state children of ``states`` in the merged structure -> (state, symbol)."""
        A = self.num_inputs
        out: dict[int, tuple[int, int]] = {}
        for s in states:
            base = s * A
            for a in range(A):
                c = self.child[base + a]
                if c >= 0 and c not in is_state and c not in out:
                    out[c] = (s, a)
        return out

    def complete_states(
        self,
        states: list[int],
        journal: Journal | None,
        on_step: Callable[[int, int, int, int], None] | None = None,
    ) -> list[int]:
        """Red-blue merging until every transition out of ``states`` lands on a state.

        Repeatedly takes the non-state child with the most traces through it
        (smallest access trace on ties) and folds it into the consistent state
        with the most evidence (earliest state on ties), or makes it a state
        when none is consistent.  ``states`` is extended in place and returned.
        ``on_step(node, traces, consistent_candidates, chosen_state_or_-1)`` is
        called after every decision.
        """
        is_state = set(states)
        while True:
            fringe = self.dangling(states, is_state)
            if not fringe:
                return states
            node = min(fringe, key=lambda n: (-self.count[n], self.access_trace(n)))
            src, sym = fringe[node]
            traces = self.count[node]
            best, best_ev, consistent = -1, -1, 0
            for t in states:
                score = self.trial_merge(src, sym, node, t)
                if score.consistent:
                    consistent += 1
                    if score.evidence > best_ev:
                        best, best_ev = t, score.evidence
            if best < 0:
                states.append(node)
                is_state.add(node)
            else:
                self.merge(src, sym, node, best, journal)
            if on_step is not None:
                on_step(node, traces, consistent, best)

    def quotient(self, states: Sequence[int]) -> MooreMachine:
        """Moore machine over ``states`` in the current merged structure.

        Missing transitions go to one extra absorbing state carrying
        :meth:`default_label`; unlabelled states output symbol 0.
        """
        A = self.num_inputs
        index = {s: i for i, s in enumerate(states)}
        sink = len(states)
        delta = []
        need_sink = False
        for s in states:
            row = []
            for a in range(A):
                c = self.child[s * A + a]
                if c < 0:
                    row.append(sink)
                    need_sink = True
                else:
                    row.append(index[c])
            delta.append(row)
        outputs = [max(self.label[s], 0) for s in states]
        if need_sink:
            delta.append([sink] * A)
            outputs.append(self.default_label())
        return MooreMachine.build(
            delta, outputs, initial=index[0], num_inputs=A, num_outputs=self.num_outputs
        )

    def build_hypothesis(self, plan: Sequence[tuple[int, int]]) -> MooreMachine:
        """Fold every (blue, red) pair of ``plan`` and return the minimised quotient.

        Raises :class:`FoldConflict` if a pair no longer folds consistently
        after the pairs before it.  The tree is restored either way.
        """
        journal: Journal = []
        try:
            for p, q in plan:
                self.merge(self.parent[p], self.via[p], p, q, journal)
            states = self.complete_states(list(self.red), journal)
            machine = self.quotient(states)
        finally:
            _undo(journal)
        return minimize(machine)

    # -- debugging -----------------------------------------------------------------

    def to_dot(self, name: str = "tree") -> str:
        fill = {WHITE: "white", BLUE: "lightblue", RED: "salmon"}
        out = [f"digraph {name} {{", "  node [shape=circle, style=filled];"]
        for n in range(len(self.label)):
            lab = "?" if self.label[n] == NO_LABEL else str(self.label[n])
            out.append(
                f'  n{n} [label="{lab}\\n#{self.count[n]}", fillcolor={fill[self.color[n]]}, '
                f'tooltip="{_COLOR_NAMES[self.color[n]]}"];'
            )
            for a, c in self.children(n):
                out.append(f'  n{n} -> n{c} [label="{a}"];')
        out.append("}")
        return "\n".join(out) + "\n"
