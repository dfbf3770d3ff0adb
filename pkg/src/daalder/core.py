"""Moore machines over integer alphabets: evaluation, minimization, equivalence, text I/O.

Symbols are plain integers ``0..size-1``; a trace is a tuple of input symbols.
A trace's label is the output of the state it ends in.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

Trace = tuple[int, ...]

FORMAT_HEADER = "# moore-machine v1"


class InputDomainError(ValueError):
    """A symbol outside the machine's input alphabet was supplied."""


class MachineFormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class LabeledTrace(NamedTuple):
    trace: Trace
    label: int


@dataclass(frozen=True)
class MooreMachine:
    """Complete deterministic Moore machine.

    ``delta[s][a]`` is the successor of state ``s`` on input ``a`` and
    ``outputs[s]`` the output symbol of ``s``.
    """

    num_inputs: int
    num_outputs: int
    initial: int
    delta: tuple[tuple[int, ...], ...]
    outputs: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.outputs)
        if n < 1:
            raise ValueError("a Moore machine needs at least one state")
        if self.num_inputs < 1 or self.num_outputs < 1:
            raise ValueError("alphabet sizes must be positive")
        if not 0 <= self.initial < n:
            raise ValueError(f"initial state {self.initial} out of range")
        if len(self.delta) != n:
            raise ValueError("delta must have one row per state")
        for s, row in enumerate(self.delta):
            if len(row) != self.num_inputs:
                raise ValueError(f"state {s}: delta row is incomplete")
            for t in row:
                if not 0 <= t < n:
                    raise ValueError(f"state {s}: transition target {t} out of range")
        for s, o in enumerate(self.outputs):
            if not 0 <= o < self.num_outputs:
                raise ValueError(f"state {s}: output {o} out of range")

    @classmethod
    def build(
        cls,
        delta: Sequence[Sequence[int]],
        outputs: Sequence[int],
        *,
        initial: int = 0,
        num_inputs: int | None = None,
        num_outputs: int | None = None,
    ) -> MooreMachine:
        if num_inputs is None:
            num_inputs = len(delta[0]) if delta else 1
        if num_outputs is None:
            num_outputs = max(outputs, default=0) + 1
        return cls(
            num_inputs,
            num_outputs,
            initial,
            tuple(tuple(row) for row in delta),
            tuple(outputs),
        )

    @property
    def num_states(self) -> int:
        return len(self.outputs)

    def run(self, trace: Iterable[int]) -> int:
        """Return the state reached from the initial state along ``trace``."""
        delta = self.delta
        k = self.num_inputs
        s = self.initial
        for a in trace:
            if not 0 <= a < k:
                raise InputDomainError(f"symbol {a!r} not in input alphabet of size {k}")
            s = delta[s][a]
        return s

    def __call__(self, trace: Iterable[int]) -> int:
        return self.outputs[self.run(trace)]


def evaluate(m: MooreMachine, trace: Iterable[int]) -> int:
    return m.outputs[m.run(trace)]


def reachable_states(m: MooreMachine) -> list[int]:
    """States reachable from the initial state, in breadth-first (shortlex) order."""
    order = [m.initial]
    seen = {m.initial}
    i = 0
    while i < len(order):
        for t in m.delta[order[i]]:
            if t not in seen:
                seen.add(t)
                order.append(t)
        i += 1
    return order


def minimize(m: MooreMachine) -> MooreMachine:
    """Minimal equivalent machine, states numbered in BFS order from the initial state.

    Equivalent minimal machines therefore come out identical, not just isomorphic.
    """
    states = reachable_states(m)
    index = {s: i for i, s in enumerate(states)}
    delta = [[index[m.delta[s][a]] for a in range(m.num_inputs)] for s in states]
    outputs = [m.outputs[s] for s in states]

    # Moore refinement, starting from the output partition.
    block = _renumber([(o,) for o in outputs])
    num_blocks = max(block) + 1
    while True:
        sig = [(block[s],) + tuple(block[t] for t in delta[s]) for s in range(len(states))]
        new_block = _renumber(sig)
        new_count = max(new_block) + 1
        block = new_block
        if new_count == num_blocks:
            break
        num_blocks = new_count

    rep: dict[int, int] = {}
    for s, b in enumerate(block):
        rep.setdefault(b, s)
    q_delta = [[block[delta[rep[b]][a]] for a in range(m.num_inputs)] for b in range(num_blocks)]
    q_outputs = [outputs[rep[b]] for b in range(num_blocks)]
    quotient = MooreMachine.build(
        q_delta, q_outputs, initial=block[0], num_inputs=m.num_inputs, num_outputs=m.num_outputs
    )
    return canonical(quotient)


def _renumber(keys: list) -> list[int]:
    ids: dict = {}
    return [ids.setdefault(k, len(ids)) for k in keys]


def canonical(m: MooreMachine) -> MooreMachine:
    """Drop unreachable states and renumber the rest in BFS order."""
    states = reachable_states(m)
    index = {s: i for i, s in enumerate(states)}
    return MooreMachine.build(
        [[index[m.delta[s][a]] for a in range(m.num_inputs)] for s in states],
        [m.outputs[s] for s in states],
        initial=0,
        num_inputs=m.num_inputs,
        num_outputs=m.num_outputs,
    )


def equivalent(a: MooreMachine, b: MooreMachine) -> Trace | None:
    """Shortest trace on which ``a`` and ``b`` disagree, or ``None`` if they are equivalent."""
    if a.num_inputs != b.num_inputs:
        raise ValueError(
            f"input alphabet mismatch: {a.num_inputs} vs {b.num_inputs}"
        )
    start = (a.initial, b.initial)
    parent: dict[tuple[int, int], tuple[tuple[int, int], int] | None] = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        sa, sb = pair
        if a.outputs[sa] != b.outputs[sb]:
            trace = []
            cur = pair
            while parent[cur] is not None:
                cur, sym = parent[cur]
                trace.append(sym)
            return tuple(reversed(trace))
        for sym in range(a.num_inputs):
            nxt = (a.delta[sa][sym], b.delta[sb][sym])
            if nxt not in parent:
                parent[nxt] = (pair, sym)
                queue.append(nxt)
    return None


# -- text formats -----------------------------------------------------------


def dumps(m: MooreMachine) -> str:
    lines = [
        FORMAT_HEADER,
        f"states {m.num_states}",
        f"inputs {m.num_inputs}",
        f"outputs {m.num_outputs}",
        f"initial {m.initial}",
    ]
    lines += [f"output {s} {o}" for s, o in enumerate(m.outputs)]
    for s, row in enumerate(m.delta):
        lines += [f"delta {s} {a} {t}" for a, t in enumerate(row)]
    return "\n".join(lines) + "\n"


def loads(text: str) -> MooreMachine:
    """Parse the text format written by :func:`dumps`."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise MachineFormatError(1, f"expected header {FORMAT_HEADER!r}")
    header: dict[str, int] = {}
    outputs: dict[int, int] = {}
    delta: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            nums = [int(x) for x in parts[1:]]
        except ValueError:
            raise MachineFormatError(lineno, f"non-integer field in {line!r}") from None
        key = parts[0]
        if key in ("states", "inputs", "outputs", "initial"):
            if len(nums) != 1:
                raise MachineFormatError(lineno, f"{key} takes one value")
            header[key] = nums[0]
        elif key == "output":
            if len(nums) != 2:
                raise MachineFormatError(lineno, "output takes <state> <symbol>")
            outputs[nums[0]] = nums[1]
        elif key == "delta":
            if len(nums) != 3:
                raise MachineFormatError(lineno, "delta takes <state> <input> <target>")
            delta[nums[0], nums[1]] = nums[2]
        else:
            raise MachineFormatError(lineno, f"unknown record {key!r}")
    last = len(lines)
    for key in ("states", "inputs", "outputs", "initial"):
        if key not in header:
            raise MachineFormatError(last, f"missing {key!r} record")
    n, k = header["states"], header["inputs"]
    try:
        out = [outputs[s] for s in range(n)]
    except KeyError as e:
        raise MachineFormatError(last, f"missing output for state {e.args[0]}") from None
    try:
        rows = [[delta[s, a] for a in range(k)] for s in range(n)]
    except KeyError as e:
        raise MachineFormatError(last, f"missing transition {e.args[0]}") from None
    try:
        return MooreMachine.build(
            rows, out, initial=header["initial"], num_inputs=k, num_outputs=header["outputs"]
        )
    except ValueError as e:
        raise MachineFormatError(last, str(e)) from None


def to_dot(m: MooreMachine, name: str = "moore") -> str:
    """Graphviz rendering; parallel edges are collapsed into one labelled edge."""
    out = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point, label=""];']
    for s, o in enumerate(m.outputs):
        out.append(f'  s{s} [shape=circle, label="s{s}/{o}"];')
    out.append(f"  __start -> s{m.initial};")
    for s, row in enumerate(m.delta):
        by_target: dict[int, list[int]] = {}
        for a, t in enumerate(row):
            by_target.setdefault(t, []).append(a)
        for t, syms in by_target.items():
            out.append(f'  s{s} -> s{t} [label="{",".join(map(str, syms))}"];')
    out.append("}")
    return "\n".join(out) + "\n"
