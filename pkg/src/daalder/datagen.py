"""Random target machines and random-walk trace sampling."""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, Sequence

from . import abbadingo
from .core import LabeledTrace, MooreMachine, dumps, minimize
from .store import TraceStore

MAX_TARGET_TRIES = 1000


class GenerationError(RuntimeError):
    pass


def gen_target(
    num_states: int, input_size: int = 2, output_size: int = 2, seed: int = 0
) -> MooreMachine:
    """Random minimal Moore machine with between 90% and 100% of ``num_states`` states.

    Drafts have ``ceil(5/4 * num_states)`` states with uniform random
    transitions and outputs; roughly a fifth of a random draft is unreachable,
    so the trimmed, minimised result lands near ``num_states``.  Results
    outside the size band are rejected and redrawn from a derived seed.
    """
    if num_states < 1 or input_size < 1 or output_size < 1:
        raise ValueError("num_states and alphabet sizes must be positive")
    lo = math.ceil(0.9 * num_states)
    size = math.ceil(1.25 * num_states)
    rng = random.Random(seed)
    for _ in range(MAX_TARGET_TRIES):
        draft = random.Random(rng.getrandbits(64))
        delta = [[draft.randrange(size) for _ in range(input_size)] for _ in range(size)]
        outputs = [draft.randrange(output_size) for _ in range(size)]
        m = minimize(
            MooreMachine.build(delta, outputs, num_inputs=input_size, num_outputs=output_size)
        )
        if lo <= m.num_states <= num_states:
            return m
    raise GenerationError(
        f"no machine with {lo}..{num_states} states after {MAX_TARGET_TRIES} draws"
    )


def gen_traces(
    m: MooreMachine,
    count: int,
    len_min: int,
    len_max: int,
    seed: int,
    *,
    coverage_biased: bool = True,
) -> Iterator[LabeledTrace]:
    """Yield up to ``count`` distinct labelled traces drawn by random walks on ``m``.

    Each walk has a length drawn uniformly from ``[len_min, len_max]``.  With
    ``coverage_biased`` the next input is chosen with probability
    proportional to ``1 / (1 + visits(successor))``, where ``visits`` counts
    every state entered by every walk so far; otherwise inputs are uniform.
    Gives up with a warning after ``100 * count`` draws.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if not 0 <= len_min <= len_max:
        raise ValueError("need 0 <= len_min <= len_max")
    rng = random.Random(seed)
    A = m.num_inputs
    delta, outputs = m.delta, m.outputs
    visits = [0] * m.num_states
    seen: set[tuple[int, ...]] = set()
    attempts = 0
    while len(seen) < count and attempts < 100 * count:
        attempts += 1
        length = rng.randint(len_min, len_max)
        s = m.initial
        visits[s] += 1
        trace = []
        for _ in range(length):
            row = delta[s]
            if coverage_biased:
                weights = [1.0 / (1 + visits[row[a]]) for a in range(A)]
                x = rng.random() * sum(weights)
                a = 0
                while a < A - 1 and x >= weights[a]:
                    x -= weights[a]
                    a += 1
            else:
                a = rng.randrange(A)
            s = row[a]
            visits[s] += 1
            trace.append(a)
        t = tuple(trace)
        if t in seen:
            continue
        seen.add(t)
        yield LabeledTrace(t, outputs[s])
    if len(seen) < count:
        warnings.warn(
            f"only {len(seen)} distinct traces of {count} requested after {attempts} draws",
            RuntimeWarning,
            stacklevel=2,
        )


@dataclass
class DatasetSpec:
    train_sizes: list[int]
    test_size: int
    len_min: int
    len_max: int
    seed: int

    def __post_init__(self) -> None:
        if not self.train_sizes or any(s < 1 for s in self.train_sizes):
            raise ValueError("train sizes must be positive")
        if any(b <= a for a, b in zip(self.train_sizes, self.train_sizes[1:])):
            raise ValueError("train sizes must be strictly increasing")
        if self.test_size < 1:
            raise ValueError("test_size must be positive")


def full_scale_spec(seed: int = 0) -> DatasetSpec:
    """625 * 4**i training traces up to 40,960,000, lengths 2..64, 1,000,000 test traces."""
    return DatasetSpec([625 * 4**i for i in range(9)], 1_000_000, 2, 64, seed)


def desk_scale_spec(seed: int = 0) -> DatasetSpec:
    return DatasetSpec([100, 400, 1600, 6400, 25600], 20_000, 2, 16, seed)


@dataclass
class Dataset:
    root: Path
    target: MooreMachine
    train: dict[int, Path]
    test: Path

    def train_store(self, size: int) -> TraceStore:
        return TraceStore.open(self.train[size])

    def test_store(self) -> TraceStore:
        return TraceStore.open(self.test)


def train_name(size: int) -> str:
    return f"train_{size:09d}"


def make_dataset(m: MooreMachine, spec: DatasetSpec, out_dir: str | Path) -> Dataset:
    """Write nested training sets and a disjoint test set, as text files and stores.

    One stream of distinct traces is drawn; the training set of size ``s``
    is its first ``s`` traces and the test set the ``test_size`` traces after
    the largest training set.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "target.moore").write_text(dumps(m))
    sizes = spec.train_sizes
    largest = sizes[-1]
    stream = gen_traces(m, largest + spec.test_size, spec.len_min, spec.len_max, spec.seed)

    files = {s: open(out / f"{train_name(s)}.txt", "w") for s in sizes}
    test_file = open(out / "test.txt", "w")
    counts = dict.fromkeys(sizes, 0)
    test_count = 0
    header = " " * 24 + "\n"
    try:
        for f in (*files.values(), test_file):
            f.write(header)
        for i, (trace, label) in enumerate(stream):
            line = f"{label} {len(trace)}" + ("".join(f" {a}" for a in trace)) + "\n"
            if i < largest:
                for s in sizes:
                    if i < s:
                        files[s].write(line)
                        counts[s] += 1
            else:
                test_file.write(line)
                test_count += 1
        for s, f in files.items():
            f.seek(0)
            f.write(f"{counts[s]} {m.num_inputs}".ljust(24))
        test_file.seek(0)
        test_file.write(f"{test_count} {m.num_inputs}".ljust(24))
    finally:
        for f in (*files.values(), test_file):
            f.close()
    if counts[largest] < largest or test_count < spec.test_size:
        raise GenerationError("target language too small for the requested dataset sizes")

    train = {}
    for s in sizes:
        path = out / f"store_{train_name(s)}"
        TraceStore.build(
            abbadingo.read_traces(out / f"{train_name(s)}.txt"), path, m.num_inputs, m.num_outputs
        ).close()
        train[s] = path
    test_path = out / "store_test"
    TraceStore.build(
        abbadingo.read_traces(out / "test.txt"), test_path, m.num_inputs, m.num_outputs
    ).close()
    (out / "dataset.json").write_text(
        json.dumps(
            {
                "spec": asdict(spec),
                "num_states": m.num_states,
                "train": {str(s): p.name for s, p in train.items()},
                "test": test_path.name,
            },
            indent=2,
        )
        + "\n"
    )
    return Dataset(out, m, train, test_path)
