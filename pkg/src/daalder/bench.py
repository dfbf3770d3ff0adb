"""Benchmark harness: guarded learner runs, accuracy, sweeps, manifests and CSV output.

Memory is the peak of Python allocations traced by :mod:`tracemalloc` while
the learner runs.  Store pages are memory-mapped and not counted; they live
in the OS page cache, outside the learner.  A background thread samples the
traced size several times a second and the learners call a cooperative guard
that raises once the memory budget or the deadline is exceeded.
"""

from __future__ import annotations

import configparser
import csv
import gc
import io
import json
import os
import random
import shutil
import subprocess
import sys
import threading
import time
import tracemalloc
from array import array
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable

from .core import MooreMachine, dumps, loads
from .datagen import DatasetSpec, gen_target, make_dataset
from .edsm import edsm_learn
from .learner import DEFAULT_ORACLE_BUDGET, LearnerConfig, learn
from .store import TraceStore

MANIFEST_FORMAT = "daalder-sweep"
MANIFEST_VERSION = 1
ALGORITHMS = ("edsm", "daalder")
STATUSES = ("ok", "oom", "timeout", "no-characteristic-set")
DEFAULT_TIMEOUT_S = 30 * 60.0
DEFAULT_MEMORY_BUDGET = 4 << 30
SAMPLE_INTERVAL_S = 0.1


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class MemoryBudgetExceeded(RuntimeError):
    pass


class RunTimeout(RuntimeError):
    pass


@dataclass
class RunRecord:
    target: int | None
    algorithm: str
    dataset_size: int
    k: int | None
    wall_time_s: float
    peak_memory_bytes: int | None
    accuracy: float | None
    traces_included: int | None
    fraction_included: float | None
    status: str

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        return cls(**{name: d.get(name) for name in cls.columns()})


# -- limits -------------------------------------------------------------------


class Monitor:
    """Memory sampler plus the guard callable handed to the learners.

    A background thread raises a "sample due" flag every ``interval``
    seconds; the learner's next :meth:`guard` call takes the sample inline.
    Sampling folds the traced peak so far into the running peak and then
    resets the tracemalloc peak, so the sampler's own short-lived objects
    never show up in the reported peak and the result does not depend on
    when samples happen.  If the guard goes quiet for several intervals the
    thread samples by itself.

    Start the monitor before :func:`tracemalloc.start` and stop it after
    :func:`tracemalloc.stop`, so thread start-up is not traced.
    """

    def __init__(self, memory_budget: int | None, timeout_s: float | None,
                 interval: float = SAMPLE_INTERVAL_S, starved_ticks: int = 3):
        self.memory_budget = -1 if memory_budget is None else memory_budget
        self.timeout_s = timeout_s
        self.interval = interval
        # ticks without a guard call before the thread samples by itself; 0 samples every tick
        self.starved_ticks = starved_ticks
        # [samples taken, peak seen, largest sample]; plain C slots, no allocation on update
        self._stats = array("q", [0, 0, 0])
        self.breached = False
        self._stopped = False
        self._due = False
        self._ticks = 0
        self._deadline = float("inf")
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self) -> None:
        # nothing in this loop allocates, apart from the rare starved-guard sample
        while not self._stopped:
            time.sleep(self.interval)
            if self._stopped:
                break
            self._due = True
            if self._ticks < self.starved_ticks:
                self._ticks += 1
            elif tracemalloc.is_tracing():
                self._ticks = 0
                self._absorb()

    def _absorb(self) -> None:
        self._due = False
        cur, peak = tracemalloc.get_traced_memory()
        st = self._stats
        st[0] += 1
        if peak > st[1]:
            st[1] = peak
        if cur > st[2]:
            st[2] = cur
        if 0 <= self.memory_budget < cur:
            self.breached = True
        del cur, peak, st
        tracemalloc.reset_peak()

    def start(self) -> Monitor:
        if self.timeout_s is not None:
            self._deadline = time.perf_counter() + self.timeout_s
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stopped = True
        self._thread.join()

    @property
    def samples(self) -> int:
        return self._stats[0]

    @property
    def max_sample(self) -> int:
        return self._stats[2]

    def final_peak(self) -> int:
        """Peak traced memory of the whole run; call while still tracing."""
        return max(self._stats[1], tracemalloc.get_traced_memory()[1])

    def guard(self) -> None:
        if self._due:
            # inlined sample: no extra frame is alive when the peak is reset
            self._due = False
            self._ticks = 0
            cur, peak = tracemalloc.get_traced_memory()
            st = self._stats
            st[0] += 1
            if peak > st[1]:
                st[1] = peak
            if cur > st[2]:
                st[2] = cur
            if 0 <= self.memory_budget < cur:
                self.breached = True
            del cur, peak, st
            tracemalloc.reset_peak()
        if self.breached or 0 <= self.memory_budget < tracemalloc.get_traced_memory()[0]:
            self.breached = True
            raise MemoryBudgetExceeded(f"traced memory above {self.memory_budget} bytes")
        if time.perf_counter() > self._deadline:
            raise RunTimeout(f"run exceeded {self.timeout_s} s")


# -- single runs ----------------------------------------------------------------


def accuracy(h: MooreMachine, test: TraceStore) -> float:
    """Fraction of test records whose label ``h`` reproduces."""
    if test.record_count == 0:
        raise ValueError("test store is empty")
    if test.input_size != h.num_inputs or test.output_size != h.num_outputs:
        raise ValueError(
            f"alphabet mismatch: hypothesis {h.num_inputs}/{h.num_outputs}, "
            f"test store {test.input_size}/{test.output_size}"
        )
    delta, outputs, init = h.delta, h.outputs, h.initial
    correct = 0
    for trace, label in test:
        s = init
        for a in trace:
            s = delta[s][a]
        correct += outputs[s] == label
    return correct / test.record_count


@dataclass
class RunResult:
    record: RunRecord
    hypothesis: MooreMachine | None = None
    stats: dict = field(default_factory=dict)
    log: list[dict] = field(default_factory=list)
    samples: int = 0
    # largest traced size seen by the sampler
    max_sample: int = 0


def run_learner(
    store: TraceStore,
    algorithm: str,
    *,
    k: int | None = None,
    n: int | None = None,
    seed: int = 0,
    oracle_budget: int | None = DEFAULT_ORACLE_BUDGET,
    memory_budget: int | None = DEFAULT_MEMORY_BUDGET,
    timeout_s: float | None = DEFAULT_TIMEOUT_S,
    test: TraceStore | None = None,
    target: int | None = None,
    verify_hypotheses: bool = False,
) -> RunResult:
    """Run one learner under memory and time limits and score it on ``test``.

    Breaching a limit ends the run with status ``oom`` or ``timeout``; wall
    time and peak memory are still reported.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == "daalder":
        cfg = LearnerConfig(
            k=10 if k is None else k,
            n=n,
            oracle_budget=oracle_budget,
            seed=seed,
            verify_hypotheses=verify_hypotheses,
        )
        k = cfg.k
    else:
        k = None

    was_tracing = tracemalloc.is_tracing()
    if was_tracing:
        tracemalloc.stop()
    gc.collect()
    gc_was_enabled = gc.isenabled()
    gc.disable()
    status = "ok"
    h = None
    stats: dict = {}
    log: list[dict] = []
    # wall time includes sampler start-up so it is never shorter than the deadline
    t0 = time.perf_counter()
    monitor = Monitor(memory_budget, timeout_s).start()
    tracemalloc.start()
    try:
        if algorithm == "daalder":
            h, ls = learn(store, cfg, guard=monitor.guard)
            stats, log = ls.as_dict(), ls.log
            if ls.no_characteristic_set:
                status = "no-characteristic-set"
        else:
            h, es = edsm_learn(store, guard=monitor.guard)
            stats, log = es.as_dict(), es.log
    except MemoryBudgetExceeded:
        status = "oom"
    except RunTimeout:
        status = "timeout"
    finally:
        wall = time.perf_counter() - t0
        peak = monitor.final_peak()
        tracemalloc.stop()
        monitor.stop()
        if gc_was_enabled:
            gc.enable()
        if was_tracing:
            tracemalloc.start()
    if status in ("ok", "no-characteristic-set") and monitor.breached:
        # a sample above budget was seen even though the run finished
        status = "oom"

    if stats:
        stats["peak_memory_bytes"] = peak
    size = store.record_count
    included = stats.get("traces_included") if h is not None else None
    record = RunRecord(
        target=target,
        algorithm=algorithm,
        dataset_size=size,
        k=k,
        wall_time_s=round(wall, 6),
        peak_memory_bytes=peak,
        accuracy=accuracy(h, test) if h is not None and test is not None else None,
        traces_included=included,
        fraction_included=None if included is None else included / size,
        status=status,
    )
    return RunResult(record, h, stats, log, monitor.samples, monitor.max_sample)


# -- configuration --------------------------------------------------------------


def _ints(value: str) -> list[int]:
    return [int(v) for v in value.replace(",", " ").split()]


@dataclass
class SweepConfig:
    """Everything a sweep needs; read from and written back to INI text."""

    dataset: DatasetSpec
    num_states: int = 20
    input_size: int = 2
    output_size: int = 2
    targets: int = 1
    # keep a target only if its test-set share of label 1 is within this of 1/2
    balance_tolerance: float | None = None
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    k_values: list[int] = field(default_factory=lambda: [10, 100, 1000])
    n: int | None = None
    oracle_budget: int | None = DEFAULT_ORACLE_BUDGET
    memory_budget: int | None = DEFAULT_MEMORY_BUDGET
    timeout_s: float | None = DEFAULT_TIMEOUT_S
    max_target_draws: int = 100
    # check every DAALder hypothesis against the tree's labelled traces
    verify: bool = False

    def cells(self) -> list[tuple[str, int | None]]:
        out: list[tuple[str, int | None]] = []
        for algo in self.algorithms:
            if algo == "daalder":
                out.extend((algo, k) for k in self.k_values)
            else:
                out.append((algo, None))
        return out

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        d = self.dataset
        cp["target"] = {
            "num_states": str(self.num_states),
            "input_size": str(self.input_size),
            "output_size": str(self.output_size),
            "count": str(self.targets),
            "balance_tolerance": "" if self.balance_tolerance is None else repr(self.balance_tolerance),
            "max_draws": str(self.max_target_draws),
        }
        cp["dataset"] = {
            "train_sizes": " ".join(map(str, d.train_sizes)),
            "test_size": str(d.test_size),
            "len_min": str(d.len_min),
            "len_max": str(d.len_max),
            "seed": str(d.seed),
        }
        cp["learn"] = {
            "algorithms": " ".join(self.algorithms),
            "k": " ".join(map(str, self.k_values)),
            "n": "" if self.n is None else str(self.n),
            "oracle_budget": "all" if self.oracle_budget is None else str(self.oracle_budget),
            "memory_budget_mib": "" if self.memory_budget is None else repr(self.memory_budget / 2**20),
            "timeout_s": "" if self.timeout_s is None else repr(self.timeout_s),
            "verify": "yes" if self.verify else "no",
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _get(cp: configparser.ConfigParser, section: str, key: str, parse, default=...):
    name = f"{section}.{key}"
    if not cp.has_option(section, key):
        if default is ...:
            raise ConfigError(name, "missing")
        return default
    raw = cp.get(section, key).strip()
    try:
        return parse(raw)
    except ValueError as e:
        raise ConfigError(name, f"bad value {raw!r} ({e})") from None


def _optional(parse):
    return lambda raw: None if raw in ("", "none") else parse(raw)


def _boolean(raw: str) -> bool:
    value = configparser.ConfigParser.BOOLEAN_STATES.get(raw.lower())
    if value is None:
        raise ValueError("expected yes or no")
    return value


def parse_config(text: str) -> SweepConfig:
    """Read a sweep configuration.  Unknown sections or keys are rejected by name."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError("config", str(e).splitlines()[0]) from None
    known = {
        "target": {"num_states", "input_size", "output_size", "count", "balance_tolerance", "max_draws"},
        "dataset": {"train_sizes", "test_size", "len_min", "len_max", "seed"},
        "learn": {"algorithms", "k", "n", "oracle_budget", "memory_budget_mib", "timeout_s", "verify"},
    }
    for section in cp.sections():
        if section not in known:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in known[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")

    try:
        spec = DatasetSpec(
            train_sizes=_get(cp, "dataset", "train_sizes", _ints),
            test_size=_get(cp, "dataset", "test_size", int),
            len_min=_get(cp, "dataset", "len_min", int),
            len_max=_get(cp, "dataset", "len_max", int),
            seed=_get(cp, "dataset", "seed", int, 0),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError("dataset", str(e)) from None
    if not 0 <= spec.len_min <= spec.len_max:
        raise ConfigError("dataset.len_min", "need 0 <= len_min <= len_max")

    algorithms = _get(cp, "learn", "algorithms", str.split, list(ALGORITHMS))
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError("learn.algorithms", f"unknown algorithm {a!r}")
    k_values = _get(cp, "learn", "k", _ints, [10, 100, 1000])
    if "daalder" in algorithms and (not k_values or min(k_values) < 1):
        raise ConfigError("learn.k", "need at least one k >= 1")
    budget_mib = _get(cp, "learn", "memory_budget_mib", _optional(float), DEFAULT_MEMORY_BUDGET / 2**20)
    cfg = SweepConfig(
        dataset=spec,
        num_states=_get(cp, "target", "num_states", int, 20),
        input_size=_get(cp, "target", "input_size", int, 2),
        output_size=_get(cp, "target", "output_size", int, 2),
        targets=_get(cp, "target", "count", int, 1),
        balance_tolerance=_get(cp, "target", "balance_tolerance", _optional(float), None),
        max_target_draws=_get(cp, "target", "max_draws", int, 100),
        algorithms=algorithms,
        k_values=k_values,
        n=_get(cp, "learn", "n", _optional(int), None),
        oracle_budget=_get(
            cp, "learn", "oracle_budget", lambda r: None if r == "all" else int(r), DEFAULT_ORACLE_BUDGET
        ),
        memory_budget=None if budget_mib is None else int(budget_mib * 2**20),
        timeout_s=_get(cp, "learn", "timeout_s", _optional(float), DEFAULT_TIMEOUT_S),
        verify=_get(cp, "learn", "verify", _boolean, False),
    )
    for key, value in (
        ("target.num_states", cfg.num_states),
        ("target.input_size", cfg.input_size),
        ("target.output_size", cfg.output_size),
        ("target.count", cfg.targets),
        ("target.max_draws", cfg.max_target_draws),
    ):
        if value < 1:
            raise ConfigError(key, "must be positive")
    if cfg.oracle_budget is not None and cfg.oracle_budget < 1:
        raise ConfigError("learn.oracle_budget", "must be positive or 'all'")
    return cfg


def load_config(path: str | os.PathLike) -> SweepConfig:
    return parse_config(Path(path).read_text())


# -- datasets ---------------------------------------------------------------------


def label_balance(store: TraceStore) -> float:
    """Share of records labelled 1."""
    return sum(label == 1 for _, label in store) / store.record_count


def cell_seed(base: int, target: int, size: int, algorithm: str, k: int | None) -> int:
    """Learner seed of one sweep cell, a pure function of its coordinates."""
    return random.Random(f"{base}/{target}/{size}/{algorithm}/{k}").getrandbits(32)


def generate_dataset(cfg: SweepConfig, target_seed: int, out_dir: str | Path):
    m = gen_target(cfg.num_states, cfg.input_size, cfg.output_size, seed=target_seed)
    spec = DatasetSpec(
        cfg.dataset.train_sizes, cfg.dataset.test_size, cfg.dataset.len_min,
        cfg.dataset.len_max, target_seed,
    )
    return make_dataset(m, spec, out_dir)


def select_targets(
    cfg: SweepConfig, out_dir: str | Path, log: Callable[[str], None] = lambda s: None
) -> tuple[list[int], list[int]]:
    """Draw targets from seeds ``dataset.seed, dataset.seed + 1, ...`` and write their datasets.

    With a balance tolerance, a draw is rejected when its test-set share of
    label 1 is further than the tolerance from 1/2; the decision uses only
    the generated data, never a learner.  Returns (kept seeds, rejected seeds).
    """
    out = Path(out_dir)
    kept: list[int] = []
    rejected: list[int] = []
    seed = cfg.dataset.seed
    while len(kept) < cfg.targets:
        if len(kept) + len(rejected) >= cfg.max_target_draws:
            raise RuntimeError(
                f"only {len(kept)} of {cfg.targets} targets passed the balance check "
                f"in {cfg.max_target_draws} draws"
            )
        path = out / f"target_{seed}"
        ds = generate_dataset(cfg, seed, path)
        if cfg.balance_tolerance is not None:
            with ds.test_store() as test:
                balance = label_balance(test)
            if abs(balance - 0.5) > cfg.balance_tolerance:
                log(f"target {seed}: test balance {balance:.3f}, rejected")
                rejected.append(seed)
                shutil.rmtree(path)
                seed += 1
                continue
        log(f"target {seed}: {ds.target.num_states} states")
        kept.append(seed)
        seed += 1
    return kept, rejected


# -- sweeps ----------------------------------------------------------------------


def write_csv(records: Iterable[RunRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=RunRecord.columns(), lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: "" if v is None else v for k, v in asdict(r).items()})


def read_csv(path: str | Path) -> list[RunRecord]:
    ints = {"target", "dataset_size", "k", "peak_memory_bytes", "traces_included"}
    floats = {"wall_time_s", "accuracy", "fraction_included"}
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            d: dict = {}
            for key, raw in row.items():
                if raw == "":
                    d[key] = None
                elif key in ints:
                    d[key] = int(raw)
                elif key in floats:
                    d[key] = float(raw)
                else:
                    d[key] = raw
            out.append(RunRecord.from_dict(d))
    return out


def plot_data(records: Iterable[RunRecord]) -> dict:
    """(size, value) series per target and learner, for time, memory, traces and accuracy."""
    metrics = {
        "time": "wall_time_s",
        "memory": "peak_memory_bytes",
        "traces_included": "traces_included",
        "accuracy": "accuracy",
    }
    series: dict[str, dict[str, list]] = {m: {} for m in metrics}
    for r in records:
        label = r.algorithm if r.k is None else f"{r.algorithm}-k{r.k}"
        if r.target is not None:
            label = f"target{r.target}/{label}"
        for name, attr in metrics.items():
            series[name].setdefault(label, []).append([r.dataset_size, getattr(r, attr)])
    for per_label in series.values():
        for points in per_label.values():
            points.sort(key=lambda p: p[0])
    return {"x": "dataset_size", "series": series}


def _cell_command(cfg: SweepConfig, store: Path, test: Path, algorithm: str, k: int | None,
                  seed: int, target: int, hyp: Path, record: Path, stats: Path) -> list[str]:
    cmd = [
        sys.executable, "-m", "daalder.cli", "learn",
        "--store", str(store), "--algorithm", algorithm, "--seed", str(seed),
        "--test", str(test), "--target-id", str(target),
        "--hypothesis", str(hyp), "--record", str(record), "--stats", str(stats),
        "--oracle-budget", "all" if cfg.oracle_budget is None else str(cfg.oracle_budget),
        "--memory-budget-mib", "none" if cfg.memory_budget is None else repr(cfg.memory_budget / 2**20),
        "--timeout", "none" if cfg.timeout_s is None else repr(cfg.timeout_s),
    ]
    if k is not None:
        cmd += ["--k", str(k)]
    if cfg.n is not None:
        cmd += ["--n", str(cfg.n)]
    if cfg.verify:
        cmd.append("--verify")
    return cmd


def run_cell(cfg: SweepConfig, store: Path, test: Path, algorithm: str, k: int | None,
             seed: int, target: int, out_dir: Path) -> RunRecord:
    """Run one learner in a fresh interpreter so no state leaks between cells."""
    tag = f"{target}_{store.name}_{algorithm}" + ("" if k is None else f"_k{k}")
    hyp = out_dir / f"{tag}.moore"
    rec = out_dir / f"{tag}.json"
    stats = out_dir / f"{tag}.stats.json"
    cmd = _cell_command(cfg, store, test, algorithm, k, seed, target, hyp, rec, stats)
    env = dict(os.environ, PYTHONHASHSEED="0")
    src = str(Path(__file__).resolve().parent.parent)
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [src, env.get("PYTHONPATH")]))
    # the child enforces the timeout itself; the parent only steps in if it hangs
    hard = None if cfg.timeout_s is None else cfg.timeout_s + 60
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, timeout=hard)
    except subprocess.TimeoutExpired:
        return RunRecord(target, algorithm, TraceStore.open(store).record_count, k,
                         round(time.perf_counter() - t0, 6), None, None, None, None, "timeout")
    if proc.returncode not in (0, 3, 4) or not rec.exists():
        raise RuntimeError(f"cell {tag} failed ({proc.returncode}): {proc.stderr.strip()}")
    return RunRecord.from_dict(json.loads(rec.read_text()))


def _manifest(cfg: SweepConfig, kept: list[int], rejected: list[int], cells: list[dict]) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "config": cfg.to_ini(),
        "targets": kept,
        "rejected_targets": rejected,
        "cells": cells,
    }


def run_sweep(
    cfg: SweepConfig,
    out_dir: str | Path,
    *,
    data_dir: str | Path | None = None,
    log: Callable[[str], None] = lambda s: None,
) -> list[RunRecord]:
    """Run the whole matrix (targets x sizes x learners) one cell at a time.

    Writes ``results.csv``, ``plot_data.json`` and ``manifest.json`` to
    ``out_dir``; datasets go to ``data_dir`` (default ``out_dir/data``).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = Path(data_dir) if data_dir is not None else out / "data"
    runs = out / "runs"
    runs.mkdir(exist_ok=True)
    kept, rejected = select_targets(cfg, data, log)
    records: list[RunRecord] = []
    cells: list[dict] = []
    for target in kept:
        root = data / f"target_{target}"
        meta = json.loads((root / "dataset.json").read_text())
        test = root / meta["test"]
        for size in cfg.dataset.train_sizes:
            store = root / meta["train"][str(size)]
            for algorithm, k in cfg.cells():
                seed = cell_seed(cfg.dataset.seed, target, size, algorithm, k)
                cells.append({"target": target, "size": size, "algorithm": algorithm, "k": k, "seed": seed})
                r = run_cell(cfg, store, test, algorithm, k, seed, target, runs)
                log(
                    f"target {target} size {size} {algorithm}"
                    + ("" if k is None else f" k={k}")
                    + f": {r.status} acc={r.accuracy} time={r.wall_time_s:.2f}s"
                )
                records.append(r)
    write_csv(records, out / "results.csv")
    (out / "plot_data.json").write_text(json.dumps(plot_data(records), indent=1) + "\n")
    (out / "manifest.json").write_text(
        json.dumps(_manifest(cfg, kept, rejected, cells), indent=2) + "\n"
    )
    return records


def load_manifest(path: str | Path) -> tuple[SweepConfig, dict]:
    m = json.loads(Path(path).read_text())
    if m.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a sweep manifest")
    if m.get("version") != MANIFEST_VERSION:
        raise ValueError(f"{path}: unsupported manifest version {m.get('version')}")
    return parse_config(m["config"]), m


def replay(manifest_path: str | Path, out_dir: str | Path, **kwargs) -> list[RunRecord]:
    """Re-run a sweep from its manifest and check it chose the same targets and cells."""
    cfg, m = load_manifest(manifest_path)
    records = run_sweep(cfg, out_dir, **kwargs)
    _, again = load_manifest(Path(out_dir) / "manifest.json")
    if again["targets"] != m["targets"] or again["cells"] != m["cells"]:
        raise RuntimeError("replay drew different targets or cells than the manifest records")
    return records


def strip_wall_time(path: str | Path) -> list[dict]:
    rows = []
    for r in read_csv(path):
        d = asdict(r)
        d.pop("wall_time_s")
        rows.append(d)
    return rows


def save_hypothesis(h: MooreMachine, path: str | Path) -> None:
    Path(path).write_text(dumps(h))


def load_hypothesis(path: str | Path) -> MooreMachine:
    return loads(Path(path).read_text())
