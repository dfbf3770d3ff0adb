"""``daalder`` command line: generate, ingest, learn, evaluate, sweep.

Exit codes: 0 success, 2 usage or configuration error, 3 memory budget
exceeded, 4 timeout, 5 bad or inconsistent data.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import abbadingo, bench
from .core import MachineFormatError
from .store import StoreError, TraceStore

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_OOM = 3
EXIT_TIMEOUT = 4
EXIT_DATA = 5

STATUS_EXIT = {"ok": EXIT_OK, "no-characteristic-set": EXIT_OK, "oom": EXIT_OOM, "timeout": EXIT_TIMEOUT}


class UsageError(Exception):
    pass


def _optional_int(raw: str) -> int | None:
    return None if raw.lower() in ("all", "none") else int(raw)


def _optional_float(raw: str) -> float | None:
    return None if raw.lower() == "none" else float(raw)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_generate(args) -> int:
    cfg = bench.load_config(args.config)
    out = Path(args.out)
    kept, rejected = bench.select_targets(cfg, out, _say)
    manifest = {
        "format": bench.MANIFEST_FORMAT,
        "version": bench.MANIFEST_VERSION,
        "config": cfg.to_ini(),
        "targets": kept,
        "rejected_targets": rejected,
        "cells": [],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    for seed in kept:
        print(out / f"target_{seed}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    traces = abbadingo.read_traces(args.traces)
    _, input_size = abbadingo.read_header(args.traces)
    output_size = args.output_size
    store = TraceStore.build(
        traces, args.store, input_size, output_size, buffer_records=args.buffer_records
    )
    with store:
        print(f"{store.record_count} records in {args.store}")
    return EXIT_OK


def cmd_learn(args) -> int:
    with TraceStore.open(args.store) as store:
        test = TraceStore.open(args.test) if args.test else None
        try:
            result = bench.run_learner(
                store,
                args.algorithm,
                k=args.k,
                n=args.n,
                seed=args.seed,
                oracle_budget=args.oracle_budget,
                memory_budget=None if args.memory_budget_mib is None else int(args.memory_budget_mib * 2**20),
                timeout_s=args.timeout,
                test=test,
                target=args.target_id,
                verify_hypotheses=args.verify,
            )
        finally:
            if test is not None:
                test.close()
    rec = result.record
    if args.hypothesis and result.hypothesis is not None:
        bench.save_hypothesis(result.hypothesis, args.hypothesis)
    if args.record:
        Path(args.record).write_text(json.dumps(bench.asdict(rec)) + "\n")
    if args.stats:
        Path(args.stats).write_text(json.dumps(result.stats) + "\n")
    if args.log:
        with open(args.log, "w") as f:
            for entry in result.log:
                f.write(json.dumps(entry) + "\n")
    print(json.dumps(bench.asdict(rec)))
    return STATUS_EXIT[rec.status]


def cmd_evaluate(args) -> int:
    h = bench.load_hypothesis(args.hypothesis)
    with TraceStore.open(args.test) as test:
        acc = bench.accuracy(h, test)
    print(f"{acc:.6f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if (args.config is None) == (args.manifest is None):
        raise UsageError("give exactly one of --config or --manifest")
    if args.manifest:
        records = bench.replay(args.manifest, args.out, data_dir=args.data, log=_say)
    else:
        cfg = bench.load_config(args.config)
        records = bench.run_sweep(cfg, args.out, data_dir=args.data, log=_say)
    print(f"{len(records)} runs written to {Path(args.out) / 'results.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="daalder", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate targets and datasets from a config file")
    g.add_argument("config")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("ingest", help="build a trace store from an Abbadingo-format file")
    i.add_argument("traces")
    i.add_argument("store")
    i.add_argument("--output-size", type=int, default=2)
    i.add_argument("--buffer-records", type=int, default=100_000)
    i.set_defaults(func=cmd_ingest)

    lp = sub.add_parser("learn", help="run one learner on a store")
    lp.add_argument("--store", required=True)
    lp.add_argument("--algorithm", choices=bench.ALGORITHMS, default="daalder")
    lp.add_argument("--k", type=int, default=None)
    lp.add_argument("--n", type=int, default=None)
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("--oracle-budget", type=_optional_int, default=bench.DEFAULT_ORACLE_BUDGET,
                    help="records per equivalence query, or 'all'")
    lp.add_argument("--memory-budget-mib", type=_optional_float,
                    default=bench.DEFAULT_MEMORY_BUDGET / 2**20)
    lp.add_argument("--timeout", type=_optional_float, default=bench.DEFAULT_TIMEOUT_S,
                    help="seconds, or 'none'")
    lp.add_argument("--test", help="test store for accuracy")
    lp.add_argument("--target-id", type=int, default=None)
    lp.add_argument("--hypothesis", help="write the learned machine here")
    lp.add_argument("--record", help="write the run record as JSON here")
    lp.add_argument("--stats", help="write the learner's counters as JSON here")
    lp.add_argument("--log", help="write the learner's event log (JSON lines) here")
    lp.add_argument("--verify", action="store_true",
                    help="check every hypothesis against the traces in the tree")
    lp.set_defaults(func=cmd_learn)

    e = sub.add_parser("evaluate", help="accuracy of a machine file on a test store")
    e.add_argument("hypothesis")
    e.add_argument("test")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="run the sizes x learners matrix")
    s.add_argument("--config")
    s.add_argument("--manifest", help="replay the sweep recorded in this manifest")
    s.add_argument("--out", required=True)
    s.add_argument("--data", help="dataset directory (default OUT/data)")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, bench.ConfigError) as e:
        _say(f"daalder: {e}")
        return EXIT_USAGE
    except (StoreError, MachineFormatError, abbadingo.TraceFormatError, ValueError, OSError) as e:
        _say(f"daalder: {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
