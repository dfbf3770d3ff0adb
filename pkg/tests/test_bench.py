from __future__ import annotations

import json
import time
import tracemalloc

import pytest
from hypothesis import given, settings, strategies as st

from daalder import bench
from daalder.bench import (
    ConfigError,
    Monitor,
    RunRecord,
    accuracy,
    cell_seed,
    label_balance,
    parse_config,
    plot_data,
    read_csv,
    run_learner,
    write_csv,
)
from daalder.core import MooreMachine
from daalder.datagen import DatasetSpec, gen_target, gen_traces, make_dataset

TINY = """
[target]
num_states = 6
count = 1

[dataset]
train_sizes = 40 160
test_size = 200
len_min = 1
len_max = 8
seed = 3

[learn]
algorithms = edsm daalder
k = 10
timeout_s = 60
"""


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    m = gen_target(10, seed=2)
    return make_dataset(m, DatasetSpec([200, 4000, 30000], 2000, 2, 20, 5), tmp_path_factory.mktemp("ds"))


# -- accuracy ---------------------------------------------------------------------


def test_target_scores_one(dataset):
    with dataset.test_store() as test:
        assert accuracy(dataset.target, test) == 1.0


def test_constant_machine_scores_label_share(dataset):
    zero = MooreMachine.build([[0, 0]], [0], num_outputs=2)
    with dataset.test_store() as test:
        assert accuracy(zero, test) == pytest.approx(1 - label_balance(test))


def test_constant_machine_near_half_on_balanced_test_set(tmp_path):
    # pick the first target whose test set is balanced to within 0.02
    for seed in range(50):
        ds = make_dataset(gen_target(20, seed=seed), DatasetSpec([10], 2000, 2, 16, seed), tmp_path / str(seed))
        with ds.test_store() as test:
            if abs(label_balance(test) - 0.5) <= 0.02:
                acc = accuracy(MooreMachine.build([[0, 0]], [1], num_outputs=2), test)
                assert abs(acc - 0.5) <= 0.02
                return
    pytest.fail("no balanced test set in 50 draws")


def test_accuracy_errors(make_store):
    with pytest.raises(ValueError, match="empty"):
        accuracy(MooreMachine.build([[0, 0]], [0]), make_store([]))
    with pytest.raises(ValueError, match="alphabet"):
        accuracy(MooreMachine.build([[0, 0, 0]], [0]), make_store([((0,), 1)]))


# -- guarded runs ------------------------------------------------------------------


@pytest.mark.parametrize("algorithm", ["edsm", "daalder"])
def test_tiny_run_ok(dataset, algorithm):
    with dataset.train_store(200) as train, dataset.test_store() as test:
        res = run_learner(train, algorithm, k=10, test=test, target=2)
    r = res.record
    assert r.status in ("ok", "no-characteristic-set")
    assert 0 <= r.accuracy <= 1 and r.target == 2
    assert r.fraction_included == r.traces_included / r.dataset_size
    assert r.peak_memory_bytes > 0
    assert r.k == (10 if algorithm == "daalder" else None)


@pytest.mark.parametrize("algorithm", ["edsm", "daalder"])
def test_one_mib_budget_is_oom(dataset, algorithm):
    with dataset.train_store(30000) as train:
        res = run_learner(train, algorithm, memory_budget=1 << 20, k=1000, oracle_budget=None)
    assert res.record.status == "oom"
    assert res.record.wall_time_s >= 0 and res.record.peak_memory_bytes > 1 << 20
    assert res.record.accuracy is None


def test_short_timeout(dataset):
    with dataset.train_store(30000) as train:
        res = run_learner(train, "edsm", timeout_s=0.01)
    assert res.record.status == "timeout"
    assert res.record.wall_time_s >= 0.01


def test_tracing_state_restored(dataset):
    tracemalloc.start()
    try:
        with dataset.train_store(200) as train:
            run_learner(train, "edsm")
        assert tracemalloc.is_tracing()
    finally:
        tracemalloc.stop()


@settings(max_examples=8, deadline=None)
@given(budget_kib=st.integers(64, 8192))
def test_ok_runs_stay_within_budget_at_every_sample(dataset, budget_kib):
    with dataset.train_store(4000) as train:
        res = run_learner(train, "edsm", memory_budget=budget_kib << 10)
    if res.record.status == "ok":
        assert res.max_sample <= budget_kib << 10
    else:
        assert res.record.status == "oom"


def test_monitor_samples_and_reports_peak():
    mon = Monitor(None, None, interval=0.01).start()
    tracemalloc.start()
    blob = [bytes(1000) for _ in range(1000)]
    time.sleep(0.1)
    peak = mon.final_peak()
    tracemalloc.stop()
    mon.stop()
    del blob
    assert mon.samples >= 2
    assert peak >= 1_000_000 and mon.max_sample >= 1_000_000


def test_monitor_guard_deadline():
    mon = Monitor(None, 0.0).start()
    time.sleep(0.01)
    with pytest.raises(bench.RunTimeout):
        mon.guard()
    mon.stop()


# -- configuration ------------------------------------------------------------------


def test_config_round_trip():
    cfg = parse_config(TINY)
    assert parse_config(cfg.to_ini()) == cfg
    assert cfg.cells() == [("edsm", None), ("daalder", 10)]


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "configs"
    desk = bench.load_config(root / "desk.ini")
    assert desk.dataset.train_sizes == [100, 400, 1600, 6400, 25600] and desk.targets == 5
    assert desk.verify
    full = bench.load_config(root / "full.ini")
    assert full.num_states == 200 and full.dataset.train_sizes[-1] == 40_960_000
    assert full.dataset.test_size == 1_000_000 and full.dataset.len_max == 64


@pytest.mark.parametrize(
    "edit, key",
    [
        (("test_size = 200\n", ""), "dataset.test_size"),
        (("len_min = 1", "len_min = x"), "dataset.len_min"),
        (("k = 10", "k = 10\nfoo = 1"), "learn.foo"),
        (("[learn]", "[extra]\n[learn]"), "extra"),
        (("algorithms = edsm daalder", "algorithms = edsm rpni"), "learn.algorithms"),
        (("count = 1", "count = 0"), "target.count"),
    ],
)
def test_config_errors_name_the_key(edit, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(TINY.replace(*edit))
    assert exc.value.key == key


def test_cell_seed_is_a_function_of_coordinates():
    a = cell_seed(0, 1, 400, "daalder", 10)
    assert a == cell_seed(0, 1, 400, "daalder", 10)
    assert len({a, cell_seed(0, 1, 400, "daalder", 100), cell_seed(0, 2, 400, "daalder", 10)}) == 3


# -- output -------------------------------------------------------------------------


def _records():
    return [
        RunRecord(0, "edsm", 100, None, 0.5, 1000, 0.6, 100, 1.0, "ok"),
        RunRecord(0, "daalder", 100, 10, 0.25, 2000, None, None, None, "oom"),
        RunRecord(0, "edsm", 50, None, 0.1, 500, 0.5, 50, 1.0, "ok"),
    ]


def test_csv_round_trip(tmp_path):
    p = tmp_path / "r.csv"
    write_csv(_records(), p)
    assert p.read_text().splitlines()[0].split(",") == RunRecord.columns()
    assert read_csv(p) == _records()


def test_plot_data_series():
    pd = plot_data(_records())
    assert set(pd["series"]) >= {"time", "memory", "traces_included", "accuracy"}
    assert pd["series"]["memory"]["target0/edsm"] == [[50, 500], [100, 1000]]
    json.dumps(pd)


# -- sweeps ---------------------------------------------------------------------------


def test_sweep_smoke_and_replay(tmp_path):
    cfg = parse_config(TINY)
    records = bench.run_sweep(cfg, tmp_path / "a")
    assert len(records) == 2 * 2
    assert all(r.status in bench.STATUSES for r in records)
    assert len(read_csv(tmp_path / "a" / "results.csv")) == 4
    assert (tmp_path / "a" / "plot_data.json").exists()
    cfg2, manifest = bench.load_manifest(tmp_path / "a" / "manifest.json")
    assert cfg2 == cfg and len(manifest["cells"]) == 4
    bench.replay(tmp_path / "a" / "manifest.json", tmp_path / "b")
    assert bench.strip_wall_time(tmp_path / "a" / "results.csv") == bench.strip_wall_time(
        tmp_path / "b" / "results.csv"
    )


def test_balance_check_rejects_skewed_targets(tmp_path):
    cfg = parse_config(TINY.replace("count = 1", "count = 2\nbalance_tolerance = 0.05"))
    kept, rejected = bench.select_targets(cfg, tmp_path)
    assert len(kept) == 2
    for seed in kept:
        from daalder.store import TraceStore

        meta = json.loads((tmp_path / f"target_{seed}" / "dataset.json").read_text())
        with TraceStore.open(tmp_path / f"target_{seed}" / meta["test"]) as test:
            assert abs(label_balance(test) - 0.5) <= 0.05
    assert not any((tmp_path / f"target_{s}").exists() for s in rejected)
