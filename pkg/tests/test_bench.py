import math
import multiprocessing as mp
import os
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from deckrec.bench import (ExperimentConfig, ExperimentResult, RunRow, emit_report,
                           format_table, load_report, mask_timing, pairwise_welch, run_experiment,
                           rows_from_jsonl, time_algorithm, welch_test)
from deckrec.errors import ConfigurationError, InvalidArgument


# ---------------------------------------------------------------- Welch

def test_welch_identical_samples():
    r = welch_test([0.5, 0.6, 0.7], [0.5, 0.6, 0.7])
    assert r.t == 0 and r.p == pytest.approx(1.0) and not r.significant


def test_welch_zero_variance_unequal():
    r = welch_test([0, 0, 0], [1, 1, 1])
    assert r.p == 0.0 and r.significant and r.degenerate and r.t == -math.inf
    assert welch_test([1, 1, 1], [1, 1, 1]).p == 1.0


def test_welch_hand_fixture():
    a = [0.61, 0.86, 0.93, 0.94]
    b = [v + 0.01 for v in a]
    r = welch_test(a, b)
    # both variances are 0.0713 / 3, so t = -0.01 / sqrt(2 * 0.0713 / 12) on 6 df
    assert r.t == pytest.approx(-0.01 / math.sqrt(0.0713 / 6), abs=1e-6)
    assert r.df == pytest.approx(6.0, abs=1e-6)
    ref = sps.ttest_ind(a, b, equal_var=False)
    assert r.t == pytest.approx(ref.statistic, abs=1e-9)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-9)
    assert not r.significant


@given(st.lists(st.floats(0, 1), min_size=2, max_size=20), st.integers(0, 1000))
def test_welch_matches_scipy(a, seed):
    b = np.random.default_rng(seed).uniform(0, 1, len(a))
    if np.var(a) == 0:
        return
    r = welch_test(a, b)
    ref = sps.ttest_ind(a, b, equal_var=False)
    assert r.p == pytest.approx(ref.pvalue, abs=1e-9)
    assert 0 <= r.p <= 1


def test_welch_rejects_unpaired():
    with pytest.raises(InvalidArgument):
        welch_test([1, 2, 3], [1, 2])
    with pytest.raises(InvalidArgument):
        welch_test([1], [2])


def test_pairwise_welch():
    res = pairwise_welch({"q": [0.9, 0.8, 0.85], "ga": [0.5, 0.55, 0.6], "mc": [0.6, 0.62, 0.5]})
    assert [(r.a, r.b) for r in res] == [("ga", "mc"), ("ga", "q"), ("mc", "q")]


# ---------------------------------------------------------------- timing

def _busy(seconds):
    end = time.monotonic() + seconds
    x = 0
    while time.monotonic() < end:
        x += 1
    return x


def _busy_children(k, seconds):
    procs = [mp.get_context("fork").Process(target=_busy, args=(seconds,)) for _ in range(k)]
    for p in procs:
        p.start()
    for p in procs:
        p.join()


def test_timing_sleep_is_not_cpu():
    wall, cpu, res = time_algorithm(time.sleep, 0.5)
    assert wall >= 0.5 and cpu < 0.05 and res is None


def test_timing_empty_function():
    wall, cpu, res = time_algorithm(lambda: 7)
    assert res == 7 and wall < 0.01 and cpu < 0.01


def test_timing_counts_worker_processes():
    cores = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count()
    k = min(4, cores)
    w = 1.0
    wall, cpu, _ = time_algorithm(_busy_children, 4, w)
    assert wall >= w
    assert abs(cpu - k * w) <= 0.25 * k * w


# ---------------------------------------------------------------- experiment

def _cfg(roster=None, **kw):
    roster = roster or [
        {"name": "ga", "kind": "ga", "params": {"max_f_calls": 0, "num_matches": 4}},
        {"name": "q", "kind": "qdeckrec", "params": {"train": {"max_episodes": 5, "hidden": 8,
                                                               "batch_size": 4, "num_matches": 4}}},
        {"name": "mc", "kind": "mc", "params": {"x": 20, "dataset_size": 80, "label_matches": 4,
                                                "hyperparams": {"hidden": 8, "batch_size": 8,
                                                                "epochs": 2, "folds": 2}}},
    ]
    base = dict(roster=roster, n_cards=10, d=3, instances=2, runs=2, chain_warmup=1,
                num_matches=6, seed=3)
    base.update(kw)
    return ExperimentConfig.from_dict(base)


@pytest.fixture(scope="module")
def small_result():
    return run_experiment(_cfg())


def test_experiment_rows_and_accounting(small_result):
    res = small_result
    assert len(res.instances) == 2
    assert len(res.rows) == 3 * 2 * 2
    for r in res.rows:
        assert 0 <= r.win_rate <= 1 and len(r.deck) == 3
        if r.algo == "ga":
            # zero budget: only the initial population is scored
            assert r.f_calls == r.extra["ga_f_calls"] > 0 and r.extra["generations"] == 0
        else:
            assert r.f_calls == 0
    assert res.rows[0].extra is not None
    assert set(res.offline) == {"q", "mc"}
    assert res.offline["mc"]["dataset_f_calls"] == 80


def test_experiment_deterministic(small_result):
    again = run_experiment(_cfg())
    assert mask_timing(again.to_dict()) == mask_timing(small_result.to_dict())


def test_experiment_stats_shape(small_result):
    meds = small_result.medians()
    assert set(meds) == {"ga", "q", "mc"} and all(len(v) == 2 for v in meds.values())
    assert len(small_result.stats()) == 3


def test_missing_checkpoint_is_configuration_error(tmp_path):
    cfg = _cfg([{"name": "q", "kind": "qdeckrec", "params": {"checkpoint": str(tmp_path / "none.npz")}}])
    with pytest.raises(ConfigurationError):
        run_experiment(cfg)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        _cfg([{"name": "a", "kind": "ga"}, {"name": "a", "kind": "ga"}])
    with pytest.raises(ConfigurationError):
        _cfg([{"name": "a", "kind": "sa"}])
    with pytest.raises(ConfigurationError):
        _cfg(runs=0)


def test_partial_rows_written(tmp_path):
    path = tmp_path / "rows.jsonl"
    cfg = _cfg([{"name": "ga", "kind": "ga", "params": {"max_f_calls": 0, "num_matches": 2}}])
    res = run_experiment(cfg, partial_path=path)
    assert rows_from_jsonl(path) == res.rows


def _result_with(win_rates):
    """Synthetic result: win_rates[algo][instance] is a list of per-run values."""
    cfg = {"roster": [{"name": a} for a in win_rates], "runs": 3}
    inst = sorted({i for per in win_rates.values() for i in per})
    rows = [RunRow(a, i, r, [0], v, 0, 0.0, 0.0, {})
            for a, per in win_rates.items() for i, vals in per.items() for r, v in enumerate(vals)]
    return ExperimentResult(cfg, [{"id": i} for i in inst], rows)


def test_medians_ignore_run_order():
    rng = np.random.default_rng(0)
    data = {a: {i: list(rng.uniform(size=3)) for i in range(4)} for a in ("x", "y")}
    base = _result_with(data).medians()
    shuffled = {a: {i: list(rng.permutation(v)) for i, v in per.items()} for a, per in data.items()}
    assert _result_with(shuffled).medians() == base
    res = _result_with(data)
    res.rows = list(reversed(res.rows))
    assert res.medians() == base
    assert base["x"][0] == pytest.approx(np.median(data["x"][0]))


def test_incomplete_instances_excluded_from_medians():
    res = _result_with({"x": {0: [0.1, 0.2, 0.3], 1: [0.5, 0.6]}})
    assert res.medians() == {"x": [0.2]}
    assert res.aggregates()["x"]["instances_complete"] == 1


# ---------------------------------------------------------------- report

def test_report_round_trip(tmp_path, small_result):
    doc = emit_report(small_result, small_result.stats(), tmp_path / "r.json")
    assert load_report(tmp_path / "r.json") == doc
    table = (tmp_path / "r.txt").read_text()
    for name in ("ga", "q", "mc"):
        assert sum(line.startswith(name + " ") for line in table.splitlines()) == 1
    assert all(0 <= a["mean_win_rate"] <= 1 for a in doc["aggregates"].values())
    assert doc["config"]["d"] == 3 and doc["notes"]


def test_masked_report_has_no_timing(tmp_path, small_result):
    doc = emit_report(small_result, [], tmp_path / "m.json", masked=True)
    assert all(r["wall_s"] is None and r["cpu_s"] is None for r in doc["rows"])
    assert doc["offline"]["q"]["train_wall_s"] is None
    assert "   -" in format_table(doc)
