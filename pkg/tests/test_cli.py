import json

import pytest

from deckrec.cli import (EXIT_DIVERGED, EXIT_INVALID, EXIT_OK, EXIT_PARTIAL, EXIT_TOO_LARGE, main)
from deckrec.engine.cards import CardPool


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["genpool", "--n", "10", "--seed", "7", "--out", str(d / "pool.json")]) == EXIT_OK
    assert main(["train", "--pool", str(d / "pool.json"), "--d", "3", "--episodes", "20",
                 "--num-matches", "4", "--seed", "1", "--out", str(d / "q.npz")]) == EXIT_OK
    return d


def test_genpool(workdir, tmp_path):
    pool = CardPool.load(workdir / "pool.json")
    assert pool.n_cards == 10 and pool.seed == 7
    assert main(["genpool", "--n", "5", "--out", str(tmp_path / "p.json")]) == EXIT_INVALID


@pytest.mark.parametrize("argv", [["genpool"], ["nosuchcommand"], ["ga", "--pool"]])
def test_bad_arguments_exit_invalid(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_INVALID


def test_train_reproducible_and_logged(workdir, tmp_path):
    out = tmp_path / "q2.npz"
    assert main(["train", "--pool", str(workdir / "pool.json"), "--d", "3", "--episodes", "20",
                 "--num-matches", "4", "--seed", "1", "--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == (workdir / "q.npz").read_bytes()
    log = json.loads((tmp_path / "q2.npz.log.json").read_text())
    assert log["config"]["seed"] == 1 and log["train_log"]["episodes"] == 20


def test_train_zero_budget(workdir, tmp_path):
    assert main(["train", "--pool", str(workdir / "pool.json"), "--d", "3", "--budget", "0",
                 "--out", str(tmp_path / "q0.npz")]) == EXIT_OK
    assert (tmp_path / "q0.npz").exists()


def test_train_divergence_exit(workdir, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"learning_rate": 1.0, "reward_scale": 1e-300, "hidden": 8,
                               "batch_size": 4}))
    code = main(["train", "--pool", str(workdir / "pool.json"), "--config", str(cfg), "--d", "3",
                 "--episodes", "50", "--num-matches", "2", "--out", str(tmp_path / "qd.npz")])
    assert code == EXIT_DIVERGED
    assert "diverged" in json.loads((tmp_path / "qd.npz.log.json").read_text())


def test_solve(workdir, tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["solve", "--checkpoint", str(workdir / "q.npz"), "--opponent", "7,8,9",
                 "--pool", str(workdir / "pool.json"), "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    # three steps of 1 + 7 * 3 actions each
    assert "q evaluations: 66, f calls: 0" in text
    doc = json.loads(out.read_text())
    assert len(doc["deck"]) == 3 and doc["config"]["opponent"] == [7, 8, 9]


def test_solve_bad_opponent(workdir):
    assert main(["solve", "--checkpoint", str(workdir / "q.npz"), "--opponent", "7,8,99"]) == EXIT_INVALID
    assert main(["solve", "--checkpoint", str(workdir / "q.npz"), "--opponent", "7,8"]) == EXIT_INVALID


def test_ga(workdir, tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["ga", "--pool", str(workdir / "pool.json"), "--opponent", "random", "--d", "3",
                 "--num-matches", "4", "--max-f-calls", "30", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["ga_log"]["f_calls"] <= 30 and doc["config"]["num_matches"] == 4
    assert "f calls" in capsys.readouterr().out


def test_mc_trains_and_reuses_predictor(workdir, tmp_path, capsys):
    pred = tmp_path / "pred.json"
    args = ["mc", "--pool", str(workdir / "pool.json"), "--opponent", "1,2,3", "--x", "5",
            "--predictor", str(pred), "--dataset-size", "700", "--label-matches", "2"]
    assert main(args + ["--out", str(tmp_path / "m1.json")]) == EXIT_OK
    assert pred.exists()
    assert main(args + ["--out", str(tmp_path / "m2.json")]) == EXIT_OK
    d1, d2 = (json.loads((tmp_path / f).read_text()) for f in ("m1.json", "m2.json"))
    assert d1["deck"] == d2["deck"] and d2["offline"] == {}
    assert d1["mc_log"]["f_calls"] == 0


def test_brute(workdir, tmp_path):
    out = tmp_path / "b.json"
    assert main(["brute", "--pool", str(workdir / "pool.json"), "--opponent", "1,2,3",
                 "--num-matches", "2", "--out", str(out)]) == EXIT_OK
    assert len(json.loads(out.read_text())["ranking"]) == 120


def test_brute_too_large(tmp_path):
    main(["genpool", "--n", "312", "--out", str(tmp_path / "big.json")])
    assert main(["brute", "--pool", str(tmp_path / "big.json"), "--opponent", "random", "--d", "15",
                 "--num-matches", "2"]) == EXIT_TOO_LARGE


def _bench_cfg(tmp_path, roster):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"roster": roster, "n_cards": 10, "d": 3, "instances": 2, "runs": 2,
                               "chain_warmup": 1, "num_matches": 4, "seed": 2}))
    return cfg


def test_bench_masked_reproducible(workdir, tmp_path, capsys):
    roster = [{"name": "ga", "kind": "ga", "params": {"max_f_calls": 20, "num_matches": 4}},
              {"name": "q", "kind": "qdeckrec", "params": {"checkpoint": str(workdir / "q.npz")}}]
    cfg = _bench_cfg(tmp_path, roster)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["bench", "--config", str(cfg), "--out", str(a), "--mask-timing"]) == EXIT_OK
    assert main(["bench", "--config", str(cfg), "--out", str(b), "--mask-timing"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".txt").read_bytes() == b.with_suffix(".txt").read_bytes()
    doc = json.loads(a.read_text())
    assert doc["config"]["seed"] == 2 and not doc["partial"]


def test_bench_missing_checkpoint_is_partial(tmp_path):
    roster = [{"name": "q", "kind": "qdeckrec", "params": {"checkpoint": str(tmp_path / "none.npz")}}]
    out = tmp_path / "r.json"
    assert main(["bench", "--config", str(_bench_cfg(tmp_path, roster)), "--out", str(out)]) == EXIT_PARTIAL
    doc = json.loads(out.read_text())
    assert doc["partial"] and "checkpoint" in doc["error"]
