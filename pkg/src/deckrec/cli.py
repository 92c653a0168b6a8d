"""deckrec command line: pools, training, solving, baselines and benchmarks.

Exit codes: 0 ok, 2 invalid arguments, 3 training diverged,
4 instance too large, 5 partial benchmark failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from deckrec import config as cfgmod
from deckrec.baselines.brute import brute_force_solve
from deckrec.baselines.ga import GaConfig, ga_search
from deckrec.baselines.mc import (LABEL_MATCHES, McConfig, PredictorHyperparams, WinRatePredictor,
                                  build_predictor_dataset, mc_solve, train_predictor)
from deckrec.bench.harness import ExperimentConfig, PartialResults, run_experiment
from deckrec.bench.report import emit_report
from deckrec.decks import deck_from_indices, deck_indices, deck_to_cards, random_deck, require_deck
from deckrec.engine.cards import CardPool, generate_card_pool
from deckrec.engine.match import WinRateEvaluator, default_workers, derive_seed
from deckrec.errors import (ConfigurationError, DeckrecError, InstanceTooLarge, InvalidAction,
                            InvalidArgument, TrainingDiverged)
from deckrec.qlearn.agent import TrainConfig, load_checkpoint, solve, train

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_TOO_LARGE, EXIT_PARTIAL = 0, 2, 3, 4, 5

log = logging.getLogger("deckrec")


# ---------------------------------------------------------------- helpers

def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _merged(args, path_attr: str, mapping: dict) -> dict:
    """Config file contents overridden by any flag that was given.

    ``mapping`` maps config keys to argparse attribute names.
    """
    path = getattr(args, path_attr, None)
    data = cfgmod.load_json(path) if path else {}
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    for key, attr in mapping.items():
        v = getattr(args, attr, None)
        if v is not None:
            data[key] = v
    return data


def _apply_seed(args, data: dict) -> None:
    """An explicit --seed wins over the config file's seed."""
    if args.seed_given or "seed" not in data:
        data["seed"] = args.seed


def _load_pool(path) -> CardPool:
    try:
        return CardPool.load(path)
    except FileNotFoundError as exc:
        raise InvalidArgument(f"pool file not found: {path}") from exc
    except (KeyError, ValueError) as exc:
        raise InvalidArgument(f"{path} is not a card pool file: {exc}") from exc


def _parse_ids(spec: str, name: str) -> list:
    """Card ids from a comma-separated list or a JSON file holding an id
    list or an object with a 'deck' or 'x_o' list."""
    if Path(spec).exists():
        doc = json.loads(Path(spec).read_text())
        ids = doc if isinstance(doc, list) else doc.get("deck", doc.get("x_o"))
        if ids is None:
            raise InvalidArgument(f"{spec} holds no 'deck' or 'x_o' list")
        return [int(i) for i in ids]
    try:
        return [int(t) for t in spec.split(",") if t.strip()]
    except ValueError as exc:
        raise InvalidArgument(f"{name}: expected card ids, 'random' or a file") from exc


def _parse_deck(spec: str, n: int, d=None, seed: int = 0, name: str = "deck") -> np.ndarray:
    """A deck from 'random' (needs ``d``), an id list or a deck file."""
    if spec == "random":
        if d is None:
            raise InvalidArgument(f"{name}=random needs --d")
        return random_deck(n, d, seed)
    ids = _parse_ids(spec, name)
    if not ids or min(ids) < 0:
        raise InvalidArgument(f"{name}: card ids must be non-negative")
    if max(ids) >= n:
        raise InvalidArgument(f"{name}: card id {max(ids)} out of range for N={n}")
    if len(set(ids)) != len(ids):
        raise InvalidArgument(f"{name}: duplicate card ids")
    return deck_from_indices(ids, n)


def _card_lines(x, pool) -> list:
    return [f"{c.id:4d}  {c.kind:<6} cost={c.cost:<2} {c.attack}/{c.health}"
            + (f" {c.tribe}" if c.tribe else "") + (" " + ",".join(c.keywords) if c.keywords else "")
            + (f" [{c.effect.op}]" if c.effect else "")
            for c in deck_to_cards(x, pool)]


def _print_deck(x, pool=None) -> None:
    print("deck:", " ".join(str(i) for i in deck_indices(x)))
    if pool is not None:
        for line in _card_lines(x, pool):
            print(line)


# ---------------------------------------------------------------- subcommands

def cmd_genpool(args) -> int:
    pool = generate_card_pool(args.seed, args.n)
    pool.save(args.out)
    print(f"wrote {pool.n_cards}-card pool (seed {pool.seed}) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    pool = _load_pool(args.pool)
    data = _merged(args, "config", {"d": "d", "budget_seconds": "budget",
                                    "max_episodes": "episodes", "num_matches": "num_matches"})
    _apply_seed(args, data)
    if args.workers_given:
        data["workers"] = args.workers
    cfg = TrainConfig.from_dict(data)
    if not 0 < cfg.d < pool.n_cards:
        raise InvalidArgument(f"need 0 < d < N, got d={cfg.d}, N={pool.n_cards}")
    log_path = Path(str(args.out) + ".log.json")
    with WinRateEvaluator(pool, num_matches=cfg.num_matches) as ev:
        try:
            theta, tlog = train(pool, cfg, ev, checkpoint_path=args.out)
        except TrainingDiverged as exc:
            tl = getattr(exc, "log", None)
            _write_json(log_path, {"config": asdict(cfg), "pool_seed": pool.seed,
                                   "diverged": str(exc),
                                   "train_log": tl.to_dict() if tl is not None else None})
            raise
    _write_json(log_path, {"config": asdict(cfg), "pool_seed": pool.seed, "train_log": tlog.to_dict()})
    print(f"trained {tlog.episodes} episodes ({tlog.f_calls} f calls, stop: {tlog.stop_reason}); "
          f"checkpoint {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    theta, meta = load_checkpoint(args.checkpoint)
    n, d = int(meta["n"]), int(meta["d"])
    x_o = _parse_deck(args.opponent, n, name="opponent")
    if int(x_o.sum()) != d:
        raise InvalidArgument(f"opponent deck has {int(x_o.sum())} cards, checkpoint expects D={d}")
    if args.init:
        x0 = _parse_deck(args.init, n, name="init")
    else:
        x0 = random_deck(n, d, derive_seed(args.seed, 0))
    require_deck(x0, n, d, "init")
    x, slog = solve(theta, x_o, x0, d)
    pool = _load_pool(args.pool) if args.pool else None
    _print_deck(x, pool)
    print(f"q evaluations: {slog.q_evaluations}, f calls: {slog.f_calls}")
    if args.out:
        _write_json(args.out, {"config": {"checkpoint": str(args.checkpoint), "opponent": deck_indices(x_o),
                                          "init": deck_indices(x0), "seed": args.seed},
                               "deck": deck_indices(x), "solve_log": slog.to_dict()})
    return EXIT_OK


def _opponent(args, pool) -> np.ndarray:
    return _parse_deck(args.opponent, pool.n_cards, args.d, derive_seed(args.seed, 1), "opponent")


def cmd_ga(args) -> int:
    pool = _load_pool(args.pool)
    x_o = _opponent(args, pool)
    d = int(x_o.sum())
    data = _merged(args, "config", {"max_f_calls": "max_f_calls", "budget_seconds": "budget"})
    _apply_seed(args, data)
    matches = data.pop("num_matches", None) or args.num_matches
    cfg = GaConfig.from_dict(data)
    with WinRateEvaluator(pool, num_matches=matches, workers=args.workers) as ev:
        x, f, glog = ga_search(x_o, d, cfg, ev)
    _print_deck(x, pool)
    print(f"fitness {f:.4f}, f calls {glog.f_calls}, generations {glog.generations}")
    if args.out:
        _write_json(args.out, {"config": {**asdict(cfg), "num_matches": matches, "pool_seed": pool.seed,
                                          "opponent": deck_indices(x_o)},
                               "deck": deck_indices(x), "fitness": f, "ga_log": glog.to_dict()})
    return EXIT_OK


def cmd_mc(args) -> int:
    pool = _load_pool(args.pool)
    x_o = _opponent(args, pool)
    d = int(x_o.sum())
    data = _merged(args, "config", {"x": "x"})
    predictor_path = data.pop("predictor", None) or args.predictor
    size = data.pop("dataset_size", None) or args.dataset_size
    label_matches = data.pop("label_matches", None) or args.label_matches
    hp = PredictorHyperparams.from_dict({"seed": args.seed, **data.pop("hyperparams", {})})
    _apply_seed(args, data)
    cfg = McConfig.from_dict(data)
    offline = {}
    if predictor_path and Path(predictor_path).exists():
        predictor = WinRatePredictor.load(predictor_path)
        if predictor.n != pool.n_cards or predictor.d != d:
            raise InvalidArgument("predictor N/D do not match the pool and opponent deck")
    else:
        with WinRateEvaluator(pool, num_matches=label_matches, workers=args.workers) as ev:
            data_set = build_predictor_dataset(ev, d, size, args.seed)
        predictor, metrics = train_predictor(data_set, hp)
        offline = {"dataset_size": size, "label_matches": label_matches, "metrics": metrics}
        if predictor_path:
            predictor.save(predictor_path)
    x, mlog = mc_solve(predictor, x_o, cfg)
    _print_deck(x, pool)
    print(f"predicted win rate {mlog.predicted_win_rate:.4f} over X={cfg.x}, f calls {mlog.f_calls}")
    if args.out:
        _write_json(args.out, {"config": {**asdict(cfg), "predictor": predictor_path,
                                          "hyperparams": asdict(hp), "pool_seed": pool.seed,
                                          "opponent": deck_indices(x_o)},
                               "deck": deck_indices(x), "mc_log": mlog.to_dict(), "offline": offline})
    return EXIT_OK


def cmd_brute(args) -> int:
    pool = _load_pool(args.pool)
    x_o = _opponent(args, pool)
    d = int(x_o.sum())
    with WinRateEvaluator(pool, num_matches=args.num_matches, workers=args.workers) as ev:
        ranking = brute_force_solve(ev, x_o, d, args.seed)
    _print_deck(ranking[0][0], pool)
    print(f"best f {ranking[0][1]:.4f} of {len(ranking)} decks")
    if args.out:
        _write_json(args.out, {"config": {"pool_seed": pool.seed, "n": pool.n_cards, "d": d,
                                          "num_matches": args.num_matches, "seed": args.seed,
                                          "opponent": deck_indices(x_o)},
                               "ranking": [{"deck": deck_indices(x), "win_rate": f} for x, f in ranking]})
    return EXIT_OK


def cmd_bench(args) -> int:
    data = cfgmod.load_json(args.config)
    if args.seed_given:
        data["seed"] = args.seed
    if args.workers_given:
        data["workers"] = args.workers
    out = Path(args.out)
    partial_path = out.with_suffix(".rows.jsonl")
    try:
        cfg = ExperimentConfig.from_dict(data)
        result = run_experiment(cfg, partial_path=partial_path)
    except (PartialResults, ConfigurationError, InvalidArgument) as exc:
        res = getattr(exc, "result", None)
        doc = res.to_dict() if res is not None else {
            "config": data, "instances": [], "rows": [], "offline": {}, "aggregates": {},
            "partial": True, "error": f"{type(exc).__name__}: {exc}", "notes": []}
        doc["partial"] = True
        emit_report(doc, res.stats() if res is not None else [], out, masked=args.mask_timing)
        print(f"benchmark incomplete: {exc}; partial results in {out}", file=sys.stderr)
        return EXIT_PARTIAL
    emit_report(result, result.stats(), out, masked=args.mask_timing)
    print(out.with_suffix(".txt").read_text(), end="")
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand from resetting a value given before it
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                        help="match worker processes (default: logical cores)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="deckrec", description="Deck recommendation by learned search policies.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("genpool", parents=[common], help="generate a card pool")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_genpool)

    t = sub.add_parser("train", parents=[common], help="train the Q-function")
    t.add_argument("--pool", required=True)
    t.add_argument("--config")
    t.add_argument("--budget", type=float, help="wall-clock budget in seconds")
    t.add_argument("--episodes", type=int, help="episode cap")
    t.add_argument("--d", type=int)
    t.add_argument("--num-matches", type=int)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("solve", parents=[common], help="solve one instance with a trained Q-function")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--opponent", required=True, help="card ids 'a,b,c' or a JSON deck file")
    s.add_argument("--init", help="initial deck; random from --seed when omitted")
    s.add_argument("--pool", help="pool file, to print card details")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    def instance_args(q):
        q.add_argument("--pool", required=True)
        q.add_argument("--opponent", required=True, help="card ids, a JSON deck file, or 'random'")
        q.add_argument("--d", type=int, help="deck size when --opponent random")
        q.add_argument("--num-matches", type=int, default=300)
        q.add_argument("--out")

    a = sub.add_parser("ga", parents=[common], help="genetic algorithm baseline")
    instance_args(a)
    a.add_argument("--config")
    a.add_argument("--max-f-calls", type=int)
    a.add_argument("--budget", type=float)
    a.set_defaults(func=cmd_ga)

    m = sub.add_parser("mc", parents=[common], help="Monte-Carlo search over a win-rate predictor")
    instance_args(m)
    m.add_argument("--config")
    m.add_argument("--x", type=int, help="number of sampled decks")
    m.add_argument("--predictor", help="predictor file; trained and saved here if missing")
    m.add_argument("--dataset-size", type=int, default=2000)
    m.add_argument("--label-matches", type=int, default=LABEL_MATCHES, help="matches per training label")
    m.set_defaults(func=cmd_mc)

    b = sub.add_parser("brute", parents=[common], help="rank every deck (tiny pools only)")
    instance_args(b)
    b.set_defaults(func=cmd_brute)

    e = sub.add_parser("bench", parents=[common], help="run a benchmark experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True, help="report path (JSON; a .txt table is written alongside)")
    e.add_argument("--mask-timing", action="store_true", help="write timing fields as null")
    e.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.seed_given = hasattr(args, "seed")
    args.workers_given = hasattr(args, "workers")
    args.seed = getattr(args, "seed", 0)
    args.workers = max(1, args.workers) if args.workers_given else default_workers()
    try:
        return args.func(args)
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except InstanceTooLarge as exc:
        print(f"instance too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (InvalidArgument, ConfigurationError, InvalidAction, DeckrecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
