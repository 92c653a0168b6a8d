"""Multi-instance, multi-run comparison of deck search algorithms."""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from deckrec import config as cfgmod
from deckrec.baselines.ga import GaConfig, ga_search
from deckrec.baselines.mc import (LABEL_MATCHES, McConfig, PredictorHyperparams, WinRatePredictor,
                                  build_predictor_dataset, mc_solve, train_predictor)
from deckrec.bench.stats import pairwise_welch
from deckrec.bench.timing import time_algorithm
from deckrec.decks import deck_indices, generate_instance_chain, random_deck
from deckrec.engine.cards import CardPool, generate_card_pool
from deckrec.engine.match import EVALUATIONS, WinRateEvaluator, derive_seed
from deckrec.errors import ConfigurationError, DeckrecError
from deckrec.qlearn.agent import TrainConfig, load_checkpoint, solve, train

log = logging.getLogger(__name__)

KINDS = ("ga", "qdeckrec", "mc")

# seed-tree branches; true-f re-evaluation lives on its own branch so it
# never shares a seed with anything used during search
_RUN, _TRUE_F, _CHAIN, _CHAIN_F, _OFFLINE = 1, 2, 3, 4, 5

NOTES = [
    "win_rate is the true f of each output deck, re-evaluated with seeds disjoint from search",
    "wall_s, cpu_s and f_calls cover solving only; re-evaluation of outputs is excluded",
    "offline costs (Q-function training, predictor dataset and fitting) are reported separately",
    "stats: two-tailed Welch t-test on per-instance median win rates, paired by instance index",
]


@dataclass
class AlgoSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown algorithm kind {self.kind!r}; expected one of {KINDS}")


@dataclass
class ExperimentConfig:
    roster: list
    pool_seed: int = 7
    n_cards: int = 40
    pool_path: Optional[str] = None
    d: int = 8
    instances: int = 20
    runs: int = 10
    chain_warmup: int = 10
    num_matches: int = 300
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.instances < 1:
            raise ConfigurationError("instances must be >= 1")
        if not self.roster:
            raise ConfigurationError("roster must not be empty")
        self.roster = [r if isinstance(r, AlgoSpec) else cfgmod.from_dict(AlgoSpec, r)
                       for r in self.roster]
        names = [r.name for r in self.roster]
        if len(set(names)) != len(names):
            raise ConfigurationError("roster names must be unique")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cfgmod.from_dict(cls, d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunRow:
    algo: str
    instance_id: int
    run: int
    deck: list
    win_rate: float
    f_calls: int
    wall_s: float
    cpu_s: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ExperimentResult:
    config: dict
    instances: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    offline: dict = field(default_factory=dict)
    partial: bool = False
    error: Optional[str] = None

    def medians(self) -> dict:
        """algo -> per-instance median win rates (instance order)."""
        ids = [inst["id"] for inst in self.instances]
        out = {}
        for spec in self.config["roster"]:
            per = []
            for i in ids:
                vals = [r.win_rate for r in self.rows if r.algo == spec["name"] and r.instance_id == i]
                if len(vals) == self.config["runs"]:
                    per.append(float(np.median(vals)))
            out[spec["name"]] = per
        return out

    def aggregates(self) -> dict:
        meds = self.medians()
        out = {}
        for name, per in meds.items():
            rows = [r for r in self.rows if r.algo == name]
            out[name] = {
                "instances_complete": len(per),
                "per_instance_median": per,
                "mean_win_rate": float(np.mean(per)) if per else None,
                "mean_f_calls": float(np.mean([r.f_calls for r in rows])) if rows else None,
                "mean_wall_s": float(np.mean([r.wall_s for r in rows])) if rows else None,
                "mean_cpu_s": float(np.mean([r.cpu_s for r in rows])) if rows else None,
            }
        return out

    def stats(self) -> list:
        meds = self.medians()
        n = min((len(v) for v in meds.values()), default=0)
        if n < 2 or len(meds) < 2:
            return []
        return [s.to_dict() for s in pairwise_welch({k: v[:n] for k, v in meds.items()})]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "instances": self.instances,
            "rows": [r.to_dict() for r in self.rows],
            "offline": self.offline,
            "aggregates": self.aggregates(),
            "partial": self.partial,
            "error": self.error,
            "notes": NOTES,
        }


class PartialResults(DeckrecError):
    """The experiment stopped early; ``result`` holds what completed."""

    def __init__(self, msg: str, result: ExperimentResult):
        super().__init__(msg)
        self.result = result


# ---------------------------------------------------------------- roster resolution

def _load_pool(cfg: ExperimentConfig) -> CardPool:
    if cfg.pool_path:
        try:
            return CardPool.load(cfg.pool_path)
        except FileNotFoundError as exc:
            raise ConfigurationError(f"pool file not found: {cfg.pool_path}") from exc
    return generate_card_pool(cfg.pool_seed, cfg.n_cards)


class _Solver:
    """A resolved roster entry: ``run(x_o, seed) -> (deck, extra)``."""

    def __init__(self, spec: AlgoSpec, pool: CardPool, cfg: ExperimentConfig, index: int,
                 predictors: dict):
        self.spec = spec
        self.offline = {}
        p = dict(spec.params)
        n, d = pool.n_cards, cfg.d
        if spec.kind == "ga":
            matches = p.pop("num_matches", cfg.num_matches)
            self.ga = cfgmod.from_dict(GaConfig, p)
            self.evaluator = WinRateEvaluator(pool, num_matches=matches)
        elif spec.kind == "qdeckrec":
            if "checkpoint" in p:
                path = p.pop("checkpoint")
                if p:
                    raise ConfigurationError(f"unknown qdeckrec keys: {sorted(p)}")
                if not Path(path).exists():
                    raise ConfigurationError(f"checkpoint not found: {path}")
                self.theta, meta = load_checkpoint(path)
                if meta["n"] != n or meta["d"] != d:
                    raise ConfigurationError(f"checkpoint is for N={meta['n']}, D={meta['d']}; "
                                             f"experiment uses N={n}, D={d}")
                self.offline = {"checkpoint": str(path)}
            elif "train" in p:
                tdict = dict(p.pop("train"))
                if p:
                    raise ConfigurationError(f"unknown qdeckrec keys: {sorted(p)}")
                tdict.setdefault("d", d)
                tdict.setdefault("seed", derive_seed(cfg.seed, _OFFLINE, index))
                tdict.setdefault("workers", cfg.workers)
                tcfg = cfgmod.from_dict(TrainConfig, tdict)
                if tcfg.d != d:
                    raise ConfigurationError("train.d must equal the experiment's d")
                evaluator = WinRateEvaluator(pool, num_matches=tcfg.num_matches)
                wall, cpu, (self.theta, tlog) = time_algorithm(train, pool, tcfg, evaluator)
                self.offline = {"train_episodes": tlog.episodes, "train_f_calls": tlog.f_calls,
                                "stop_reason": tlog.stop_reason, "train_wall_s": wall,
                                "train_cpu_s": cpu}
            else:
                raise ConfigurationError(f"{spec.name}: qdeckrec needs 'checkpoint' or 'train'")
        else:
            self.mc = cfgmod.from_dict(McConfig, {"x": p.pop("x", 670)})
            if "predictor" in p:
                path = p.pop("predictor")
                if p:
                    raise ConfigurationError(f"unknown mc keys: {sorted(p)}")
                if not Path(path).exists():
                    raise ConfigurationError(f"predictor not found: {path}")
                self.predictor = WinRatePredictor.load(path)
                if self.predictor.n != n or self.predictor.d != d:
                    raise ConfigurationError("predictor N/D do not match the experiment")
                self.offline = {"predictor": str(path)}
            else:
                # identical dataset specs share one fitted predictor
                spec_key = json.dumps(p, sort_keys=True)
                if spec_key not in predictors:
                    predictors[spec_key] = self._fit_predictor(p, pool, cfg)
                self.predictor, self.offline = predictors[spec_key]

    @staticmethod
    def _fit_predictor(p: dict, pool: CardPool, cfg: ExperimentConfig) -> tuple:
        p = dict(p)
        size = p.pop("dataset_size", 2000)
        matches = p.pop("label_matches", LABEL_MATCHES)
        hp = cfgmod.from_dict(PredictorHyperparams, p.pop("hyperparams", {}))
        if p:
            raise ConfigurationError(f"unknown mc keys: {sorted(p)}")
        seed = derive_seed(cfg.seed, _OFFLINE, size, matches)

        def build():
            with WinRateEvaluator(pool, num_matches=matches, workers=cfg.workers) as ev:
                data = build_predictor_dataset(ev, cfg.d, size, seed)
            return train_predictor(data, hp)

        wall, cpu, (predictor, metrics) = time_algorithm(build)
        return predictor, {"dataset_size": size, "label_matches": matches,
                           "dataset_f_calls": size, "metrics": metrics,
                           "fit_wall_s": wall, "fit_cpu_s": cpu}

    def run(self, x_o, d: int, seed: int) -> tuple:
        n = len(x_o)
        if self.spec.kind == "ga":
            ga = GaConfig(**{**asdict(self.ga), "seed": seed})
            x, _, glog = ga_search(x_o, d, ga, self.evaluator)
            return x, {"generations": glog.generations, "ga_f_calls": glog.f_calls}
        if self.spec.kind == "qdeckrec":
            x0 = random_deck(n, d, seed)
            x, slog = solve(self.theta, x_o, x0, d)
            return x, {"q_evaluations": slog.q_evaluations}
        x, mlog = mc_solve(self.predictor, x_o, McConfig(x=self.mc.x, seed=seed))
        return x, {"predicted_win_rate": mlog.predicted_win_rate, "x": self.mc.x}


# ---------------------------------------------------------------- experiment

def run_experiment(cfg: ExperimentConfig, partial_path=None) -> ExperimentResult:
    """Build the instance chain, run every roster algorithm ``runs`` times on
    every instance and re-evaluate each output's true win rate.

    Completed rows are appended to ``partial_path`` (JSONL) as they finish.
    Any failure after setup raises :class:`PartialResults` carrying the rows
    gathered so far.
    """
    pool = _load_pool(cfg)
    if not 0 < cfg.d < pool.n_cards:
        raise ConfigurationError(f"need 0 < d < N, got d={cfg.d}, N={pool.n_cards}")
    result = ExperimentResult(config=cfg.to_dict())
    partial_fh = open(partial_path, "w") if partial_path else None
    truth = WinRateEvaluator(pool, num_matches=cfg.num_matches, workers=cfg.workers)
    try:
        predictors = {}
        solvers = [_Solver(spec, pool, cfg, i, predictors) for i, spec in enumerate(cfg.roster)]
        for s in solvers:
            if s.offline:
                result.offline[s.spec.name] = s.offline

        def provider(inst, rnd):
            out = []
            for i, s in enumerate(solvers):
                x, _ = s.run(inst.x_o, cfg.d, derive_seed(cfg.seed, _CHAIN, rnd, i))
                f = truth(x, inst.x_o, derive_seed(cfg.seed, _CHAIN_F, rnd, i))
                out.append((s.spec.name, x, f))
            return out

        chain = generate_instance_chain(pool, cfg.d, provider, cfg.instances,
                                        warmup=cfg.chain_warmup,
                                        seed=derive_seed(cfg.seed, _CHAIN))
        result.instances = [{"id": inst.id, "x_o": deck_indices(inst.x_o)}
                            for inst in chain.instances]
        for inst in chain.instances:
            for i, s in enumerate(solvers):
                for run in range(cfg.runs):
                    seed = derive_seed(cfg.seed, _RUN, i, inst.id, run)
                    f0 = EVALUATIONS.value
                    wall, cpu, (x, extra) = time_algorithm(s.run, inst.x_o, cfg.d, seed)
                    f_calls = EVALUATIONS.value - f0
                    f = truth(x, inst.x_o, derive_seed(cfg.seed, _TRUE_F, i, inst.id, run))
                    row = RunRow(s.spec.name, inst.id, run, deck_indices(x), float(f),
                                 int(f_calls), wall, cpu, extra)
                    result.rows.append(row)
                    if partial_fh:
                        partial_fh.write(json.dumps(row.to_dict()) + "\n")
                        partial_fh.flush()
                log.info("instance %d: %s done", inst.id, s.spec.name)
    except ConfigurationError:
        raise
    except (Exception, KeyboardInterrupt) as exc:
        result.partial = True
        result.error = f"{type(exc).__name__}: {exc}"
        raise PartialResults(result.error, result) from exc
    finally:
        truth.close()
        for s in locals().get("solvers", []):
            if hasattr(s, "evaluator"):
                s.evaluator.close()
        if partial_fh:
            partial_fh.close()
    return result


def rows_from_jsonl(path) -> list:
    return [RunRow(**json.loads(line)) for line in Path(path).read_text().splitlines() if line.strip()]

