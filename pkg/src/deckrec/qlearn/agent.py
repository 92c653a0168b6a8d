"""Q-learning deck-search agent: features, epsilon-greedy rollouts with
prioritized replay, and the evaluation-free greedy solver."""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from deckrec import config as cfgmod
from deckrec.decks import random_deck, require_deck
from deckrec.engine.cards import CardPool
from deckrec.engine.match import EVALUATIONS, WinRateEvaluator, derive_seed
from deckrec.errors import HorizonExhausted, InvalidArgument, TrainingDiverged
from deckrec.mdp import (
    KEEP, RewardConfig, SearchAction, SearchState, Transition, action_arrays,
    amplify, apply_search_action, initial_state, num_actions,
)
from deckrec.qlearn.mlp import (
    MlpParams, apply_update, init_mlp, q_forward, q_forward_batch, weighted_gradient,
)
from deckrec.qlearn.replay import PrioritizedReplay

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    decrement_per_episode: float = 0.0005
    floor: float = 0.2

    def value(self, episodes_done: int) -> float:
        return max(self.floor, self.start - self.decrement_per_episode * episodes_done)


@dataclass
class TrainConfig:
    d: int = 15
    hidden: int = 128
    learning_rate: float = 1e-3
    batch_size: int = 64
    # learner sees r / reward_scale; None means exp(b), mapping rewards into (0, 1]
    reward_scale: Optional[float] = None
    updates_per_episode: int = 1
    budget_seconds: Optional[float] = None
    max_episodes: Optional[int] = None
    seed: int = 0
    b: float = 10.0
    num_matches: int = 300
    epsilon_start: float = 1.0
    epsilon_decrement: float = 0.0005
    epsilon_floor: float = 0.2
    replay_capacity: int = 100_000
    alpha_per: float = 0.6
    beta0: float = 0.0
    beta_step: float = 1e-5
    eps_priority: float = 1e-6
    keep_reward_cache: bool = True
    checkpoint_every: int = 50
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise InvalidArgument("learning_rate must be in (0, 1]")
        if self.batch_size < 1:
            raise InvalidArgument("batch_size must be >= 1")
        if self.d < 1 or self.hidden < 1:
            raise InvalidArgument("d and hidden must be positive")
        RewardConfig(b=self.b, num_matches=self.num_matches)

    @property
    def epsilon(self) -> EpsilonSchedule:
        return EpsilonSchedule(self.epsilon_start, self.epsilon_decrement, self.epsilon_floor)

    @property
    def reward(self) -> RewardConfig:
        return RewardConfig(b=self.b, num_matches=self.num_matches)

    @property
    def effective_reward_scale(self) -> float:
        return math.exp(self.b) if self.reward_scale is None else float(self.reward_scale)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cfgmod.from_dict(cls, d)


@dataclass
class TrainLog:
    episodes: int = 0
    f_calls: int = 0
    keep_cache_hits: int = 0
    updates: int = 0
    epsilon: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    returns: list = field(default_factory=list)
    final_win_rates: list = field(default_factory=list)
    wall_s: float = 0.0
    cpu_s: float = 0.0
    stop_reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveLog:
    q_evaluations: int = 0
    f_calls: int = 0
    actions: list = field(default_factory=list)
    q_values: list = field(default_factory=list)
    wall_s: float = 0.0
    cpu_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- features

def state_features(s: SearchState) -> np.ndarray:
    """[x_p, x_o, t / D] as floats (length 2N + 1)."""
    return np.concatenate([s.x_p, s.x_o, [s.t / s.d]]).astype(float)


def featurize(s: SearchState, a: SearchAction) -> np.ndarray:
    """Features of the state-action pair, i.e. of the successor state."""
    return state_features(apply_search_action(s, a))


def action_features(s: SearchState) -> np.ndarray:
    """One featurized row per action, in enumerate_actions order (Keep first)."""
    if s.terminal:
        raise HorizonExhausted(f"step counter t={s.t} reached the horizon")
    n = s.n
    base = np.concatenate([s.x_p, s.x_o, [(s.t + 1) / s.d]]).astype(float)
    outs, ins = action_arrays(s)
    phis = np.tile(base, (len(outs) + 1, 1))
    rows = np.arange(1, len(outs) + 1)
    phis[rows, outs] = 0.0
    phis[rows, ins] = 1.0
    assert phis.shape[1] == 2 * n + 1
    return phis


def action_at(s: SearchState, k: int) -> SearchAction:
    if k == 0:
        return KEEP
    outs, ins = action_arrays(s)
    return SearchAction(int(outs[k - 1]), int(ins[k - 1]))


def q_values(theta: MlpParams, s: SearchState) -> np.ndarray:
    return q_forward_batch(theta, action_features(s))


def select_action(theta: MlpParams, s: SearchState, epsilon: float,
                  rng: np.random.Generator) -> SearchAction:
    """Epsilon-greedy; the greedy branch breaks ties towards Keep, then the lowest index."""
    if s.terminal:
        raise HorizonExhausted(f"step counter t={s.t} reached the horizon")
    if epsilon > 0 and rng.random() < epsilon:
        return action_at(s, int(rng.integers(num_actions(s.n, s.d))))
    return action_at(s, int(np.argmax(q_values(theta, s))))


# ---------------------------------------------------------------- learning

def td_error(theta: MlpParams, tr: Transition, reward_scale: float = 1.0) -> float:
    """r + max_a' Q(s', a') - Q(s, a), with the max term 0 at the horizon."""
    q_sa = q_forward(theta, state_features(tr.s_next))
    bootstrap = 0.0 if tr.s_next.terminal else float(np.max(q_values(theta, tr.s_next)))
    return tr.r / reward_scale + bootstrap - q_sa


def td_errors(theta: MlpParams, batch, reward_scale: float = 1.0) -> tuple:
    """Vectorised :func:`td_error` over a batch; also returns the Q(s, a) features."""
    phis = np.array([state_features(tr.s_next) for tr in batch])
    q_sa = q_forward_batch(theta, phis)
    boot = np.zeros(len(batch))
    live = [i for i, tr in enumerate(batch) if not tr.s_next.terminal]
    if live:
        blocks = [action_features(batch[i].s_next) for i in live]
        q_all = q_forward_batch(theta, np.concatenate(blocks))
        start = 0
        for i, blk in zip(live, blocks):
            boot[i] = q_all[start:start + len(blk)].max()
            start += len(blk)
    rewards = np.array([tr.r for tr in batch]) / reward_scale
    return rewards + boot - q_sa, phis


def learn_step(theta: MlpParams, replay: PrioritizedReplay, m: int, learning_rate: float,
               reward_scale: float, rng: np.random.Generator) -> tuple:
    """One prioritized mini-batch update; returns (new theta, weighted loss)."""
    batch, weights, idx = replay.sample(m, rng)
    # overflow shows up as a non-finite delta and is reported below
    with np.errstate(over="ignore", invalid="ignore"):
        deltas, phis = td_errors(theta, batch, reward_scale)
    if not np.isfinite(deltas).all():
        raise TrainingDiverged("non-finite TD error", checkpoint=theta.copy())
    grad = weighted_gradient(theta, phis, weights * deltas / m)
    new_theta = apply_update(theta, 1.0, grad, learning_rate)
    replay.update_priorities(idx, deltas)
    with np.errstate(over="ignore"):
        loss = float(np.mean(weights * deltas ** 2))
    return new_theta, loss


# ---------------------------------------------------------------- training

def _cpu_now() -> float:
    return time.process_time()


def train(pool: CardPool, cfg: TrainConfig, evaluator: Optional[WinRateEvaluator] = None,
          checkpoint_path=None, init_theta: Optional[MlpParams] = None) -> tuple:
    """Learn Q_theta on random (x_o, x_p0) episodes until the wall-time
    budget or the episode cap is hit. Returns (theta, TrainLog)."""
    n, d = pool.n_cards, cfg.d
    if not 0 < d < n:
        raise InvalidArgument(f"need 0 < d < n, got n={n}, d={d}")
    if evaluator is None:
        evaluator = WinRateEvaluator(pool, num_matches=cfg.num_matches)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, n, d]))
    theta = init_theta.copy() if init_theta is not None else init_mlp(2 * n + 1, cfg.hidden, rng)
    replay = PrioritizedReplay(cfg.replay_capacity, cfg.alpha_per, cfg.beta0, cfg.beta_step,
                               cfg.eps_priority)
    schedule = cfg.epsilon
    scale = cfg.effective_reward_scale
    tlog = TrainLog()
    calls0 = evaluator.calls
    t0, c0 = time.monotonic(), _cpu_now()

    def finish(reason):
        tlog.stop_reason = reason
        tlog.f_calls = evaluator.calls - calls0
        tlog.wall_s = time.monotonic() - t0
        tlog.cpu_s = _cpu_now() - c0

    episode = 0
    while True:
        if cfg.max_episodes is not None and episode >= cfg.max_episodes:
            finish("max_episodes")
            break
        if cfg.budget_seconds is not None and time.monotonic() - t0 >= cfg.budget_seconds:
            finish("budget")
            break
        eps = schedule.value(episode)
        tlog.epsilon.append(eps)
        x_o = random_deck(n, d, rng)
        s = initial_state(random_deck(n, d, rng), x_o)
        ep_seed = derive_seed(cfg.seed, episode)
        last_f = None
        rewards = []
        transitions = []
        for t in range(d):
            a = select_action(theta, s, eps, rng)
            s_next = apply_search_action(s, a)
            if a.is_keep and last_f is not None and cfg.keep_reward_cache:
                f = last_f
                tlog.keep_cache_hits += 1
            else:
                f = evaluator(s_next.x_p, s_next.x_o, derive_seed(ep_seed, t))
            last_f = f
            r = amplify(f, cfg.b)
            rewards.append(r)
            transitions.append(Transition(s, a, r, s_next))
            s = s_next
        for tr in transitions:
            replay.insert(tr)
        tlog.returns.append(float(sum(rewards)))
        tlog.final_win_rates.append(float(last_f))
        if len(replay) >= cfg.batch_size:
            for _ in range(cfg.updates_per_episode):
                try:
                    theta, loss = learn_step(theta, replay, cfg.batch_size, cfg.learning_rate,
                                             scale, rng)
                except TrainingDiverged as exc:
                    finish("diverged")
                    exc.log = tlog
                    raise
                tlog.updates += 1
                tlog.loss.append(loss)
        episode += 1
        tlog.episodes = episode
        if checkpoint_path is not None and cfg.checkpoint_every and episode % cfg.checkpoint_every == 0:
            save_checkpoint(checkpoint_path, theta, n, d, cfg, episode, rng)
    tlog.episodes = episode
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, theta, n, d, cfg, episode, rng, train_log=tlog)
    log.info("trained %d episodes, %d f calls, stop=%s", episode, tlog.f_calls, tlog.stop_reason)
    return theta, tlog


# ---------------------------------------------------------------- solving

def solve(theta: MlpParams, x_o, x_p0, d: Optional[int] = None) -> tuple:
    """Follow argmax_a Q_theta(s, a) for D steps from {x_p0, x_o, 0}.

    Makes no win-rate evaluations; the log records the Q-evaluation count
    and checks the process-wide evaluation counter did not move.
    """
    x_o = np.asarray(x_o)
    n = x_o.shape[0]
    if theta.n_in != 2 * n + 1:
        raise InvalidArgument(f"network expects N={(theta.n_in - 1) // 2}, opponent deck has N={n}")
    d = int(x_o.sum()) if d is None else d
    slog = SolveLog()
    f_before = EVALUATIONS.value
    t0, c0 = time.monotonic(), _cpu_now()
    s = initial_state(require_deck(x_p0, n, d, "x_p0"), x_o, d)
    for _ in range(d):
        qs = q_values(theta, s)
        slog.q_evaluations += len(qs)
        k = int(np.argmax(qs))
        a = action_at(s, k)
        slog.actions.append(repr(a))
        slog.q_values.append(float(qs[k]))
        s = apply_search_action(s, a)
    slog.wall_s = time.monotonic() - t0
    slog.cpu_s = _cpu_now() - c0
    slog.f_calls = EVALUATIONS.value - f_before
    assert slog.f_calls == 0, "solve must not evaluate f"
    return np.array(s.x_p), slog


# ---------------------------------------------------------------- checkpoints

def _rng_state_json(rng: Optional[np.random.Generator]):
    if rng is None:
        return None
    return json.loads(json.dumps(rng.bit_generator.state, default=int))


def save_checkpoint(path, theta: MlpParams, n: int, d: int, cfg: Optional[TrainConfig] = None,
                    episode_count: int = 0, rng: Optional[np.random.Generator] = None,
                    train_log: Optional[TrainLog] = None, kind: str = "q_function") -> None:
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "n": n,
        "d": d,
        "hidden": theta.hidden,
        **theta.to_dict(),
        "train_config": None if cfg is None else asdict(cfg),
        "episode_count": episode_count,
        "rng_state": _rng_state_json(rng),
    }
    if train_log is not None:
        doc["train_log"] = {k: v for k, v in train_log.to_dict().items()
                            if k not in ("wall_s", "cpu_s")}
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_checkpoint(path) -> tuple:
    """Returns (theta, metadata dict)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise InvalidArgument(f"unsupported checkpoint format {doc.get('format_version')}")
    theta = MlpParams.from_dict(doc)
    meta = {k: v for k, v in doc.items() if k not in ("weights", "biases")}
    return theta, meta
