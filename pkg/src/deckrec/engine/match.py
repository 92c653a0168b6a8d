"""Match simulation and the black-box win-rate evaluator f(x_p; x_o)."""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, TextIO

import numpy as np

from deckrec.engine.ai import DEFAULT_PROXY, greedy_policy_move
from deckrec.engine.cards import CardPool
from deckrec.engine.game import (
    DEFAULT_TURN_LIMIT, DRAW_RESULT, P0, P1, apply_unchecked, new_game,
)
from deckrec.errors import InvalidArgument

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


class _Counter:
    """Process-wide count of f evaluations (calls to evaluate_win_rate)."""

    def __init__(self):
        self.value = 0

    def add(self, k: int = 1) -> None:
        self.value += k


EVALUATIONS = _Counter()


@dataclass(frozen=True)
class MatchOutcome:
    winner: int  # P0, P1 or DRAW_RESULT
    turns_played: int


@dataclass(frozen=True)
class WinRate:
    value: float
    num_matches: int
    num_draws: int
    wins: int

    @classmethod
    def from_counts(cls, wins: int, draws: int, n: int) -> "WinRate":
        return cls(value=(wins + 0.5 * draws) / n, num_matches=n, num_draws=draws, wins=wins)


def derive_seed(*parts: int) -> int:
    """Hash integer parts into one 64-bit seed (order-sensitive, platform-stable)."""
    ss = np.random.SeedSequence([int(p) & _SEED_MASK for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _deck_ids(pool: CardPool, deck) -> list:
    bits = np.asarray(deck)
    if bits.ndim != 1 or bits.shape[0] != pool.n_cards:
        raise InvalidArgument(f"deck length {bits.shape} does not match pool size {pool.n_cards}")
    if not np.isin(bits, (0, 1)).all() or bits.sum() < 1:
        raise InvalidArgument("deck must be a non-empty binary vector")
    return [int(i) for i in np.flatnonzero(bits)]


def _play(pool, ids_p, ids_o, proxies, match_seed, first_player, turn_limit, transcript=None):
    rng = np.random.default_rng(match_seed & _SEED_MASK)
    # every selected card goes into the library twice
    lib_p = rng.permutation(np.repeat(ids_p, 2)).tolist()
    lib_o = rng.permutation(np.repeat(ids_o, 2)).tolist()
    state = new_game(pool, lib_p, lib_o, first_player=first_player, turn_limit=turn_limit)
    while not state.is_terminal:
        action = greedy_policy_move(state, proxies[state.active])
        if transcript is not None:
            transcript.write(json.dumps({
                "turn": state.turn, "player": state.active, "action": repr(action),
                "hp": [state.sides[0].hp, state.sides[1].hp],
            }) + "\n")
        apply_unchecked(state, action)
    return MatchOutcome(winner=state.winner(), turns_played=min(state.turn, 2 * turn_limit))


def simulate_match(pool: CardPool, deck_p, deck_o,
                   proxies: tuple = (DEFAULT_PROXY, DEFAULT_PROXY),
                   match_seed: int = 0, first_player: int = P0,
                   turn_limit: int = DEFAULT_TURN_LIMIT,
                   transcript: Optional[TextIO] = None) -> MatchOutcome:
    """Play one match of ``deck_p`` (as P0) against ``deck_o`` (as P1).

    Both sides follow the greedy proxy. ``transcript``, if given, receives
    one JSON line per action.
    """
    if first_player not in (P0, P1):
        raise InvalidArgument(f"first_player must be P0 or P1, got {first_player}")
    ids_p = _deck_ids(pool, deck_p)
    ids_o = _deck_ids(pool, deck_o)
    return _play(pool, ids_p, ids_o, proxies, int(match_seed), first_player, turn_limit, transcript)


def _count_range(pool, ids_p, ids_o, proxies, root_seed, start, stop, turn_limit):
    wins = draws = 0
    for i in range(start, stop):
        out = _play(pool, ids_p, ids_o, proxies, derive_seed(root_seed, i), i % 2, turn_limit)
        if out.winner == P0:
            wins += 1
        elif out.winner == DRAW_RESULT:
            draws += 1
    return wins, draws


def evaluate_win_rate(pool: CardPool, x_p, x_o, proxies: tuple = (DEFAULT_PROXY, DEFAULT_PROXY),
                      num_matches: int = 300, root_seed: int = 0,
                      turn_limit: int = DEFAULT_TURN_LIMIT,
                      executor: Optional[ProcessPoolExecutor] = None) -> WinRate:
    """Estimate f(x_p; x_o) as (wins + draws/2) / num_matches.

    Match i uses seed ``derive_seed(root_seed, i)`` and first player
    ``i % 2``, so the estimate does not depend on how the matches are
    split across workers.
    """
    if num_matches < 2 or num_matches % 2:
        raise InvalidArgument(f"num_matches must be even and >= 2, got {num_matches}")
    ids_p = _deck_ids(pool, x_p)
    ids_o = _deck_ids(pool, x_o)
    EVALUATIONS.add()
    if executor is None:
        wins, draws = _count_range(pool, ids_p, ids_o, proxies, root_seed, 0, num_matches, turn_limit)
    else:
        n_chunks = max(1, getattr(executor, "_max_workers", 1))
        bounds = np.linspace(0, num_matches, n_chunks + 1).astype(int)
        futures = [executor.submit(_count_range, pool, ids_p, ids_o, proxies, root_seed,
                                   int(a), int(b), turn_limit)
                   for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        wins = draws = 0
        for fut in futures:
            w, d = fut.result()
            wins += w
            draws += d
    return WinRate.from_counts(wins, draws, num_matches)


def _evaluate_job(args):
    pool, x_p, x_o, proxies, num_matches, root_seed, turn_limit = args
    return evaluate_win_rate(pool, x_p, x_o, proxies, num_matches, root_seed, turn_limit).value


class WinRateEvaluator:
    """Instrumented f(.) for one pool and proxy pair.

    ``calls`` counts invocations (one per f evaluation, whatever the number
    of matches behind it). With ``workers > 1`` batches given to
    :meth:`many` are spread over a process pool.
    """

    def __init__(self, pool: CardPool, proxies: tuple = (DEFAULT_PROXY, DEFAULT_PROXY),
                 num_matches: int = 300, workers: int = 1,
                 turn_limit: int = DEFAULT_TURN_LIMIT):
        if num_matches < 2 or num_matches % 2:
            raise InvalidArgument(f"num_matches must be even and >= 2, got {num_matches}")
        self.pool = pool
        self.proxies = tuple(proxies)
        self.num_matches = int(num_matches)
        self.workers = max(1, int(workers))
        self.turn_limit = turn_limit
        self.calls = 0
        self._executor = None

    def __call__(self, x_p, x_o, root_seed: int) -> float:
        self.calls += 1
        return evaluate_win_rate(self.pool, x_p, x_o, self.proxies, self.num_matches,
                                 root_seed, self.turn_limit).value

    def many(self, pairs: Sequence[tuple], seeds: Sequence[int]) -> list:
        """Evaluate a batch of (x_p, x_o) pairs; counts one call per pair."""
        self.calls += len(pairs)
        jobs = [(self.pool, np.asarray(p), np.asarray(o), self.proxies, self.num_matches,
                 int(s), self.turn_limit) for (p, o), s in zip(pairs, seeds)]
        if self.workers == 1 or len(jobs) < 2:
            return [_evaluate_job(j) for j in jobs]
        # the workers' own counters live in other processes
        EVALUATIONS.add(len(jobs))
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        return list(self._executor.map(_evaluate_job, jobs, chunksize=max(1, len(jobs) // (4 * self.workers))))

    def reset(self) -> None:
        self.calls = 0

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1
