"""The deck-search MDP: states {x_p, x_o, t}, card-replacement actions,
deterministic transitions and the exponentially amplified reward."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from deckrec.decks import deck_from_indices, deck_indices, require_deck
from deckrec.errors import HorizonExhausted, InvalidAction, InvalidArgument


@dataclass(frozen=True, eq=False)
class SearchState:
    x_p: np.ndarray
    x_o: np.ndarray
    t: int

    @property
    def n(self) -> int:
        return self.x_p.shape[0]

    @property
    def d(self) -> int:
        return int(self.x_p.sum())

    @property
    def terminal(self) -> bool:
        return self.t >= self.d

    def __eq__(self, other):
        return (isinstance(other, SearchState) and self.t == other.t
                and np.array_equal(self.x_p, other.x_p) and np.array_equal(self.x_o, other.x_o))

    def __hash__(self):
        return hash((self.x_p.tobytes(), self.x_o.tobytes(), self.t))

    def to_dict(self) -> dict:
        return {"n": self.n, "x_p": deck_indices(self.x_p), "x_o": deck_indices(self.x_o), "t": self.t}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchState":
        n = int(d["n"])
        return cls(deck_from_indices(d["x_p"], n), deck_from_indices(d["x_o"], n), int(d["t"]))


class SearchAction(NamedTuple):
    """Replace card ``out_card`` by ``in_card``; Keep when both are -1."""

    out_card: int = -1
    in_card: int = -1

    @property
    def is_keep(self) -> bool:
        return self.out_card < 0

    def __repr__(self):
        return "Keep" if self.is_keep else f"Replace({self.out_card}->{self.in_card})"


KEEP = SearchAction()


@dataclass(frozen=True, eq=False)
class Transition:
    s: SearchState
    a: SearchAction
    r: float
    s_next: SearchState

    def to_dict(self) -> dict:
        return {"s": self.s.to_dict(), "a": list(self.a), "r": self.r, "s_next": self.s_next.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Transition":
        return cls(SearchState.from_dict(d["s"]), SearchAction(*d["a"]), float(d["r"]),
                   SearchState.from_dict(d["s_next"]))


def write_transitions(transitions: Iterable[Transition], fh) -> None:
    for tr in transitions:
        fh.write(json.dumps(tr.to_dict()) + "\n")


def read_transitions(fh) -> list:
    return [Transition.from_dict(json.loads(line)) for line in fh if line.strip()]


@dataclass(frozen=True)
class RewardConfig:
    b: float = 10.0
    num_matches: int = 300

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidArgument("amplification b must be positive")


def initial_state(x_p0, x_o, d: Optional[int] = None) -> SearchState:
    x_p0 = np.asarray(x_p0)
    n = x_p0.shape[0] if x_p0.ndim == 1 else -1
    d = int(np.asarray(x_o).sum()) if d is None else d
    x_p = require_deck(x_p0, n, d, "x_p0").copy()
    x_o = require_deck(x_o, n, d, "x_o").copy()
    x_p.flags.writeable = False
    x_o.flags.writeable = False
    return SearchState(x_p, x_o, 0)


def num_actions(n: int, d: int) -> int:
    return (n - d) * d + 1


def enumerate_actions(s: SearchState) -> list:
    """Keep first, then every Replace(out, in) in ascending (out, in) order."""
    if s.terminal:
        raise HorizonExhausted(f"step counter t={s.t} reached the horizon")
    ins = np.flatnonzero(s.x_p == 0).tolist()
    actions = [KEEP]
    for out in np.flatnonzero(s.x_p).tolist():
        actions.extend(SearchAction(out, i) for i in ins)
    return actions


def action_arrays(s: SearchState) -> tuple:
    """(out, in) id arrays for the Replace actions in :func:`enumerate_actions` order."""
    outs = np.flatnonzero(s.x_p)
    ins = np.flatnonzero(s.x_p == 0)
    return np.repeat(outs, len(ins)), np.tile(ins, len(outs))


def is_legal(s: SearchState, a: SearchAction) -> bool:
    if s.terminal:
        return False
    if a.is_keep:
        return a.in_card < 0
    n = s.n
    return (0 <= a.out_card < n and 0 <= a.in_card < n
            and s.x_p[a.out_card] == 1 and s.x_p[a.in_card] == 0)


def apply_search_action(s: SearchState, a: SearchAction) -> SearchState:
    if s.terminal:
        raise HorizonExhausted(f"step counter t={s.t} reached the horizon")
    if not is_legal(s, a):
        raise InvalidAction(f"{a!r} is not legal for deck {deck_indices(s.x_p)}")
    if a.is_keep:
        return SearchState(s.x_p, s.x_o, s.t + 1)
    x = s.x_p.copy()
    x[a.out_card] = 0
    x[a.in_card] = 1
    x.flags.writeable = False
    return SearchState(x, s.x_o, s.t + 1)


def amplify(f: float, b: float) -> float:
    return math.exp(b * f)


def step_reward(s_next: SearchState, cfg: RewardConfig, evaluator: Callable, root_seed: int = 0) -> float:
    """exp(b * f(x_p'; x_o)). ``evaluator(x_p, x_o, root_seed)`` returns f."""
    if s_next.t < 1:
        raise InvalidArgument("reward is defined for successor states (t >= 1)")
    return amplify(evaluator(s_next.x_p, s_next.x_o, root_seed), cfg.b)


def episode_return(rewards: Sequence[float], d: int) -> float:
    """Undiscounted sum of the D step rewards of one episode."""
    if len(rewards) != d:
        raise InvalidArgument(f"expected {d} rewards, got {len(rewards)}")
    return float(sum(rewards))
