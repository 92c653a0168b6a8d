"""Deck vectors, constraint checks and problem-instance generation.

A deck is a numpy ``int8`` vector of length N with exactly D ones.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from deckrec.engine.ai import DEFAULT_PROXY
from deckrec.engine.cards import CardPool, CardSpec
from deckrec.errors import GenerationFailure, InvalidArgument

DECK_DTYPE = np.int8


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def deck_from_indices(indices: Sequence[int], n: int) -> np.ndarray:
    x = np.zeros(n, dtype=DECK_DTYPE)
    x[list(indices)] = 1
    return x


def deck_indices(x) -> list:
    return [int(i) for i in np.flatnonzero(np.asarray(x))]


def deck_key(x) -> tuple:
    """Hashable identity of a deck (its sorted card ids)."""
    return tuple(deck_indices(x))


def random_deck(n: int, d: int, seed=None) -> np.ndarray:
    """Uniform random deck of ``d`` distinct cards out of ``n``."""
    if not 0 < d < n:
        raise InvalidArgument(f"need 0 < d < n, got n={n}, d={d}")
    rng = _rng(seed)
    return deck_from_indices(rng.choice(n, size=d, replace=False), n)


@dataclass(frozen=True)
class Violation:
    constraint: str  # "length", "binary" or "popcount"
    detail: str

    def __bool__(self):
        return False


def validate_deck(x, n: int, d: int) -> Optional[Violation]:
    """None if ``x`` is a valid deck for (n, d), else the broken constraint."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.shape[0] != n:
        return Violation("length", f"expected length {n}, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        return Violation("binary", "entries must be 0 or 1")
    pop = int(arr.sum())
    if pop != d:
        return Violation("popcount", f"expected {d} cards, got {pop}")
    return None


def require_deck(x, n: int, d: int, name: str = "deck") -> np.ndarray:
    v = validate_deck(x, n, d)
    if v is not None:
        raise InvalidArgument(f"invalid {name}: {v.constraint} ({v.detail})")
    return np.asarray(x, dtype=DECK_DTYPE)


def deck_to_cards(x, pool: CardPool, d: Optional[int] = None) -> list:
    """Card specs of the deck in ascending id order. ``d`` defaults to the
    deck's own popcount, so only length and binarity are checked then."""
    arr = np.asarray(x)
    require_deck(arr, pool.n_cards, int(arr.sum()) if d is None else d)
    return [pool.cards[i] for i in deck_indices(x)]


def cards_to_deck(cards: Sequence[CardSpec], n: int) -> np.ndarray:
    return deck_from_indices([c.id for c in cards], n)


@dataclass
class ProblemInstance:
    id: int
    x_o: np.ndarray
    proxies: tuple = (DEFAULT_PROXY, DEFAULT_PROXY)

    def to_dict(self) -> dict:
        return {"id": self.id, "x_o": deck_indices(self.x_o)}


@dataclass
class InstanceSet:
    pool_seed: int
    n: int
    d: int
    instances: list
    provenance: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pool_seed": self.pool_seed,
            "n": self.n,
            "d": self.d,
            "instances": [inst.to_dict() for inst in self.instances],
            "provenance": self.provenance,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSet":
        n = int(data["n"])
        insts = [ProblemInstance(id=int(i["id"]), x_o=deck_from_indices(i["x_o"], n))
                 for i in data["instances"]]
        return cls(pool_seed=int(data["pool_seed"]), n=n, d=int(data["d"]),
                   instances=insts, provenance=list(data.get("provenance", [])))

    @classmethod
    def load(cls, path) -> "InstanceSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def weighted_pick(win_rates: Sequence[float], rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to its win rate (uniform if all are zero)."""
    w = np.asarray(win_rates, dtype=float)
    total = w.sum()
    p = np.full(len(w), 1.0 / len(w)) if total <= 0 else w / total
    return int(rng.choice(len(w), p=p))


# provider(instance, round_index) -> [(algorithm name, deck, win rate), ...]
OutputsProvider = Callable[[ProblemInstance, int], Sequence[tuple]]


def generate_instance_chain(pool: CardPool, d: int, provider: OutputsProvider, k: int,
                            warmup: int = 10, seed=None,
                            proxies: tuple = (DEFAULT_PROXY, DEFAULT_PROXY)) -> InstanceSet:
    """Competitive opponent decks built sequentially.

    Starting from a random deck, each round runs ``provider`` on the current
    opponent and draws the next opponent from the returned decks weighted by
    their win rates. The first ``warmup`` rounds are discarded; the next
    ``k`` become the instances. ``provenance`` has one entry per round.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    rng = _rng(seed)
    x_o = random_deck(pool.n_cards, d, rng)
    provenance = []
    instances = []
    total = warmup + k
    for r in range(total):
        inst = ProblemInstance(id=len(instances), x_o=x_o, proxies=proxies)
        entry = {"round": r, "warmup": r < warmup, "x_o": deck_indices(x_o)}
        if r == 0:
            entry["origin"] = "random_deck"
        if r >= warmup:
            instances.append(inst)
            entry["instance_id"] = inst.id
        if r < total - 1:
            outputs = list(provider(inst, r))
            if not outputs:
                raise GenerationFailure(f"provider returned no decks in round {r}")
            j = weighted_pick([o[2] for o in outputs], rng)
            entry["candidates"] = [{"algo": a, "deck": deck_indices(x), "win_rate": float(f)}
                                   for a, x, f in outputs]
            entry["picked"] = j
            x_o = np.asarray(outputs[j][1], dtype=DECK_DTYPE).copy()
        provenance.append(entry)
    return InstanceSet(pool_seed=pool.seed, n=pool.n_cards, d=d, instances=instances,
                       provenance=provenance)
