"""Exhaustive ranking of every deck; ground truth for tiny instances."""
from __future__ import annotations

import itertools
from math import comb

import numpy as np

from deckrec.decks import deck_from_indices
from deckrec.engine.match import WinRateEvaluator, derive_seed
from deckrec.errors import InstanceTooLarge

MAX_DECKS = 100_000


def brute_force_solve(evaluator: WinRateEvaluator, x_o, d: int, seed: int = 0) -> list:
    """Evaluate every D-card deck against ``x_o``.

    Returns ``[(deck, f), ...]`` sorted by f descending, ties broken by the
    lexicographic order of the decks' card-id lists.
    """
    x_o = np.asarray(x_o)
    n = x_o.shape[0]
    total = comb(n, d)
    if total > MAX_DECKS:
        raise InstanceTooLarge(f"C({n},{d}) = {total:.3g} decks exceeds the limit of {MAX_DECKS}")
    combos = list(itertools.combinations(range(n), d))
    decks = [deck_from_indices(c, n) for c in combos]
    seeds = [derive_seed(seed, i) for i in range(len(decks))]
    values = evaluator.many([(x, x_o) for x in decks], seeds)
    order = sorted(range(len(decks)), key=lambda i: (-values[i], combos[i]))
    return [(decks[i], float(values[i])) for i in order]


def top_fraction_threshold(ranking: list, fraction: float = 0.10) -> float:
    """Win rate of the deck at the edge of the top ``fraction`` of a ranking.

    A deck whose f is at least this value is tied with or better than
    the top ``fraction`` of decks.
    """
    k = max(1, int(round(fraction * len(ranking))))
    return ranking[k - 1][1]


def rank_of(ranking: list, x) -> int:
    """0-based position of deck ``x`` in ``ranking``."""
    x = np.asarray(x)
    for i, (deck, _) in enumerate(ranking):
        if np.array_equal(deck, x):
            return i
    raise KeyError("deck not in ranking")
