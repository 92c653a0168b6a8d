"""Look-up-table Q-learning, kept as a reference for tiny state spaces."""
from __future__ import annotations

from typing import Hashable, Iterable


def tabular_q_update(table: dict, s: Hashable, a: Hashable, r: float, s_next: Hashable,
                     learning_rate: float, next_actions: Iterable = ()) -> dict:
    """Q(s,a) <- (1 - lr) Q(s,a) + lr (r + max_a' Q(s', a')).

    Missing entries read as 0. ``next_actions`` lists the actions available
    in ``s_next``; leave it empty for a terminal successor. Updates
    ``table`` in place and returns it.
    """
    future = max((table.get((s_next, b), 0.0) for b in next_actions), default=0.0)
    old = table.get((s, a), 0.0)
    table[(s, a)] = (1.0 - learning_rate) * old + learning_rate * (r + future)
    return table
