"""Proportional prioritized experience replay backed by a sum tree."""
from __future__ import annotations

import numpy as np

from deckrec.errors import InsufficientData, InvalidArgument


class SumTree:
    """Binary tree over ``capacity`` leaves where every node stores the sum of its children."""

    def __init__(self, capacity: int):
        self.capacity = int(capacity)
        self.tree = np.zeros(2 * self.capacity)

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def __getitem__(self, idx: int) -> float:
        return float(self.tree[idx + self.capacity])

    def update(self, idx: int, value: float) -> None:
        i = idx + self.capacity
        self.tree[i] = value
        i //= 2
        while i >= 1:
            self.tree[i] = self.tree[2 * i] + self.tree[2 * i + 1]
            i //= 2

    def find(self, mass: float) -> int:
        """Leaf index whose cumulative-sum interval contains ``mass``."""
        i = 1
        while i < self.capacity:
            left = self.tree[2 * i]
            if mass < left:
                i = 2 * i
            else:
                mass -= left
                i = 2 * i + 1
        return i - self.capacity


class PrioritizedReplay:
    """Stores transitions with priorities ``p_i`` and samples index ``i``
    with probability ``p_i**alpha / sum_j p_j**alpha``.

    New entries get the current maximum priority (1.0 when empty). Once
    full, the oldest entry is overwritten.
    """

    def __init__(self, capacity: int = 100_000, alpha: float = 0.6, beta0: float = 0.0,
                 beta_step: float = 1e-5, eps_priority: float = 1e-6):
        if capacity < 1:
            raise InvalidArgument("capacity must be >= 1")
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.beta = float(beta0)
        self.beta_step = float(beta_step)
        self.eps_priority = float(eps_priority)
        self.tree = SumTree(self.capacity)
        self.priorities = np.zeros(self.capacity)
        self.data = [None] * self.capacity
        self.next_idx = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    @property
    def max_priority(self) -> float:
        return float(self.priorities[:self.size].max()) if self.size else 1.0

    def insert(self, item) -> int:
        idx = self.next_idx
        self._set_priority(idx, self.max_priority)
        self.data[idx] = item
        self.next_idx = (idx + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return idx

    def _set_priority(self, idx: int, priority: float) -> None:
        self.priorities[idx] = priority
        self.tree.update(idx, priority ** self.alpha)

    def probabilities(self) -> np.ndarray:
        scaled = self.priorities[:self.size] ** self.alpha
        return scaled / scaled.sum()

    def sample(self, m: int, rng: np.random.Generator):
        """Draw ``m`` entries (with replacement).

        Returns (items, importance weights, indices); weights are
        ``(size * P(i))**-beta`` normalised by the largest weight over the
        whole buffer. Advances beta by one annealing step.
        """
        if self.size < m:
            raise InsufficientData(f"buffer holds {self.size} entries, need {m}")
        total = self.tree.total
        idx = np.array([self.tree.find(u) for u in rng.uniform(0.0, total, size=m)])
        # guard against float drift landing on an empty leaf
        idx = np.minimum(idx, self.size - 1)
        probs = self.priorities[idx] ** self.alpha / total
        p_min = self.priorities[:self.size].min() ** self.alpha / total
        weights = (self.size * probs) ** (-self.beta) / (self.size * p_min) ** (-self.beta)
        self.beta = min(1.0, self.beta + self.beta_step)
        return [self.data[i] for i in idx], weights, idx

    def update_priorities(self, indices, td_errors) -> None:
        for i, d in zip(indices, td_errors):
            self._set_priority(int(i), abs(float(d)) + self.eps_priority)
