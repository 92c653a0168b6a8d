"""Welch's unequal-variance t-test over per-instance medians."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from deckrec.errors import InvalidArgument

SIGNIFICANCE = 0.01


@dataclass(frozen=True)
class WelchResult:
    a: str
    b: str
    t: float
    df: float
    p: float
    significant: bool
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def welch_test(sample_a, sample_b, name_a: str = "a", name_b: str = "b",
               alpha: float = SIGNIFICANCE) -> WelchResult:
    """Two-tailed Welch t-test.

    The samples are paired by instance index, so they must have equal
    length. With both variances zero, p is 1 for equal means and 0 otherwise
    (flagged degenerate).
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) != len(b) or len(a) < 2:
        raise InvalidArgument("samples must have the same length >= 2")
    na, nb = len(a), len(b)
    va, vb = a.var(ddof=1) / na, b.var(ddof=1) / nb
    diff = a.mean() - b.mean()
    if va + vb == 0:
        same = diff == 0
        return WelchResult(name_a, name_b, 0.0 if same else math.copysign(math.inf, diff),
                           float(na + nb - 2), 1.0 if same else 0.0, not same, degenerate=not same)
    t = diff / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (na - 1) + vb ** 2 / (nb - 1))
    p = float(min(1.0, 2.0 * stats.t.sf(abs(t), df)))
    return WelchResult(name_a, name_b, float(t), float(df), p, p < alpha)


def pairwise_welch(medians: dict, alpha: float = SIGNIFICANCE) -> list:
    """``medians`` maps algorithm name to its per-instance median win rates."""
    return [welch_test(medians[x], medians[y], x, y, alpha)
            for x, y in itertools.combinations(sorted(medians), 2)]
