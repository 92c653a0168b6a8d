"""Genetic-algorithm deck search with validity-preserving operators."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from deckrec import config as cfgmod
from deckrec.decks import DECK_DTYPE, deck_key, random_deck
from deckrec.engine.match import derive_seed
from deckrec.errors import InvalidArgument


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ga_mutate(x, seed=None) -> np.ndarray:
    """Swap one card in the deck for one outside it."""
    rng = _rng(seed)
    x = np.array(x, dtype=DECK_DTYPE)
    out = rng.choice(np.flatnonzero(x))
    inn = rng.choice(np.flatnonzero(x == 0))
    x[out] = 0
    x[inn] = 1
    return x


def ga_crossover(x1, x2, seed=None) -> tuple:
    """Exchange non-shared cards between two decks.

    Cards in both parents stay in both children. The non-shared cards are
    pooled, shuffled and split back so each child again has D cards.
    """
    rng = _rng(seed)
    x1 = np.asarray(x1, dtype=DECK_DTYPE)
    x2 = np.asarray(x2, dtype=DECK_DTYPE)
    shared = (x1 & x2).astype(DECK_DTYPE)
    only1 = np.flatnonzero(x1 & ~x2 & 1)
    only2 = np.flatnonzero(x2 & ~x1 & 1)
    k = len(only1)  # == len(only2) for equal-size decks
    pooled = rng.permutation(np.concatenate([only1, only2]))
    c1, c2 = shared.copy(), shared.copy()
    c1[pooled[:k]] = 1
    c2[pooled[k:]] = 1
    return c1, c2


def tournament_select(population, fitness, k: int = 3, seed=None):
    """Best of ``k`` individuals drawn uniformly with replacement; ties go to the first drawn."""
    if len(population) < k:
        raise InvalidArgument(f"population of {len(population)} is smaller than tournament size {k}")
    rng = _rng(seed)
    picks = rng.integers(len(population), size=k)
    best = max(picks, key=lambda i: fitness[i])
    return population[best]


@dataclass
class GaConfig:
    population_size: int = 10
    p_mutation: float = 0.2
    p_crossover: float = 0.2
    tournament_size: int = 3
    max_f_calls: Optional[int] = None
    budget_seconds: Optional[float] = None
    max_generations: Optional[int] = 10_000
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.p_mutation <= 1 and 0 <= self.p_crossover <= 1):
            raise InvalidArgument("probabilities must lie in [0, 1]")
        if self.population_size < 2:
            raise InvalidArgument("population_size must be >= 2")

    @classmethod
    def from_dict(cls, d: dict) -> "GaConfig":
        return cfgmod.from_dict(cls, d)


@dataclass
class GaLog:
    generations: int = 0
    f_calls: int = 0
    cache_hits: int = 0
    evaluations_requested: int = 0
    best_fitness: list = field(default_factory=list)
    mean_fitness: list = field(default_factory=list)
    cumulative_f_calls: list = field(default_factory=list)
    initial_population: list = field(default_factory=list)
    wall_s: float = 0.0
    cpu_s: float = 0.0
    stop_reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def ga_search(x_o, d: int, cfg: GaConfig, evaluator) -> tuple:
    """Evolve decks against ``x_o``; returns (best-ever deck, best fitness, GaLog).

    ``evaluator(x_p, x_o, root_seed)`` is the fitness f. Fitness is cached
    per deck within the run. A generation is evaluated only if its uncached
    individuals fit in the remaining f-call budget.
    """
    x_o = np.asarray(x_o, dtype=DECK_DTYPE)
    n = x_o.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, n, d]))
    glog = GaLog()
    cache = {}
    t0, c0 = time.monotonic(), time.process_time()

    def evaluate(pop):
        fits = []
        for x in pop:
            key = deck_key(x)
            glog.evaluations_requested += 1
            if key in cache:
                glog.cache_hits += 1
            else:
                cache[key] = float(evaluator(x, x_o, derive_seed(cfg.seed, glog.f_calls)))
                glog.f_calls += 1
            fits.append(cache[key])
        return fits

    def uncached(pop):
        return len({deck_key(x) for x in pop} - set(cache))

    def out_of_budget(pop):
        if cfg.max_f_calls is not None and glog.f_calls + uncached(pop) > cfg.max_f_calls:
            return "f_calls"
        if cfg.budget_seconds is not None and time.monotonic() - t0 >= cfg.budget_seconds:
            return "budget"
        return None

    population = [random_deck(n, d, rng) for _ in range(cfg.population_size)]
    glog.initial_population = [deck_key(x) for x in population]
    # the initial population is always evaluated, even with a zero budget
    fitness = evaluate(population)
    best_i = int(np.argmax(fitness))
    best_x, best_f = population[best_i].copy(), fitness[best_i]

    def record():
        glog.best_fitness.append(best_f)
        glog.mean_fitness.append(float(np.mean(fitness)))
        glog.cumulative_f_calls.append(glog.f_calls)

    record()
    while True:
        if cfg.max_generations is not None and glog.generations >= cfg.max_generations:
            glog.stop_reason = "max_generations"
            break
        offspring = [tournament_select(population, fitness, cfg.tournament_size, rng).copy()
                     for _ in range(cfg.population_size)]
        for i in range(0, len(offspring) - 1, 2):
            if rng.random() < cfg.p_crossover:
                offspring[i], offspring[i + 1] = ga_crossover(offspring[i], offspring[i + 1], rng)
        for i in range(len(offspring)):
            if rng.random() < cfg.p_mutation:
                offspring[i] = ga_mutate(offspring[i], rng)
        reason = out_of_budget(offspring)
        if reason:
            glog.stop_reason = reason
            break
        population = offspring
        fitness = evaluate(population)
        glog.generations += 1
        i = int(np.argmax(fitness))
        if fitness[i] > best_f:
            best_x, best_f = population[i].copy(), fitness[i]
        record()
    glog.wall_s = time.monotonic() - t0
    glog.cpu_s = time.process_time() - c0
    return best_x, best_f, glog
