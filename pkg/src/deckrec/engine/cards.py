"""Card definitions and procedural card-pool generation."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from deckrec.errors import InvalidArgument

MINION = "Minion"
SPELL = "Spell"
TRIBES = ("A", "B", "C")
KEYWORDS = ("Taunt", "Charge")

DEAL_FACE = "DealDamageFace"
DEAL_MINION = "DealDamageAnyMinion"
AOE_ENEMY = "AoeDamageEnemyMinions"
HEAL = "Heal"
DRAW = "DrawCards"
BUFF_TRIBE = "BuffTribe"
EFFECT_OPS = (DEAL_FACE, DEAL_MINION, AOE_ENEMY, HEAL, DRAW, BUFF_TRIBE)

MIN_POOL_SIZE = 10
SPELL_FRACTION = 0.25
KEYWORD_FRACTION = 0.15
BUFF_FRACTION = 0.10
BATTLECRY_FRACTION = 0.10
# relative frequency of costs 1..10 beyond the mandatory one-of-each
COST_WEIGHTS = np.array([10, 14, 14, 12, 10, 8, 6, 4, 3, 3], dtype=float)


@dataclass(frozen=True)
class Effect:
    """A card effect. ``amount`` is used by every op except BuffTribe,
    which uses ``tribe``, ``attack`` and ``health``."""

    op: str
    amount: int = 0
    tribe: Optional[str] = None
    attack: int = 0
    health: int = 0

    def __post_init__(self):
        if self.op not in EFFECT_OPS:
            raise InvalidArgument(f"unknown effect op {self.op!r}")
        if self.op == BUFF_TRIBE:
            if self.tribe not in TRIBES or self.attack < 1 or self.health < 1:
                raise InvalidArgument(f"bad BuffTribe effect {self}")
        elif self.amount < 1:
            raise InvalidArgument(f"effect magnitude must be >= 1: {self}")

    @property
    def needs_target(self) -> bool:
        return self.op == DEAL_MINION

    def to_dict(self) -> dict:
        if self.op == BUFF_TRIBE:
            return {"op": self.op, "tribe": self.tribe, "attack": self.attack, "health": self.health}
        return {"op": self.op, "amount": self.amount}

    @classmethod
    def from_dict(cls, d: dict) -> "Effect":
        return cls(
            op=d["op"],
            amount=int(d.get("amount", 0)),
            tribe=d.get("tribe"),
            attack=int(d.get("attack", 0)),
            health=int(d.get("health", 0)),
        )


@dataclass(frozen=True)
class CardSpec:
    id: int
    kind: str
    cost: int
    attack: int = 0
    health: int = 0
    tribe: Optional[str] = None
    keywords: tuple = ()
    effect: Optional[Effect] = None

    def __post_init__(self):
        if not 1 <= self.cost <= 10:
            raise InvalidArgument(f"card {self.id}: cost {self.cost} outside [1, 10]")
        if self.kind == MINION:
            if self.attack < 0 or self.health < 1:
                raise InvalidArgument(f"card {self.id}: bad minion stats")
            if self.tribe is not None and self.tribe not in TRIBES:
                raise InvalidArgument(f"card {self.id}: unknown tribe {self.tribe!r}")
        elif self.kind == SPELL:
            if self.effect is None:
                raise InvalidArgument(f"card {self.id}: spell without effect")
        else:
            raise InvalidArgument(f"card {self.id}: unknown kind {self.kind!r}")
        if any(k not in KEYWORDS for k in self.keywords):
            raise InvalidArgument(f"card {self.id}: unknown keyword in {self.keywords}")

    @property
    def is_minion(self) -> bool:
        return self.kind == MINION

    @property
    def taunt(self) -> bool:
        return "Taunt" in self.keywords

    @property
    def charge(self) -> bool:
        return "Charge" in self.keywords

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "cost": self.cost,
            "attack": self.attack,
            "health": self.health,
            "tribe": self.tribe,
            "keywords": list(self.keywords),
            "effect": None if self.effect is None else self.effect.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CardSpec":
        eff = d.get("effect")
        return cls(
            id=int(d["id"]),
            kind=d["kind"],
            cost=int(d["cost"]),
            attack=int(d.get("attack", 0)),
            health=int(d.get("health", 0)),
            tribe=d.get("tribe"),
            keywords=tuple(d.get("keywords", ())),
            effect=None if eff is None else Effect.from_dict(eff),
        )

    def describe(self) -> str:
        if self.is_minion:
            s = f"#{self.id} [{self.cost}] {self.attack}/{self.health} minion"
            if self.tribe:
                s += f" ({self.tribe})"
            if self.keywords:
                s += " " + ",".join(self.keywords)
        else:
            s = f"#{self.id} [{self.cost}] spell"
        if self.effect is not None:
            e = self.effect
            if e.op == BUFF_TRIBE:
                s += f" {e.op}({e.tribe},+{e.attack},+{e.health})"
            else:
                s += f" {e.op}({e.amount})"
        return s


@dataclass(frozen=True)
class CardPool:
    seed: int
    n_cards: int
    cards: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.cards) != self.n_cards:
            raise InvalidArgument("cards length does not match n_cards")
        if any(c.id != i for i, c in enumerate(self.cards)):
            raise InvalidArgument("card ids must be 0..n-1 in order")

    def __len__(self):
        return self.n_cards

    def __getitem__(self, i: int) -> CardSpec:
        return self.cards[i]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "n_cards": self.n_cards, "cards": [c.to_dict() for c in self.cards]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CardPool":
        cards = tuple(CardSpec.from_dict(c) for c in d["cards"])
        return cls(seed=int(d["seed"]), n_cards=int(d["n_cards"]), cards=cards)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "CardPool":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _minion_stats(rng: np.random.Generator, cost: int) -> tuple[int, int]:
    total = 2 * cost + 1 + int(rng.integers(-2, 3))
    total = max(total, 2)
    attack = int(round(total * rng.uniform(0.3, 0.7)))
    attack = min(max(attack, 0), total - 1)
    return attack, total - attack


def _buff_effect(cost: int, tribe: str) -> Effect:
    return Effect(BUFF_TRIBE, tribe=tribe, attack=max(1, (cost + 1) // 2), health=max(1, cost // 2 + 1))


def _spell_effect(rng: np.random.Generator, cost: int) -> Effect:
    op = (DEAL_FACE, DEAL_MINION, AOE_ENEMY, HEAL, DRAW)[int(rng.integers(5))]
    amount = {
        DEAL_FACE: cost + 1,
        DEAL_MINION: cost + 2,
        AOE_ENEMY: max(1, (cost + 1) // 2),
        HEAL: 2 * cost + 2,
        DRAW: max(1, min(3, (cost + 1) // 2)),
    }[op]
    return Effect(op, amount=amount)


def _battlecry(rng: np.random.Generator, cost: int) -> Effect:
    op = (DEAL_FACE, DEAL_MINION, HEAL, DRAW)[int(rng.integers(4))]
    amount = max(1, cost // 2) if op != HEAL else cost + 1
    if op == DRAW:
        amount = 1
    return Effect(op, amount=amount)


def generate_card_pool(seed: int, n_cards: int) -> CardPool:
    """Build a deterministic pool of ``n_cards`` cards from ``seed``.

    Every cost 1..10 appears at least once. Minion stats follow the
    vanilla budget ``attack + health = 2*cost + 1`` with +-2 jitter.
    For pools of 30+ cards each tribe has at least one BuffTribe card.
    """
    if int(n_cards) < MIN_POOL_SIZE:
        raise InvalidArgument(f"n_cards must be >= {MIN_POOL_SIZE}, got {n_cards}")
    n = int(n_cards)
    seed = int(seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, n]))

    extra = rng.choice(10, size=n - 10, p=COST_WEIGHTS / COST_WEIGHTS.sum()) + 1
    costs = rng.permutation(np.concatenate([np.arange(1, 11), extra]))

    n_buff = int(round(BUFF_FRACTION * n))
    if n >= 30:
        n_buff = max(n_buff, len(TRIBES))
    buff_ids = set(int(i) for i in rng.choice(n, size=n_buff, replace=False))
    buff_tribes = {}
    for j, i in enumerate(sorted(buff_ids)):
        buff_tribes[i] = TRIBES[j] if j < len(TRIBES) else TRIBES[int(rng.integers(3))]

    cards = []
    for i in range(n):
        cost = int(costs[i])
        is_spell = rng.random() < SPELL_FRACTION
        if is_spell:
            eff = _buff_effect(cost, buff_tribes[i]) if i in buff_ids else _spell_effect(rng, cost)
            cards.append(CardSpec(id=i, kind=SPELL, cost=cost, effect=eff))
            continue
        attack, health = _minion_stats(rng, cost)
        tribe_roll = int(rng.integers(4))
        tribe = TRIBES[tribe_roll] if tribe_roll < 3 else None
        keywords = ()
        if rng.random() < KEYWORD_FRACTION:
            keywords = (KEYWORDS[int(rng.integers(2))],)
        if i in buff_ids:
            eff = _buff_effect(cost, buff_tribes[i])
        elif rng.random() < BATTLECRY_FRACTION:
            eff = _battlecry(rng, cost)
        else:
            eff = None
        cards.append(
            CardSpec(id=i, kind=MINION, cost=cost, attack=attack, health=health,
                     tribe=tribe, keywords=keywords, effect=eff)
        )
    return CardPool(seed=seed, n_cards=n, cards=tuple(cards))
