"""Hearthstone-like rules: game state, legal actions and pure transitions.

All randomness (library shuffles) is consumed when the match is set up, so
every transition below is deterministic. The greedy proxy relies on this to
look one action ahead exactly.
"""
from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

from deckrec.engine.cards import (
    AOE_ENEMY, BUFF_TRIBE, DEAL_FACE, DEAL_MINION, DRAW, HEAL, CardPool, CardSpec,
)
from deckrec.errors import InvalidAction

P0, P1 = 0, 1
DRAW_RESULT = -1  # MatchOutcome.winner value for a drawn game

START_HEALTH = 30
MAX_MANA = 10
BOARD_LIMIT = 7
HAND_LIMIT = 10
DEFAULT_TURN_LIMIT = 60  # full turns, i.e. one turn for each player

END_TURN, PLAY, ATTACK = 0, 1, 2
HERO = -1


class GameAction(NamedTuple):
    """``PLAY``: source is a hand index, target is a minion code
    (``side * BOARD_LIMIT + board index``) or ``-1`` for no target.
    ``ATTACK``: source is the attacker's board index, target is an enemy
    board index or ``HERO``."""

    kind: int
    source: int = -1
    target: int = -1

    def __repr__(self):
        if self.kind == END_TURN:
            return "EndTurn"
        if self.kind == PLAY:
            return f"Play(hand={self.source}, target={self.target})"
        return f"Attack({self.source} -> {'hero' if self.target == HERO else self.target})"


END_TURN_ACTION = GameAction(END_TURN)


class Minion:
    __slots__ = ("card", "attack", "health", "taunt", "ready")

    def __init__(self, card: CardSpec, attack: int, health: int, taunt: bool, ready: bool):
        self.card = card
        self.attack = attack
        self.health = health
        self.taunt = taunt
        self.ready = ready

    @classmethod
    def summon(cls, card: CardSpec) -> "Minion":
        return cls(card, card.attack, card.health, card.taunt, card.charge)

    def copy(self) -> "Minion":
        return Minion(self.card, self.attack, self.health, self.taunt, self.ready)

    @property
    def can_attack(self) -> bool:
        return self.ready and self.attack > 0

    def __repr__(self):
        return f"Minion(#{self.card.id} {self.attack}/{self.health}{' T' if self.taunt else ''}{' R' if self.ready else ''})"


class Side:
    """One player's half of the table.

    ``library`` is an immutable tuple shared between copies; ``lib_pos``
    marks the next card to draw.
    """

    __slots__ = ("hp", "mana_cap", "mana", "hand", "library", "lib_pos", "board", "fatigue")

    def __init__(self, library: tuple, hand: list, hp=START_HEALTH, mana_cap=0, mana=0,
                 lib_pos=0, board=None, fatigue=0):
        self.hp = hp
        self.mana_cap = mana_cap
        self.mana = mana
        self.hand = hand
        self.library = library
        self.lib_pos = lib_pos
        self.board = [] if board is None else board
        self.fatigue = fatigue

    def copy(self) -> "Side":
        return Side(self.library, self.hand[:], self.hp, self.mana_cap, self.mana,
                    self.lib_pos, [m.copy() for m in self.board], self.fatigue)

    @property
    def library_remaining(self) -> int:
        return len(self.library) - self.lib_pos

    def draw(self) -> None:
        if self.lib_pos < len(self.library):
            card = self.library[self.lib_pos]
            self.lib_pos += 1
            if len(self.hand) < HAND_LIMIT:
                self.hand.append(card)
        else:
            self.fatigue += 1
            self.hp -= self.fatigue


class GameState:
    __slots__ = ("pool", "sides", "active", "turn", "turn_limit")

    def __init__(self, pool: CardPool, sides: list, active: int = P0, turn: int = 1,
                 turn_limit: int = DEFAULT_TURN_LIMIT):
        self.pool = pool
        self.sides = sides
        self.active = active
        self.turn = turn
        self.turn_limit = turn_limit

    def copy(self) -> "GameState":
        return GameState(self.pool, [self.sides[0].copy(), self.sides[1].copy()],
                         self.active, self.turn, self.turn_limit)

    @property
    def hero_dead(self) -> bool:
        return self.sides[0].hp <= 0 or self.sides[1].hp <= 0

    @property
    def out_of_turns(self) -> bool:
        return self.turn > 2 * self.turn_limit

    @property
    def is_terminal(self) -> bool:
        return self.hero_dead or self.out_of_turns

    def winner(self) -> Optional[int]:
        """P0, P1, ``DRAW_RESULT`` or None while the game is running."""
        if self.sides[0].hp <= 0:
            return P1
        if self.sides[1].hp <= 0:
            return P0
        if self.out_of_turns:
            return DRAW_RESULT
        return None

    def check_invariants(self) -> None:
        for s in self.sides:
            assert len(s.board) <= BOARD_LIMIT
            assert s.hp <= START_HEALTH
            assert 0 <= s.mana <= s.mana_cap <= MAX_MANA
            assert len(s.hand) <= HAND_LIMIT
            assert all(m.health >= 1 for m in s.board)
            assert s.fatigue >= 0


def new_game(pool: CardPool, library_p0: Sequence[int], library_p1: Sequence[int],
             first_player: int = P0, turn_limit: int = DEFAULT_TURN_LIMIT) -> GameState:
    """Deal opening hands (3 for the first player, 4 for the second) from
    already-shuffled libraries of card ids and start the first turn."""
    libs = [tuple(pool.cards[i] for i in library_p0), tuple(pool.cards[i] for i in library_p1)]
    sides = []
    for p in (P0, P1):
        n_open = 3 if p == first_player else 4
        sides.append(Side(libs[p], list(libs[p][:n_open]), lib_pos=min(n_open, len(libs[p]))))
    state = GameState(pool, sides, active=first_player, turn=1, turn_limit=turn_limit)
    _begin_turn(state)
    return state


def _begin_turn(state: GameState) -> None:
    side = state.sides[state.active]
    side.mana_cap = min(side.mana_cap + 1, MAX_MANA)
    side.mana = side.mana_cap
    for m in side.board:
        m.ready = True
    side.draw()


def _minion_targets(state: GameState) -> list:
    codes = []
    for p in (P0, P1):
        for j in range(len(state.sides[p].board)):
            codes.append(p * BOARD_LIMIT + j)
    return codes


def legal_game_actions(state: GameState) -> list:
    """Every playable card, every legal attack, then EndTurn (always last)."""
    if state.is_terminal:
        return []
    me = state.sides[state.active]
    foe = state.sides[1 - state.active]
    actions = []
    seen = set()
    board_full = len(me.board) >= BOARD_LIMIT
    targets = None
    for h, card in enumerate(me.hand):
        if card.cost > me.mana or card.id in seen:
            continue
        seen.add(card.id)
        if card.is_minion and board_full:
            continue
        eff = card.effect
        if eff is not None and eff.op == DEAL_MINION:
            if targets is None:
                targets = _minion_targets(state)
            if targets:
                actions.extend(GameAction(PLAY, h, t) for t in targets)
            elif card.is_minion:
                actions.append(GameAction(PLAY, h, -1))
        else:
            actions.append(GameAction(PLAY, h, -1))
    taunts = [j for j, m in enumerate(foe.board) if m.taunt]
    for i, m in enumerate(me.board):
        if not m.can_attack:
            continue
        if taunts:
            actions.extend(GameAction(ATTACK, i, j) for j in taunts)
        else:
            actions.append(GameAction(ATTACK, i, HERO))
            actions.extend(GameAction(ATTACK, i, j) for j in range(len(foe.board)))
    actions.append(END_TURN_ACTION)
    return actions


def _remove_dead(side: Side) -> None:
    if any(m.health <= 0 for m in side.board):
        side.board = [m for m in side.board if m.health > 0]


def _resolve_effect(state: GameState, eff, target: int, source: Optional[Minion]) -> None:
    me = state.sides[state.active]
    foe = state.sides[1 - state.active]
    op = eff.op
    if op == DEAL_FACE:
        foe.hp -= eff.amount
    elif op == DEAL_MINION:
        if target < 0:
            return
        side = state.sides[target // BOARD_LIMIT]
        side.board[target % BOARD_LIMIT].health -= eff.amount
        _remove_dead(side)
    elif op == AOE_ENEMY:
        for m in foe.board:
            m.health -= eff.amount
        _remove_dead(foe)
    elif op == HEAL:
        me.hp = min(START_HEALTH, me.hp + eff.amount)
    elif op == DRAW:
        for _ in range(eff.amount):
            me.draw()
    elif op == BUFF_TRIBE:
        for m in me.board:
            if m is not source and m.card.tribe == eff.tribe:
                m.attack += eff.attack
                m.health += eff.health


def apply_unchecked(state: GameState, action: GameAction) -> None:
    """Apply ``action`` to ``state`` in place. The caller guarantees legality."""
    kind = action.kind
    if kind == END_TURN:
        state.active = 1 - state.active
        state.turn += 1
        if not state.out_of_turns:
            _begin_turn(state)
        return
    me = state.sides[state.active]
    if kind == PLAY:
        card = me.hand.pop(action.source)
        me.mana -= card.cost
        source = None
        if card.is_minion:
            source = Minion.summon(card)
            me.board.append(source)
        if card.effect is not None:
            _resolve_effect(state, card.effect, action.target, source)
        return
    foe = state.sides[1 - state.active]
    attacker = me.board[action.source]
    attacker.ready = False
    if action.target == HERO:
        foe.hp -= attacker.attack
        return
    defender = foe.board[action.target]
    defender.health -= attacker.attack
    attacker.health -= defender.attack
    _remove_dead(me)
    _remove_dead(foe)


def apply_game_action(state: GameState, action: GameAction) -> GameState:
    """Return the successor of ``state`` under ``action``; ``state`` is untouched."""
    if action not in legal_game_actions(state):
        raise InvalidAction(f"{action!r} is not legal in this state")
    nxt = state.copy()
    apply_unchecked(nxt, action)
    return nxt
