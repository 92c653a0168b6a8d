"""Greedy one-step AI proxy (the stand-in for GreedyOptimizeMove)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from deckrec.engine.cards import DEAL_FACE
from deckrec.engine.game import (
    ATTACK, END_TURN_ACTION, HERO, PLAY, GameAction, GameState, apply_unchecked,
    legal_game_actions,
)
from deckrec.errors import InvalidArgument, InvalidState

GREEDY = "GreedyOptimizeMove"


@dataclass(frozen=True)
class ProxyConfig:
    kind: str = GREEDY
    w_hp: float = 1.0
    w_board: float = 1.0
    w_hand: float = 0.5

    def __post_init__(self):
        if self.kind != GREEDY:
            raise InvalidArgument(f"unsupported proxy kind {self.kind!r}")
        if not all(math.isfinite(w) for w in (self.w_hp, self.w_board, self.w_hand)):
            raise InvalidArgument("proxy weights must be finite")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProxyConfig":
        return cls(**d)


DEFAULT_PROXY = ProxyConfig()


def heuristic_score(state: GameState, perspective: int, proxy: ProxyConfig = DEFAULT_PROXY) -> float:
    me = state.sides[perspective]
    foe = state.sides[1 - perspective]
    if foe.hp <= 0:
        return math.inf
    if me.hp <= 0:
        return -math.inf
    board = 0
    for m in me.board:
        board += m.attack + m.health
    for m in foe.board:
        board -= m.attack + m.health
    return (proxy.w_hp * (me.hp - foe.hp)
            + proxy.w_board * board
            + proxy.w_hand * (len(me.hand) - len(foe.hand)))


def _shortcut_score(state: GameState, action: GameAction, base: float, proxy: ProxyConfig):
    """Score of the successor for actions whose effect on the score is
    closed-form; None when the successor has to be simulated."""
    me = state.sides[state.active]
    foe = state.sides[1 - state.active]
    if action.kind == ATTACK:
        attacker = me.board[action.source]
        if action.target == HERO:
            dmg = attacker.attack
            return math.inf if foe.hp <= dmg else base + proxy.w_hp * dmg
        defender = foe.board[action.target]
        # a dead minion loses its whole attack+health, a survivor only the damage taken
        lost = (attacker.attack + attacker.health if attacker.health <= defender.attack
                else defender.attack)
        gained = (defender.attack + defender.health if defender.health <= attacker.attack
                  else attacker.attack)
        return base + proxy.w_board * (gained - lost)
    if action.kind == PLAY:
        card = me.hand[action.source]
        eff = card.effect
        if card.is_minion and eff is None:
            return base + proxy.w_board * (card.attack + card.health) - proxy.w_hand
        if not card.is_minion and eff.op == DEAL_FACE:
            if foe.hp <= eff.amount:
                return math.inf
            return base + proxy.w_hp * eff.amount - proxy.w_hand
    return None


def successor_score(state: GameState, action: GameAction, proxy: ProxyConfig = DEFAULT_PROXY,
                    base: float = None) -> float:
    """heuristic_score(apply_game_action(state, action), mover)."""
    if base is None:
        base = heuristic_score(state, state.active, proxy)
    score = _shortcut_score(state, action, base, proxy)
    if score is None:
        nxt = state.copy()
        apply_unchecked(nxt, action)
        score = heuristic_score(nxt, state.active, proxy)
    return score


def greedy_policy_move(state: GameState, proxy: ProxyConfig = DEFAULT_PROXY) -> GameAction:
    """Pick the action whose successor scores best for the mover.

    Ties go to the lowest action index. EndTurn is returned unless some
    action strictly improves on the current score.
    """
    if state.is_terminal:
        raise InvalidState("no move in a terminal state")
    base = heuristic_score(state, state.active, proxy)
    best_score = base
    best = END_TURN_ACTION
    for action in legal_game_actions(state):
        if action is END_TURN_ACTION:
            continue
        score = successor_score(state, action, proxy, base)
        if score > best_score:
            best_score = score
            best = action
    return best
