from deckrec.engine.ai import DEFAULT_PROXY, ProxyConfig, greedy_policy_move, heuristic_score
from deckrec.engine.cards import CardPool, CardSpec, Effect, generate_card_pool
from deckrec.engine.game import (
    DRAW_RESULT, P0, P1, GameAction, GameState, apply_game_action, legal_game_actions, new_game,
)
from deckrec.engine.match import (
    MatchOutcome, WinRate, WinRateEvaluator, derive_seed, evaluate_win_rate, simulate_match,
)

__all__ = [
    "DEFAULT_PROXY",
    "ProxyConfig",
    "greedy_policy_move",
    "heuristic_score",
    "CardPool",
    "CardSpec",
    "Effect",
    "generate_card_pool",
    "DRAW_RESULT",
    "P0",
    "P1",
    "GameAction",
    "GameState",
    "apply_game_action",
    "legal_game_actions",
    "new_game",
    "MatchOutcome",
    "WinRate",
    "WinRateEvaluator",
    "derive_seed",
    "evaluate_win_rate",
    "simulate_match",
]
