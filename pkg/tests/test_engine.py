import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deckrec.decks import deck_from_indices, random_deck
from deckrec.engine.ai import DEFAULT_PROXY, ProxyConfig, greedy_policy_move, heuristic_score, successor_score
from deckrec.engine.cards import (BUFF_TRIBE, DEAL_FACE, TRIBES, CardPool, CardSpec, Effect,
                                  generate_card_pool)
from deckrec.engine.game import (ATTACK, END_TURN_ACTION, HERO, P0, P1, PLAY, BOARD_LIMIT,
                                 DRAW_RESULT, GameAction, GameState, Minion, Side,
                                 apply_game_action, apply_unchecked, legal_game_actions, new_game)
from deckrec.engine.match import (WinRate, WinRateEvaluator, derive_seed, evaluate_win_rate,
                                  simulate_match)
from deckrec.errors import InvalidAction, InvalidArgument, InvalidState


# ---------------------------------------------------------------- card pools

def test_pool_regeneration_is_bit_identical():
    a = generate_card_pool(7, 40)
    b = generate_card_pool(7, 40)
    assert a.n_cards == 40 and len(a.cards) == 40
    assert a.to_json() == b.to_json()


def test_pools_from_different_seeds_differ():
    a = generate_card_pool(7, 40)
    b = generate_card_pool(8, 40)
    assert any(x != y for x, y in zip(a.cards, b.cards))


def test_pool_too_small_rejected():
    with pytest.raises(InvalidArgument):
        generate_card_pool(1, 5)


@pytest.mark.parametrize("seed,n", [(7, 10), (7, 40), (3, 30), (11, 312)])
def test_pool_invariants(seed, n):
    pool = generate_card_pool(seed, n)
    assert [c.id for c in pool.cards] == list(range(n))
    assert {c.cost for c in pool.cards} >= set(range(1, 11))
    for c in pool.cards:
        assert 1 <= c.cost <= 10
        if c.is_minion:
            assert c.attack + c.health >= 1 and c.health >= 1
        else:
            assert c.effect is not None
    if n >= 30:
        buff_tribes = {c.effect.tribe for c in pool.cards if c.effect and c.effect.op == BUFF_TRIBE}
        assert buff_tribes == set(TRIBES)


def test_pool_composition_at_scale():
    pool = generate_card_pool(11, 312)
    spells = sum(not c.is_minion for c in pool.cards) / 312
    buffs = sum(bool(c.effect and c.effect.op == BUFF_TRIBE) for c in pool.cards) / 312
    assert 0.15 <= spells <= 0.35
    assert 0.05 <= buffs <= 0.15
    vanilla = [c for c in pool.cards if c.is_minion and c.effect is None]
    assert all(abs(c.attack + c.health - (2 * c.cost + 1)) <= 2 for c in vanilla)


def test_pool_json_round_trip(tmp_path, pool40):
    path = tmp_path / "pool.json"
    pool40.save(path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"seed", "n_cards", "cards"}
    assert set(doc["cards"][0]) == {"id", "kind", "cost", "attack", "health", "tribe", "keywords", "effect"}
    assert CardPool.load(path) == pool40


def test_effect_magnitudes_validated():
    with pytest.raises(InvalidArgument):
        Effect(DEAL_FACE, 0)
    with pytest.raises(InvalidArgument):
        CardSpec(0, "Spell", 3)
    with pytest.raises(InvalidArgument):
        CardSpec(0, "Minion", 11, 1, 1)


# ---------------------------------------------------------------- hand-built states

def _pool(*cards):
    return CardPool(seed=0, n_cards=len(cards), cards=tuple(cards))


def _state(pool, p0_board=(), p1_board=(), p0_hand=(), p1_hand=(), hp=(30, 30), mana=0, active=P0):
    sides = []
    for board, hand, h in ((p0_board, p0_hand, hp[0]), (p1_board, p1_hand, hp[1])):
        sides.append(Side(library=(), hand=[pool.cards[i] for i in hand], hp=h, mana_cap=mana,
                          mana=mana, board=[m.copy() for m in board]))
    return GameState(pool, sides, active=active, turn=3)


VANILLA = CardSpec(0, "Minion", 2, 2, 3)
TAUNT = CardSpec(1, "Minion", 2, 1, 4, keywords=("Taunt",))
BOLT = CardSpec(2, "Spell", 1, effect=Effect(DEAL_FACE, 4))
BIG = CardSpec(3, "Minion", 5, 5, 6)


def test_only_end_turn_without_hand_or_ready_minions():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_board=[Minion(VANILLA, 2, 3, False, ready=False)])
    assert legal_game_actions(s) == [END_TURN_ACTION]


def test_taunt_blocks_face_attacks():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_board=[Minion(VANILLA, 2, 3, False, True)],
               p1_board=[Minion.summon(TAUNT), Minion.summon(VANILLA)])
    attacks = [a for a in legal_game_actions(s) if a.kind == ATTACK]
    assert attacks == [GameAction(ATTACK, 0, 0)]
    assert all(a.target != HERO for a in attacks)


def test_terminal_state_has_no_actions():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, hp=(30, 0))
    assert legal_game_actions(s) == []
    with pytest.raises(InvalidState):
        greedy_policy_move(s)


def test_end_turn_ramps_mana_and_alternates():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = new_game(pool, [0, 1, 2, 3] * 5, [0, 1, 2, 3] * 5, first_player=P0)
    assert s.active == P0 and s.sides[P0].mana_cap == 1
    for expected_p0, expected_p1 in [(1, 1), (2, 1), (2, 2), (3, 2)]:
        s = apply_game_action(s, END_TURN_ACTION)
        assert (s.sides[P0].mana_cap, s.sides[P1].mana_cap) == (expected_p0, expected_p1)
    assert s.active == P0 and s.turn == 5
    s.sides[P1].mana_cap = 10
    s = apply_game_action(s, END_TURN_ACTION)
    assert s.sides[P1].mana_cap == 10 and s.sides[P1].mana == 10


def test_opening_hands_three_and_four():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    lib = [0, 1, 2, 3] * 2
    s = new_game(pool, lib, lib, first_player=P1)
    # the first player also drew for its first turn
    assert len(s.sides[P1].hand) == 4 and len(s.sides[P0].hand) == 4
    s = new_game(pool, lib, lib, first_player=P0)
    assert len(s.sides[P0].hand) == 4 and len(s.sides[P1].hand) == 4
    assert s.sides[P0].lib_pos == 4 and s.sides[P1].lib_pos == 4


def test_face_spell_kills_hero():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_hand=[2], hp=(30, 3), mana=1)
    a = GameAction(PLAY, 0, -1)
    s2 = apply_game_action(s, a)
    assert s2.sides[P1].hp == -1 and s2.is_terminal and s2.winner() == P0
    assert s.sides[P1].hp == 3  # the input state is untouched


def test_fatigue_escalates():
    side = Side(library=(), hand=[], fatigue=2)
    side.draw()
    assert side.hp == 27 and side.fatigue == 3


def test_illegal_action_rejected():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_hand=[3], mana=2)
    with pytest.raises(InvalidAction):
        apply_game_action(s, GameAction(PLAY, 0, -1))


def test_board_limit_blocks_minion_plays():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_board=[Minion(VANILLA, 2, 3, False, False)] * BOARD_LIMIT,
               p0_hand=[0, 2], mana=5)
    plays = [a for a in legal_game_actions(s) if a.kind == PLAY]
    assert plays == [GameAction(PLAY, 1, -1)]


# ---------------------------------------------------------------- heuristic & greedy proxy

def test_heuristic_symmetric_state_is_zero():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    m = Minion.summon(VANILLA)
    s = _state(pool, p0_board=[m], p1_board=[m], p0_hand=[0], p1_hand=[1])
    assert heuristic_score(s, P0) == 0 == heuristic_score(s, P1)


def test_heuristic_terminal_sentinels():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, hp=(30, 0))
    assert heuristic_score(s, P0) == math.inf
    assert heuristic_score(s, P1) == -math.inf


def test_heuristic_board_arithmetic():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_board=[Minion(VANILLA, 2, 3, False, False)])
    assert heuristic_score(s, P0, ProxyConfig(w_board=1.0)) == 5


def test_greedy_takes_lethal():
    # P1 at 4 hp; two ready 2/3 minions. By hand: attacking face scores
    # base + 2 (not lethal alone); after one face hit the second is lethal.
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    ready = Minion(VANILLA, 2, 3, False, True)
    s = _state(pool, p0_board=[ready, ready], p1_board=[Minion(BIG, 5, 6, False, False)], hp=(30, 4))
    base = heuristic_score(s, P0)
    assert base == 26 + (5 + 5 - 11)
    a = greedy_policy_move(s)
    assert a == GameAction(ATTACK, 0, HERO)
    s = apply_game_action(s, a)
    assert greedy_policy_move(s) == GameAction(ATTACK, 1, HERO)
    s = apply_game_action(s, GameAction(ATTACK, 1, HERO))
    assert s.winner() == P0


def test_greedy_only_end_turn():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool)
    assert greedy_policy_move(s) == END_TURN_ACTION


def test_greedy_tie_goes_to_lower_index():
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    ready = Minion(VANILLA, 2, 3, False, True)
    s = _state(pool, p0_board=[ready, ready])
    acts = legal_game_actions(s)
    assert acts[0] == GameAction(ATTACK, 0, HERO) and acts[1] == GameAction(ATTACK, 1, HERO)
    assert greedy_policy_move(s) == GameAction(ATTACK, 0, HERO)


def test_greedy_passes_when_nothing_improves():
    # trading a 1/4 taunt into a 5/6 only loses material
    pool = _pool(VANILLA, TAUNT, BOLT, BIG)
    s = _state(pool, p0_board=[Minion(TAUNT, 1, 4, True, True)],
               p1_board=[Minion(BIG, 5, 6, True, False)])
    assert legal_game_actions(s) == [GameAction(ATTACK, 0, 0), END_TURN_ACTION]
    assert greedy_policy_move(s) == END_TURN_ACTION


def _random_states(pool, seed, steps):
    """States visited by random play from a seeded game."""
    rng = np.random.default_rng(seed)
    ids = list(range(pool.n_cards))
    lib0 = rng.permutation(ids * 2).tolist()
    lib1 = rng.permutation(ids * 2).tolist()
    s = new_game(pool, lib0, lib1, first_player=int(rng.integers(2)))
    out = [s.copy()]
    for _ in range(steps):
        acts = legal_game_actions(s)
        if not acts:
            break
        apply_unchecked(s, acts[int(rng.integers(len(acts)))])
        out.append(s.copy())
    return out


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), pool_seed=st.integers(0, 50))
def test_shortcut_scores_match_full_successor(seed, pool_seed):
    pool = generate_card_pool(pool_seed, 30)
    for s in _random_states(pool, seed, 150)[::5]:
        if s.is_terminal:
            continue
        for a in legal_game_actions(s):
            nxt = s.copy()
            apply_unchecked(nxt, a)
            assert successor_score(s, a) == heuristic_score(nxt, s.active)


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), pool_seed=st.integers(0, 50))
def test_legality_closure_and_invariants(seed, pool_seed):
    pool = generate_card_pool(pool_seed, 20)
    for s in _random_states(pool, seed, 200)[::7]:
        s.check_invariants()
        for a in legal_game_actions(s):
            nxt = apply_game_action(s, a)
            if not nxt.is_terminal:
                nxt.check_invariants()


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1))
def test_heuristic_antisymmetric(seed):
    pool = generate_card_pool(3, 20)
    for s in _random_states(pool, seed, 120)[::6]:
        if not s.is_terminal:
            assert heuristic_score(s, P0) == -heuristic_score(s, P1)


# ---------------------------------------------------------------- matches & win rate

def test_match_is_deterministic(pool40):
    a, b = random_deck(40, 8, 1), random_deck(40, 8, 2)
    buf1, buf2 = io.StringIO(), io.StringIO()
    o1 = simulate_match(pool40, a, b, match_seed=99, first_player=P1, transcript=buf1)
    o2 = simulate_match(pool40, a, b, match_seed=99, first_player=P1, transcript=buf2)
    assert o1 == o2
    assert buf1.getvalue() == buf2.getvalue()
    assert all("action" in json.loads(line) for line in buf1.getvalue().splitlines())


def test_turn_limit_gives_draw():
    # two taunt walls that never attack profitably cannot end the game
    wall = CardSpec(0, "Minion", 1, 0, 9, keywords=("Taunt",))
    pool = _pool(wall, CardSpec(1, "Minion", 1, 0, 8, keywords=("Taunt",)))
    x = deck_from_indices([0, 1], 2)
    out = simulate_match(pool, x, x, match_seed=0, turn_limit=5)
    assert out.winner == DRAW_RESULT and out.turns_played == 10


def test_aggro_beats_expensive_on_pinned_seed():
    cheap = [CardSpec(i, "Minion", 1, 2, 1) for i in range(5)]
    dear = [CardSpec(5 + i, "Minion", 10, 10, 11) for i in range(5)]
    pool = _pool(*cheap, *dear)
    aggro, slow = deck_from_indices(range(5), 10), deck_from_indices(range(5, 10), 10)
    assert simulate_match(pool, aggro, slow, match_seed=0, first_player=P0).winner == P0
    assert simulate_match(pool, aggro, slow, match_seed=0, first_player=P1).winner == P0


def test_win_rate_definition(pool10):
    x, y = deck_from_indices([0, 1, 2], 10), deck_from_indices([3, 4, 5], 10)
    wr = evaluate_win_rate(pool10, x, y, num_matches=20, root_seed=5)
    assert wr.value == (wr.wins + 0.5 * wr.num_draws) / 20
    assert 0 <= wr.value <= 1
    assert wr == evaluate_win_rate(pool10, x, y, num_matches=20, root_seed=5)
    assert WinRate.from_counts(3, 2, 10).value == 0.4


@pytest.mark.parametrize("m", [3, 0, 1, 7])
def test_win_rate_rejects_odd_or_tiny_counts(pool10, m):
    x = deck_from_indices([0, 1, 2], 10)
    with pytest.raises(InvalidArgument):
        evaluate_win_rate(pool10, x, x, num_matches=m)


def test_win_rate_is_order_independent(pool10):
    x, y = deck_from_indices([0, 4, 8], 10), deck_from_indices([1, 2, 3], 10)
    serial = evaluate_win_rate(pool10, x, y, num_matches=16, root_seed=3)
    wins = draws = 0
    for i in reversed(range(16)):
        o = simulate_match(pool10, x, y, match_seed=derive_seed(3, i), first_player=i % 2)
        wins += o.winner == P0
        draws += o.winner == DRAW_RESULT
    assert serial == WinRate.from_counts(wins, draws, 16)


def test_parallel_evaluator_matches_serial(pool10):
    pairs = [(random_deck(10, 3, i), random_deck(10, 3, 100 + i)) for i in range(4)]
    seeds = [11, 12, 13, 14]
    serial = WinRateEvaluator(pool10, num_matches=10).many(pairs, seeds)
    with WinRateEvaluator(pool10, num_matches=10, workers=2) as ev:
        parallel = ev.many(pairs, seeds)
        assert ev.calls == 4
    assert serial == parallel


def test_invalid_deck_rejected(pool10):
    with pytest.raises(InvalidArgument):
        simulate_match(pool10, np.zeros(10, dtype=np.int8), deck_from_indices([1], 10))
    with pytest.raises(InvalidArgument):
        simulate_match(pool10, deck_from_indices([1], 9), deck_from_indices([1], 10))


def test_f_has_a_usable_signal(pool40):
    # random search for two decks whose win rates against a third differ by >= 0.3
    ev = WinRateEvaluator(pool40, num_matches=40)
    x_o = random_deck(40, 8, 0)
    rates = [ev(random_deck(40, 8, 1000 + i), x_o, i) for i in range(12)]
    assert max(rates) - min(rates) >= 0.3


def test_proxy_validation():
    with pytest.raises(InvalidArgument):
        ProxyConfig(w_hp=math.nan)
    with pytest.raises(InvalidArgument):
        ProxyConfig(kind="Random")
    assert ProxyConfig.from_dict(DEFAULT_PROXY.to_dict()) == DEFAULT_PROXY
