import numpy as np
import pytest

from planu.envs import (
    BlocksworldEnv,
    DeterministicizedEnv,
    OvercookedLiteEnv,
    StockEnv,
    deterministicize,
    generate_instance,
    parse_facts,
    parse_instance,
)
from planu.errors import EnvError


class TestStockEnv:
    def test_safe_action_is_deterministic(self):
        env = StockEnv()
        state = env.reset(0)
        assert env.step(state, "buy_a") == ("sold_a", 0.9, True)

    def test_risky_action_frequencies(self):
        env = StockEnv()
        state = env.reset(123)
        wins = 0
        n = 20000
        for _ in range(n):
            nxt, r, done = env.step(state, "buy_b")
            assert done
            if nxt == "sold_b_profit":
                assert r == 1.0
                wins += 1
            else:
                assert (nxt, r) == ("sold_b_zero", 0.0)
        # 3 sigma around p = 0.6
        sigma = np.sqrt(0.6 * 0.4 / n)
        assert abs(wins / n - 0.6) < 3 * sigma

    def test_same_seed_same_stream(self):
        a, b = StockEnv(), StockEnv()
        sa, sb = a.reset(7), b.reset(7)
        for _ in range(50):
            assert a.step(sa, "buy_b") == b.step(sb, "buy_b")

    def test_illegal_action_raises(self):
        env = StockEnv()
        state = env.reset(0)
        with pytest.raises(EnvError):
            env.step(state, "sell")
        with pytest.raises(EnvError):
            env.step("sold_a", "buy_a")

    def test_legal_actions(self):
        env = StockEnv()
        assert env.legal_actions(env.reset(0)) == ["buy_a", "buy_b"]
        assert env.legal_actions("sold_a") == []


SIMPLE_INSTANCE = """
blocks: a b
init: ontable(a) ontable(b) clear(a) clear(b) handempty
goal: on(a,b)
"""


class TestBlocksworldParsing:
    def test_parse_facts_roundtrip(self):
        facts = parse_facts("on(a,b) clear(a) ontable(b) handempty")
        assert facts == {"on(a,b)", "clear(a)", "ontable(b)", "handempty"}

    def test_parse_facts_rejects_bad_tokens(self):
        for bad in ("above(a,b)", "on(a)", "clear(a,b)", "holding", "on(A,b)"):
            with pytest.raises(EnvError):
                parse_facts(bad)

    def test_parse_instance(self):
        blocks, init, goal = parse_instance(SIMPLE_INSTANCE)
        assert blocks == ("a", "b")
        assert "handempty" in init
        assert goal == {"on(a,b)"}

    def test_parse_instance_missing_section_raises(self):
        with pytest.raises(EnvError):
            parse_instance("blocks: a b\ninit: ontable(a) ontable(b) clear(a) clear(b) handempty\n")

    def test_invalid_state_rejected_at_construction(self):
        with pytest.raises(EnvError):
            BlocksworldEnv(("a",), parse_facts("ontable(a) clear(a) holding(a)"),
                           parse_facts("ontable(a)"))


class TestBlocksworldDynamics:
    def make_env(self, failure_rate=0.0, seed=0):
        return BlocksworldEnv.from_instance(SIMPLE_INSTANCE, failure_rate=failure_rate, seed=seed)

    def test_two_step_solution(self):
        env = self.make_env()
        state = env.reset(0)
        state, r, done = env.step(state, "pickup(a)")
        assert (r, done) == (0.0, False)
        assert "holding(a)" in state
        state, r, done = env.step(state, "stack(a,b)")
        assert (r, done) == (1.0, True)
        assert env.goal_reached(state)

    def test_inapplicable_action_is_noop(self):
        env = self.make_env()
        state = env.reset(0)
        nxt, r, done = env.step(state, "putdown(a)")
        assert (nxt, r, done) == (state, 0.0, False)

    def test_malformed_action_raises(self):
        env = self.make_env()
        state = env.reset(0)
        for bad in ("fly(a)", "pickup(a,b)", "stack(a)", "pickup(z)", "stack(a,z)"):
            with pytest.raises(EnvError):
                env.step(state, bad)

    def test_certain_failure_freezes_state(self):
        env = self.make_env(failure_rate=1.0)
        state = env.reset(0)
        nxt, r, done = env.step(state, "pickup(a)")
        assert (nxt, r, done) == (state, 0.0, False)

    def test_failure_frequency(self):
        env = self.make_env(failure_rate=0.3, seed=0)
        state = env.reset(42)
        n, failures = 5000, 0
        for _ in range(n):
            nxt, _, _ = env.step(state, "pickup(a)")
            failures += nxt == state
        sigma = np.sqrt(0.3 * 0.7 / n)
        assert abs(failures / n - 0.3) < 3 * sigma

    def test_legal_actions_sorted_and_correct(self):
        env = self.make_env()
        state = env.reset(0)
        assert env.legal_actions(state) == ["pickup(a)", "pickup(b)"]
        held, _, _ = env.step(state, "pickup(a)")
        assert env.legal_actions(held) == ["putdown(a)", "stack(a,b)"]

    def test_state_canonical_order_independent(self):
        env = self.make_env()
        state = env.reset(0)
        assert state == " ".join(sorted(state.split()))


class TestGenerateInstance:
    @pytest.mark.parametrize("n_steps", [2, 4, 6])
    def test_solvable_within_budget(self, n_steps):
        for seed in range(5):
            env = generate_instance(n_steps, 4, failure_rate=0.0, seed=seed)
            state = env.reset(0)
            # breadth-first search over deterministic dynamics
            frontier = {state}
            seen = set(frontier)
            solved = env.goal_reached(state)
            for _ in range(n_steps):
                if solved:
                    break
                nxt_frontier = set()
                for s in frontier:
                    for a in env.legal_actions(s):
                        nxt, _, done = env.step(s, a)
                        if done:
                            solved = True
                        if nxt not in seen:
                            seen.add(nxt)
                            nxt_frontier.add(nxt)
                frontier = nxt_frontier
            assert solved, f"instance seed={seed} not solvable in {n_steps} steps"

    def test_goal_not_initially_satisfied(self):
        for seed in range(10):
            env = generate_instance(4, 4, seed=seed)
            assert not env.goal_reached(env.reset(0))

    def test_deterministic_in_seed(self):
        a = generate_instance(4, 4, seed=3)
        b = generate_instance(4, 4, seed=3)
        assert a.instance_text() == b.instance_text()

    def test_rejects_odd_or_small_steps(self):
        with pytest.raises(ValueError):
            generate_instance(3)
        with pytest.raises(ValueError):
            generate_instance(0)

    def test_instance_text_roundtrip(self):
        env = generate_instance(4, 4, seed=1)
        clone = BlocksworldEnv.from_instance(env.instance_text())
        assert clone.reset(0) == env.reset(0)
        assert clone.goal_facts == env.goal_facts


class TestOvercookedLite:
    def test_reset_state_fields(self):
        env = OvercookedLiteEnv()
        state = env.reset(0)
        assert state == "t=0 hand=none board=none tomato=raw lettuce=raw onion=raw"

    def test_happy_path_tomato_salad(self):
        env = OvercookedLiteEnv("tomato_salad", chop_failure_rate=0.0)
        state = env.reset(0)
        state, r, done = env.step(state, "get_tomato")
        assert "hand=tomato" in state and not done
        state, r, done = env.step(state, "go_cutting_board")
        assert "board=tomato" in state
        state, r, done = env.step(state, "chop")
        assert r == pytest.approx(0.2 - 0.001)
        assert "tomato=in_bowl" in state
        state, r, done = env.step(state, "get_bowl")
        state, r, done = env.step(state, "deliver")
        assert r == pytest.approx(1.0 - 0.001)
        assert done

    def test_chop_can_fail(self):
        env = OvercookedLiteEnv("tomato_salad", chop_failure_rate=1.0)
        state = env.reset(0)
        state, _, _ = env.step(state, "get_tomato")
        state, _, _ = env.step(state, "go_cutting_board")
        nxt, r, _ = env.step(state, "chop")
        assert "board=tomato" in nxt
        assert r == pytest.approx(-0.001)

    def test_chop_failure_frequency(self):
        env = OvercookedLiteEnv("tomato_salad", chop_failure_rate=0.2)
        state = env.reset(9)
        state, _, _ = env.step(state, "get_tomato")
        board_state, _, _ = env.step(state, "go_cutting_board")
        n, failures = 5000, 0
        for _ in range(n):
            nxt, _, _ = env.step(board_state, "chop")
            failures += "board=tomato" in nxt
        sigma = np.sqrt(0.2 * 0.8 / n)
        assert abs(failures / n - 0.2) < 3 * sigma

    def test_wrong_delivery_resets_wrong_items(self):
        env = OvercookedLiteEnv("tomato_salad", chop_failure_rate=0.0)
        state = env.reset(0)
        for a in ("get_lettuce", "go_cutting_board", "chop", "get_bowl"):
            state, _, _ = env.step(state, a)
        state, r, done = env.step(state, "deliver")
        assert not done
        assert r == pytest.approx(-0.1 - 0.001)
        assert "lettuce=raw" in state and "hand=none" in state

    def test_episode_limit_terminates(self):
        env = OvercookedLiteEnv()
        state = env.reset(0)
        done = False
        for _ in range(200):
            state, _, done = env.step(state, "get_bowl" if "hand=none" in state else "deliver")
            if done:
                break
        assert done

    def test_illegal_actions_raise(self):
        env = OvercookedLiteEnv()
        state = env.reset(0)
        for bad in ("chop", "deliver", "go_cutting_board", "juggle"):
            with pytest.raises(EnvError):
                env.step(state, bad)

    def test_unknown_recipe_raises(self):
        with pytest.raises(ValueError):
            OvercookedLiteEnv("stone_soup")

    def test_legal_actions_match_dynamics(self):
        env = OvercookedLiteEnv()
        state = env.reset(0)
        assert env.legal_actions(state) == ["get_bowl", "get_lettuce", "get_onion", "get_tomato"]


class TestDeterministicized:
    def test_mode_outcome_for_risky_stock_action(self):
        env = deterministicize(StockEnv(), samples_k=5)
        state = env.reset(0)
        # over many wrapped calls the cumulative mode must settle on the
        # 60% outcome: profit with reward 1
        outcomes = [env.step(state, "buy_b") for _ in range(200)]
        nxt, r, done = outcomes[-1]
        assert (nxt, r, done) == ("sold_b_profit", 1.0, True)

    def test_deterministic_env_unchanged(self):
        env = deterministicize(StockEnv(), samples_k=3)
        state = env.reset(0)
        assert env.step(state, "buy_a") == ("sold_a", 0.9, True)

    def test_even_or_nonpositive_k_rejected(self):
        with pytest.raises(ValueError):
            DeterministicizedEnv(StockEnv(), samples_k=4)
        with pytest.raises(ValueError):
            DeterministicizedEnv(StockEnv(), samples_k=0)

    def test_reset_clears_tallies(self):
        env = deterministicize(StockEnv(), samples_k=5)
        state = env.reset(0)
        env.step(state, "buy_b")
        env.reset(1)
        assert env._tally == {}

    def test_passthrough_metadata(self):
        inner = StockEnv()
        env = deterministicize(inner)
        assert env.max_steps == inner.max_steps
        assert env.legal_actions(env.reset(0)) == inner.legal_actions("holding_cash")
