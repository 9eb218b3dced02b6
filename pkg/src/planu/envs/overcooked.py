"""Macro-action salad-cooking task with stochastic chopping.

Three ingredients (tomato, lettuce, onion) move through raw -> on the
cutting board -> in the bowl. Chop fails 20% of the time by default.
Delivering the bowl with exactly the recipe's ingredients ends the episode
with +1; a wrong delivery costs -0.1 and sends the wrong ingredients back
to their initial raw position. Every macro step costs 0.001.
"""

from __future__ import annotations

import numpy as np

from ..errors import EnvError

INGREDIENTS = ("tomato", "lettuce", "onion")
STEP_PENALTY = 0.001
CHOP_REWARD = 0.2
DELIVER_REWARD = 1.0
WRONG_DELIVERY_PENALTY = -0.1
EPISODE_LIMIT = 200

RECIPES = {
    "tomato_salad": frozenset({"tomato"}),
    "tomato_lettuce_salad": frozenset({"tomato", "lettuce"}),
    "full_salad": frozenset({"tomato", "lettuce", "onion"}),
}


def _parse(state: str) -> dict:
    fields = dict(tok.split("=", 1) for tok in state.split())
    try:
        return {
            "t": int(fields["t"]),
            "hand": fields["hand"],
            "board": fields["board"],
            "status": {ing: fields[ing] for ing in INGREDIENTS},
        }
    except KeyError as exc:
        raise EnvError(f"malformed state {state!r}") from exc


def _render(t: int, hand: str, board: str, status: dict) -> str:
    parts = [f"t={t}", f"hand={hand}", f"board={board}"]
    parts += [f"{ing}={status[ing]}" for ing in INGREDIENTS]
    return " ".join(parts)


class OvercookedLiteEnv:
    """Single-cook kitchen at the macro-action level (no grid navigation)."""

    max_steps = EPISODE_LIMIT

    def __init__(self, recipe: str = "tomato_salad", chop_failure_rate: float = 0.2, seed: int = 0):
        if recipe not in RECIPES:
            raise ValueError(f"unknown recipe {recipe!r}; known: {sorted(RECIPES)}")
        if not (0.0 <= chop_failure_rate <= 1.0):
            raise ValueError(f"chop_failure_rate must be in [0, 1], got {chop_failure_rate}")
        self.recipe = recipe
        self.target = RECIPES[recipe]
        self.chop_failure_rate = chop_failure_rate
        self._rng = np.random.default_rng(seed)

    def reset(self, seed: int) -> str:
        self._rng = np.random.default_rng(seed)
        return _render(0, "none", "none", {ing: "raw" for ing in INGREDIENTS})

    def legal_actions(self, state: str) -> list[str]:
        s = _parse(state)
        acts = []
        if s["hand"] == "none":
            acts += [f"get_{ing}" for ing in INGREDIENTS if s["status"][ing] == "raw"]
            acts.append("get_bowl")
        elif s["hand"] == "bowl":
            acts.append("deliver")
        else:
            acts.append("go_cutting_board")
        if s["board"] != "none":
            acts.append("chop")
        return sorted(acts)

    def step(self, state: str, action_text: str) -> tuple[str, float, bool]:
        s = _parse(state)
        hand, board, status = s["hand"], s["board"], dict(s["status"])
        t = s["t"] + 1
        r = -STEP_PENALTY
        done = False

        if action_text.startswith("get_") and action_text != "get_bowl":
            ing = action_text[4:]
            if ing not in INGREDIENTS or hand != "none" or status[ing] != "raw":
                raise EnvError(f"illegal action {action_text!r} in state {state!r}")
            hand, status[ing] = ing, "held"
        elif action_text == "get_bowl":
            if hand != "none":
                raise EnvError(f"hands full; cannot {action_text!r}")
            hand = "bowl"
        elif action_text == "go_cutting_board":
            if hand in ("none", "bowl"):
                raise EnvError(f"nothing to put on the board in state {state!r}")
            if board != "none":
                raise EnvError("cutting board is occupied")
            board, status[hand], hand = hand, "on_board", "none"
        elif action_text == "chop":
            if board == "none":
                raise EnvError("nothing on the cutting board")
            if self._rng.random() >= self.chop_failure_rate:
                status[board] = "in_bowl"
                if board in self.target:
                    r += CHOP_REWARD
                board = "none"
        elif action_text == "deliver":
            if hand != "bowl":
                raise EnvError("must hold the bowl to deliver")
            in_bowl = {ing for ing in INGREDIENTS if status[ing] == "in_bowl"}
            if in_bowl == self.target:
                r += DELIVER_REWARD
                done = True
            else:
                r += WRONG_DELIVERY_PENALTY
                for ing in in_bowl - self.target:
                    status[ing] = "raw"
                hand = "none"
        else:
            raise EnvError(f"unknown action {action_text!r}")

        if t >= EPISODE_LIMIT:
            done = True
        return _render(t, hand, board, status), r, done
