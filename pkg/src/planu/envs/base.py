"""Common environment protocol: text states, seeded stochastic steps."""

from __future__ import annotations

from typing import Protocol, runtime_checkable


@runtime_checkable
class Environment(Protocol):
    """Text-state environment with seeded, replayable stochasticity.

    step() is a pure function of (state, action, internal RNG draw), so a
    planner may query arbitrary states in any order; identical seed
    sequences give identical trajectories.
    """

    max_steps: int

    def reset(self, seed: int) -> str: ...

    def step(self, state: str, action_text: str) -> tuple[str, float, bool]: ...

    def legal_actions(self, state: str) -> list[str]: ...
