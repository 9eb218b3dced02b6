"""Stochastic benchmark environments and the deterministicizing wrapper."""

from .base import Environment
from .blocksworld import BlocksworldEnv, generate_instance, parse_facts, parse_instance
from .overcooked import OvercookedLiteEnv
from .stock import StockEnv
from .wrappers import DeterministicizedEnv, deterministicize

__all__ = [
    "Environment",
    "StockEnv",
    "BlocksworldEnv",
    "OvercookedLiteEnv",
    "DeterministicizedEnv",
    "deterministicize",
    "generate_instance",
    "parse_facts",
    "parse_instance",
]
