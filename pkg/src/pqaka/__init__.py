"""KEM-based beyond-5G authentication and key agreement: protocol state
machines, two-channel simulator, adversary games, and KEM cost benchmarks."""

from . import backends  # noqa: F401  (registers ECIES and optional PQ suites)
from .crypto import (
    KemKeyPair,
    KemSuite,
    available_suites,
    get_suite,
    registered_suites,
)
from .rng import OsRandom, SeededRandom
from .sim import Attacker, ScriptedAttacker, World, make_world, run_session

__all__ = [
    "Attacker",
    "KemKeyPair",
    "KemSuite",
    "OsRandom",
    "ScriptedAttacker",
    "SeededRandom",
    "World",
    "available_suites",
    "get_suite",
    "make_world",
    "registered_suites",
    "run_session",
]

__version__ = "0.1.0"
