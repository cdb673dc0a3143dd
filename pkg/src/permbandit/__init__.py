"""Adversarial bandit linear optimization over rankings.

Two learners for the repeated ranking game with scalar-only feedback: a
score-based sampler over permutations (banditrank) and mirror descent on
the scaled permutahedron (osmdrank), plus the game loop, adversaries,
exact small-n verification, and a CLI.
"""

from __future__ import annotations

__version__ = "0.1.0"

from . import banditrank, game, numerics, oracle, osmd_rank, perm_core, plackett_luce
from .banditrank import BanditRankLearner, BanditRankParams
from .game import GameConfig, LearnerFailure, RegretTrace, regret_slope, run_game
from .osmd_rank import ConvexCombination, OsmdParams, OsmdRankLearner

__all__ = [
    "__version__",
    "banditrank",
    "game",
    "numerics",
    "oracle",
    "osmd_rank",
    "perm_core",
    "plackett_luce",
    "BanditRankLearner",
    "BanditRankParams",
    "GameConfig",
    "LearnerFailure",
    "RegretTrace",
    "regret_slope",
    "run_game",
    "ConvexCombination",
    "OsmdParams",
    "OsmdRankLearner",
]
