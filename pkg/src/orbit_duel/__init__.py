"""Anti-jamming covariance game for cooperative multi-satellite uplinks."""

from .channel import DishAntenna, LinkBudget, PlanarArray, build_channel, stack
from .constellation import GroundSite, WalkerConfig, propagate_walker, select_nearest
from .game import CovarianceMatrix, GameSolution, SolverConfig, saddle_check, solve
from .scenario import Scenario, parse_scenario, run_campaign

__version__ = "0.1.0"

__all__ = [
    "CovarianceMatrix", "DishAntenna", "GameSolution", "GroundSite", "LinkBudget", "PlanarArray",
    "Scenario", "SolverConfig", "WalkerConfig", "build_channel", "parse_scenario",
    "propagate_walker", "run_campaign", "saddle_check", "select_nearest", "solve", "stack",
]
