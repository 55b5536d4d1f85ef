"""Simulation and analysis of perception-coupled two-player games.

Couples pairs of symmetric 2x2 games through an evolving perception
state: mean-field dynamics and equilibria, Monte Carlo basin estimates,
a heterogeneous agent-based model, and deterministic dataset pipelines.
"""

__version__ = "0.1.0"

from .abm import Agent, AbmConfig, AbmStats, Population, delta_alpha, run_abm
from .basins import (BasinResult, MonteCarloParams, SweepDataset,
                     estimate_attractiveness, largest_jump, sweep_battle_line,
                     sweep_g2_grid)
from .dynamics import (State, Termination, Trajectory, expected_payoffs, field_grid,
                       integrate, step_rk4, vector_field)
from .equilibria import (EigenSummary, FixedPoint, StabilityClass,
                         all_fixed_points, attractive_interior_condition,
                         boundary_fixed_points, interior_eigen, interior_fixed_points,
                         numeric_jacobian)
from .experiments import ExperimentSpec, Manifest, reproduce
from .games import (DegenerateGameError, DrunkGame, FearGreed, GameClass, PayoffMatrix,
                    QPoly, SingleEquilibrium, classify_game, fear_greed,
                    incentive_to_defect, normalized, preset, single_game_fixed_points)

__all__ = [
    "__version__",
    "Agent", "AbmConfig", "AbmStats", "Population", "delta_alpha", "run_abm",
    "BasinResult", "MonteCarloParams", "SweepDataset", "estimate_attractiveness",
    "largest_jump", "sweep_battle_line", "sweep_g2_grid",
    "State", "Termination", "Trajectory", "expected_payoffs", "field_grid",
    "integrate", "step_rk4", "vector_field",
    "EigenSummary", "FixedPoint", "StabilityClass", "all_fixed_points",
    "attractive_interior_condition", "boundary_fixed_points", "interior_eigen",
    "interior_fixed_points", "numeric_jacobian",
    "ExperimentSpec", "Manifest", "reproduce",
    "DegenerateGameError", "DrunkGame", "FearGreed", "GameClass", "PayoffMatrix",
    "QPoly", "SingleEquilibrium", "classify_game", "fear_greed",
    "incentive_to_defect", "normalized", "preset", "single_game_fixed_points",
]
