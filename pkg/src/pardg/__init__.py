"""Low-adaptivity double greedy for non-monotone DR-submodular maximization."""

from pardg.kernels import BACKEND
from pardg.oracles import (CountingOracle, CutOracle, InvalidInput, OracleError, OracleStats, QuadraticDr,
                           WeightedDigraph, independent_round)
from pardg.solver import SolverConfig, guess_m_and_solve, parallel_double_greedy
from pardg.dynamics import DynamicsConfig, Rule, integrate
from pardg.baselines import brute_force_opt, grid_search_opt, random_half, sequential_double_greedy

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CountingOracle", "CutOracle", "DynamicsConfig", "InvalidInput", "OracleError",
    "OracleStats", "QuadraticDr", "Rule", "SolverConfig", "WeightedDigraph", "brute_force_opt",
    "grid_search_opt", "guess_m_and_solve", "independent_round", "integrate", "parallel_double_greedy",
    "random_half", "sequential_double_greedy",
]
