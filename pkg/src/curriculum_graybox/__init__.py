"""Search for good source-task sequences before a grid-world target task.

An exact scheduler turns utility/penalty parameters into a curriculum, and
black-box optimizers tune those parameters against measured regret."""

from .curriculum import (EvalCache, EvalResult, Normalizer, RegretConfig, TaskLibrary,
                         count_feasible, enumerate_feasible, evaluate_curriculum, merit,
                         rank_curriculum)
from .graybox import (AdditiveMerit, GrayBoxContext, HeuristicEstimate, estimate_up,
                      heuristic_curriculum, psi)
from .gridworld import Action, GridState, TaskSpec, load_grid, dump_grid, step
from .learner import LearnerConfig, PolicyParams, TileCodingConfig, train
from .scheduling import (ScheduleSolution, UtilityPenalty, brute_force_solve, check_feasible,
                         decode, encode_curriculum, solve)

__version__ = "0.1.0"

__all__ = [
    "Action", "AdditiveMerit", "EvalCache", "EvalResult", "GrayBoxContext", "GridState",
    "HeuristicEstimate", "LearnerConfig", "Normalizer", "PolicyParams", "RegretConfig",
    "ScheduleSolution", "TaskLibrary", "TaskSpec", "TileCodingConfig", "UtilityPenalty",
    "brute_force_solve", "check_feasible", "count_feasible", "decode", "dump_grid",
    "encode_curriculum", "enumerate_feasible", "estimate_up", "evaluate_curriculum",
    "heuristic_curriculum", "load_grid", "merit", "psi", "rank_curriculum", "solve", "step",
    "train",
]
