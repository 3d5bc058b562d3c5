"""Search algorithms over the (u, p) parameter space."""
from .baselines import (rank_of, run_c0, run_exhaustive, run_greedy, run_heuristic,
                        run_random)
from .gp import GaussianProcess, GPConfig, expected_improvement, run_gp
from .tpe import TPEConfig, run_tpe
from .tracker import (BudgetExhausted, Observation, OptBudget, RunResult, SearchBox,
                      Tracker)

__all__ = [
    "BudgetExhausted", "GPConfig", "GaussianProcess", "Observation", "OptBudget", "RunResult",
    "SearchBox", "TPEConfig", "Tracker", "expected_improvement", "rank_of", "run_c0",
    "run_exhaustive", "run_gp", "run_greedy", "run_heuristic", "run_random", "run_tpe",
]
