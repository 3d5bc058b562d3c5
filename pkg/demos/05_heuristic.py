"""
Estimating utilities and penalties from short curricula
=======================================================

Evaluate every single task and every ordered pair (n^2 curricula), read off
(u, p) in closed form, then let the scheduler pick a longer curriculum.
"""
# %%
import numpy as np

from curriculum_graybox.curriculum import RegretConfig, enumerate_feasible
from curriculum_graybox.graybox import (AdditiveMerit, GrayBoxContext, estimate_up,
                                        heuristic_curriculum)
from curriculum_graybox.scheduling import UtilityPenalty
from curriculum_graybox.tasks import generate_library

# %% a synthetic merit that follows the additive model exactly
rng = np.random.default_rng(3)
n, L = 5, 3
p = rng.uniform(0, 4, (n, n))
np.fill_diagonal(p, 0)
p[~np.eye(n, dtype=bool)] -= p[~np.eye(n, dtype=bool)].min()
planted = UtilityPenalty(rng.uniform(60, 120, n), p)
oracle = AdditiveMerit(planted, L, offset=-20.0)
ctx = GrayBoxContext(oracle=oracle, n_tasks=n, L=L)

est = estimate_up(ctx)
print("evaluations:", ctx.requests)
print("penalties recovered:", np.allclose(est.p_bar, planted.p))
c, regret = heuristic_curriculum(ctx, est)
print("picked", c, "best", max(enumerate_feasible(n, L), key=oracle.merit))

# %% on a real task set the additive model is only an approximation
lib = generate_library(2, n=5, L=3)
ctx = GrayBoxContext(lib, RegretConfig(episodes_final=100, repetitions=3))
c, regret = heuristic_curriculum(ctx)
print("heuristic curriculum", c, "regret %.3f" % regret, "after", ctx.requests, "evaluations")
print("no curriculum regret %.3f" % ctx.evaluate(()).regret)
