"""
Scoring a curriculum by regret
==============================

Train through the source tasks in order, then on the final task, and sum
how far the normalized final-task returns stay below the threshold.
"""
# %%
import numpy as np

from curriculum_graybox.curriculum import (EvalCache, RegretConfig, count_feasible,
                                           enumerate_feasible, evaluate_curriculum)
from curriculum_graybox.gridworld import dump_grid
from curriculum_graybox.tasks import generate_library

lib = generate_library(seed=0, n=5, L=3)
for t in lib.tasks:
    print(t.id, f"{t.height}x{t.width}", len(t.fires), "fires", len(t.pits), "pits")
print(dump_grid(lib.final_task))

# %% how many curricula are there?
print(count_feasible(5, 3), count_feasible(12, 4), count_feasible(7, 7))

# %% regret of "no curriculum" versus a couple of hand-picked ones
cfg = RegretConfig(episodes_final=100, repetitions=3)
cache = EvalCache()
for c in [(), (0,), (2, 4), (4, 2), (0, 2, 4)]:
    res = evaluate_curriculum(lib, c, cfg, cache)
    print(c, "regret %.3f  merit %.3f" % (res.regret, res.merit))

# %% regret plus merit is always episodes times threshold
print(res.regret + res.merit, cfg.episodes_final * cfg.threshold)

# %% full ranking of all 86 curricula
results = [evaluate_curriculum(lib, c, cfg, cache) for c in enumerate_feasible(5, 3)]
order = np.argsort([r.regret for r in results], kind="stable")
for k in order[:5]:
    print(results[k].curriculum, round(results[k].regret, 3))
print("no curriculum ranks", 1 + sum(r.regret < results[0].regret for r in results))
