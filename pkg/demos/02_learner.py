"""
Sarsa(lambda) with tile coding
==============================

A linear learner whose features only look at the treasure offset and the
hazards around the agent, so the same weights make sense on any map.
"""
# %%
import numpy as np

from curriculum_graybox.gridworld import Action, GridState, load_grid
from curriculum_graybox.learner import (LearnerConfig, PolicyParams, TileCodingConfig,
                                        featurize, greedy_return, train)
from curriculum_graybox.tasks import random_task

tiles = TileCodingConfig()
print("weights:", tiles.K, "tilings:", tiles.num_tilings)

# %% every (state, action) pair activates exactly one tile per tiling
corridor = load_grid("S.T")
print(featurize(tiles, corridor, GridState((0, 0)), Action.EAST))

# %% the corridor is solved within a hundred episodes: return -1 + 0.99 * 200
theta, returns = train(corridor, PolicyParams.zeros(tiles), LearnerConfig(episodes=100), tiles)
print("greedy return", greedy_return(corridor, theta, tiles))

# %% a harder map, and a learning curve averaged over blocks of ten episodes
task = random_task(np.random.default_rng(1), 0, 8, 8, n_fires=4, n_pits=3)
theta, returns = train(task, PolicyParams.zeros(tiles), LearnerConfig(episodes=300), tiles)
print(returns.reshape(-1, 10).mean(axis=1).round(1))

# %% transfer is just reusing theta on the next task
task2 = random_task(np.random.default_rng(2), 1, 10, 10, n_fires=6, n_pits=6)
_, cold = train(task2, PolicyParams.zeros(tiles), LearnerConfig(episodes=50), tiles)
_, warm = train(task2, theta, LearnerConfig(episodes=50), tiles)
print("mean return cold %.1f, after the 8x8 task %.1f" % (cold.mean(), warm.mean()))
