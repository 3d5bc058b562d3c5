"""
Grid worlds as text
===================

Maps are plain text: S start, T treasure, F fire, P pit, "." free.
"""
# %%
import numpy as np

from curriculum_graybox.gridworld import (Action, GridState, dump_grid, load_grid,
                                          optimal_return, rollout, step, worst_return)

task = load_grid("""# a small room
S...
....
.F..
..PT""")
print(dump_grid(task))

# %% one step east from the start costs the default -1
out = step(task, GridState((0, 0)), Action.EAST)
print(out)

# %% stepping next to the fire is expensive, stepping into the pit ends the episode
print(step(task, GridState((1, 0)), Action.EAST).reward)
print(step(task, GridState((2, 2)), Action.SOUTH))

# %% a fixed "always east, then south" policy
def east_then_south(s):
    return Action.EAST if s.position[1] < task.width - 1 else Action.SOUTH

trace = rollout(task, east_then_south)
rewards = np.array([o.reward for _, _, o in trace])
print(len(trace), "steps, rewards", rewards)

# %% the bounds used to normalize learning curves, from finite-horizon dynamic programming
print("best possible return  %.3f" % optimal_return(task))
print("worst possible return %.3f" % worst_return(task))
