"""
The scheduling problem
======================

Given a utility per task and a penalty for each ordered pair, pick at most L
tasks and an order.  Tasks left out count as scheduled after every included one.
"""
# %%
import numpy as np

from curriculum_graybox.scheduling import (ScheduleSolution, UtilityPenalty, brute_force_solve,
                                           check_feasible, decode, encode_curriculum, solve)

p = np.zeros((3, 3))
p[0, 1], p[1, 0] = 10.0, 1.0
up = UtilityPenalty([5.0, 5.0, 0.0], p)
sol = solve(up, L=2)
print("x", sol.x, "delta", sol.delta, "objective", sol.objective)
print("curriculum", decode(sol, 2))
print(sol.gamma)

# %% the solution satisfies every linear constraint of the integer program
print(check_feasible(sol, 2))

# %% break a constraint on purpose
bad_x = sol.x.copy()
bad_x[2] = 0
print(check_feasible(ScheduleSolution(bad_x, sol.delta, sol.gamma, 0.0), 2))

# %% the dynamic program agrees with brute force
rng = np.random.default_rng(0)
for _ in range(5):
    up = UtilityPenalty(rng.uniform(0, 30, 6), rng.uniform(0, 5, (6, 6)))
    a, b = solve(up, 3), brute_force_solve(up, 3)
    print(decode(a, 3), round(a.objective, 6), round(b.objective, 6))

# %% any curriculum can be produced by some (u, p)
up = encode_curriculum((2, 0), n=3, L=2)
print(up.u, "\n", up.p)
print(decode(solve(up, 2), 2))
