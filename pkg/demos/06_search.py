"""
Searching (u, p) with black-box optimizers
==========================================

Every point (u, p) maps to a curriculum through the exact scheduler, and the
curriculum maps to a regret through training.  GP and TPE search that
composite objective; exhaustive search gives the ground-truth ranks.
"""
# %%
from curriculum_graybox.harness import desk_benchmark

# about a minute per task set on one core
for seed in range(2):
    r = desk_benchmark(seed, algorithms=("c0", "heuristic", "greedy", "gp", "tpe"))
    print(f"task set {seed}: |C| = {r['size']}, best regret {r['best']:.3f}")
    for algo in ("c0", "heuristic", "greedy", "gp", "tpe"):
        row = r[algo]
        print(f"  {algo:<10} rank {row['rank']:>3}  regret {row['regret']:8.3f}  "
              f"evaluations {row['evaluations']:>3}  {row['curriculum']}")
