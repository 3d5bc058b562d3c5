"""Random grid-world task sets with a guaranteed hazard-free route."""
from __future__ import annotations

from collections import deque
from typing import Tuple

import numpy as np

from .curriculum import TaskLibrary
from .gridworld import MOVES, TaskSpec


def safe_path_exists(task: TaskSpec) -> bool:
    """Is the treasure reachable without entering a pit, fire or fire-adjacent cell?"""
    def safe(cell):
        return (cell == task.treasure
                or (cell not in task.pits and cell not in task.fires
                    and not task.fire_adjacent(cell)))

    if not safe(task.start) and task.start != task.treasure:
        return False
    seen = {task.start}
    queue = deque([task.start])
    while queue:
        cell = queue.popleft()
        if cell == task.treasure:
            return True
        for dr, dc in MOVES.values():
            nxt = (cell[0] + dr, cell[1] + dc)
            if task.in_bounds(nxt) and nxt not in seen and safe(nxt):
                seen.add(nxt)
                queue.append(nxt)
    return False


def random_task(rng: np.random.Generator, task_id: int, height: int, width: int,
                n_fires: int, n_pits: int, max_steps: int = 50, discount: float = 0.99,
                max_tries: int = 1000) -> TaskSpec:
    cells = [(r, c) for r in range(height) for c in range(width)]
    for _ in range(max_tries):
        picks = rng.permutation(len(cells))[: 2 + n_fires + n_pits]
        chosen = [cells[k] for k in picks]
        start, treasure = chosen[0], chosen[1]
        if abs(start[0] - treasure[0]) + abs(start[1] - treasure[1]) < (height + width) // 2:
            continue
        fires = frozenset(chosen[2: 2 + n_fires])
        pits = frozenset(chosen[2 + n_fires:])
        task = TaskSpec(task_id, width, height, start, treasure, fires, pits,
                        max_steps, discount)
        if safe_path_exists(task):
            return task
    raise RuntimeError(f"no solvable {height}x{width} layout with {n_fires} fires, {n_pits} pits")


def generate_library(seed: int, n: int = 5, L: int = 3, source_sizes: Tuple[int, int] = (5, 7),
                     final_size: int = 10, final_fires: int = 6, final_pits: int = 6,
                     max_steps: int = 50, discount: float = 0.99) -> TaskLibrary:
    """``n`` small source tasks of varying size and hazard mix plus one large final task."""
    rng = np.random.default_rng(seed)
    tasks = []
    for i in range(n):
        size = int(rng.integers(source_sizes[0], source_sizes[1] + 1))
        n_fires = int(rng.integers(0, 4))
        n_pits = int(rng.integers(0, 4))
        tasks.append(random_task(rng, i, size, size, n_fires, n_pits, max_steps, discount))
    final = random_task(rng, n, final_size, final_size, final_fires, final_pits,
                        max_steps, discount)
    return TaskLibrary(tuple(tasks), final, L)
