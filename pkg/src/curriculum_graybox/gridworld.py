"""Episodic grid-world MDP: deterministic moves, projection onto the grid,
hazard/treasure reward table, and an ASCII map format.

Coordinates are ``(row, col)``; north decreases the row index.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import IntEnum
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np

Cell = Tuple[int, int]

PIT_REWARD = -2500.0
FIRE_REWARD = -500.0
FIRE_ADJACENT_REWARD = -250.0
TREASURE_REWARD = 200.0
STEP_REWARD = -1.0

DEFAULT_MAX_STEPS = 50
DEFAULT_DISCOUNT = 0.99


class Action(IntEnum):
    # Declaration order is the greedy tie-break order.
    NORTH = 0
    SOUTH = 1
    EAST = 2
    WEST = 3


ACTIONS = tuple(Action)
MOVES = {
    Action.NORTH: (-1, 0),
    Action.SOUTH: (1, 0),
    Action.EAST: (0, 1),
    Action.WEST: (0, -1),
}


class MapParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class TerminalStateError(RuntimeError):
    """Raised when stepping from a pit or treasure cell."""


@dataclass(frozen=True)
class TaskSpec:
    id: int
    width: int
    height: int
    start: Cell
    treasure: Cell
    fires: FrozenSet[Cell] = field(default_factory=frozenset)
    pits: FrozenSet[Cell] = field(default_factory=frozenset)
    max_steps: int = DEFAULT_MAX_STEPS
    discount: float = DEFAULT_DISCOUNT

    def __post_init__(self):
        object.__setattr__(self, "fires", frozenset(tuple(c) for c in self.fires))
        object.__setattr__(self, "pits", frozenset(tuple(c) for c in self.pits))
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "treasure", tuple(self.treasure))
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must have at least one cell")
        for name, cell in (("start", self.start), ("treasure", self.treasure)):
            if not self.in_bounds(cell):
                raise ValueError(f"{name} {cell} outside {self.height}x{self.width} grid")
        for cell in self.fires | self.pits:
            if not self.in_bounds(cell):
                raise ValueError(f"hazard {cell} outside grid")
        if self.fires & self.pits:
            raise ValueError("a cell cannot be both fire and pit")
        if self.start in self.fires or self.start in self.pits:
            raise ValueError("start cell is a hazard")
        if self.treasure in self.fires or self.treasure in self.pits:
            raise ValueError("treasure cell is a hazard")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def is_terminal(self, cell: Cell) -> bool:
        return cell in self.pits or cell == self.treasure

    def fire_adjacent(self, cell: Cell) -> bool:
        r, c = cell
        return any((r + dr, c + dc) in self.fires for dr, dc in MOVES.values())

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def cell_index(self, cell: Cell) -> int:
        return cell[0] * self.width + cell[1]

    def digest(self) -> str:
        return hashlib.sha256(dump_grid(self).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GridState:
    position: Cell


@dataclass(frozen=True)
class StepOutcome:
    next_state: GridState
    reward: float
    terminal: bool


def initial_state(task: TaskSpec, episode: Optional[int] = None) -> GridState:
    """Start state of an episode.  ``episode`` is accepted for episode-dependent
    starts but the start cell is currently fixed per task."""
    return GridState(task.start)


def reward_for(task: TaskSpec, cell: Cell) -> float:
    """Reward for entering ``cell``.  Cases are exclusive, checked in order
    pit, treasure, fire, fire-adjacent, default."""
    if cell in task.pits:
        return PIT_REWARD
    if cell == task.treasure:
        return TREASURE_REWARD
    if cell in task.fires:
        return FIRE_REWARD
    if task.fire_adjacent(cell):
        return FIRE_ADJACENT_REWARD
    return STEP_REWARD


def project(task: TaskSpec, cell: Cell) -> Cell:
    r, c = cell
    return (min(max(r, 0), task.height - 1), min(max(c, 0), task.width - 1))


def step(task: TaskSpec, s: GridState, a: Action) -> StepOutcome:
    if not task.in_bounds(s.position):
        raise ValueError(f"state {s.position} outside grid")
    if task.is_terminal(s.position):
        raise TerminalStateError(f"cannot step from absorbing cell {s.position}")
    dr, dc = MOVES[Action(a)]
    nxt = project(task, (s.position[0] + dr, s.position[1] + dc))
    return StepOutcome(GridState(nxt), reward_for(task, nxt), task.is_terminal(nxt))


def transition_tables(task: TaskSpec):
    """Dense ``(next_index, reward, terminal)`` arrays of shape (cells, 4).

    Rows for terminal cells are filled in but never used by a learner.
    """
    n = task.n_cells
    nxt = np.zeros((n, 4), dtype=np.int64)
    rew = np.zeros((n, 4), dtype=np.float64)
    term = np.zeros((n, 4), dtype=np.bool_)
    for r in range(task.height):
        for c in range(task.width):
            i = task.cell_index((r, c))
            for a in ACTIONS:
                dr, dc = MOVES[a]
                cell = project(task, (r + dr, c + dc))
                nxt[i, a] = task.cell_index(cell)
                rew[i, a] = reward_for(task, cell)
                term[i, a] = task.is_terminal(cell)
    return nxt, rew, term


def rollout(task: TaskSpec, policy, start: Optional[GridState] = None):
    """Run ``policy(state) -> Action`` until termination or ``max_steps``.

    Returns the list of ``(state, action, outcome)`` triples.
    """
    s = start or initial_state(task)
    trace = []
    for _ in range(task.max_steps):
        a = policy(s)
        out = step(task, s, a)
        trace.append((s, a, out))
        if out.terminal:
            break
        s = out.next_state
    return trace


def discounted_return(rewards: Iterable[float], discount: float) -> float:
    total = 0.0
    factor = 1.0
    for r in rewards:
        total += factor * r
        factor *= discount
    return total


def _horizon_values(task: TaskSpec, pick) -> float:
    nxt, rew, term = transition_tables(task)
    value = np.zeros(task.n_cells)
    for _ in range(task.max_steps):
        cont = np.where(term, 0.0, value[nxt])
        value = pick(rew + task.discount * cont, axis=1)
    return float(value[task.cell_index(task.start)])


def optimal_return(task: TaskSpec) -> float:
    """Best achievable discounted episode return (finite-horizon DP)."""
    return _horizon_values(task, np.max)


def worst_return(task: TaskSpec) -> float:
    """Lowest achievable discounted episode return (finite-horizon DP)."""
    return _horizon_values(task, np.min)


# ---------------------------------------------------------------------------
# ASCII maps

GLYPHS = {".": "free", "S": "start", "T": "treasure", "F": "fire", "P": "pit"}


def load_grid(text: str, task_id: int = 0, max_steps: int = DEFAULT_MAX_STEPS,
              discount: float = DEFAULT_DISCOUNT) -> TaskSpec:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    offset = 0
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
        offset = 1
    if not lines:
        raise MapParseError("empty map", 1, 1)
    width = len(lines[0])
    start = treasure = None
    fires, pits = set(), set()
    for r, line in enumerate(lines):
        lineno = r + 1 + offset
        if len(line) != width:
            raise MapParseError(f"ragged row: expected {width} cells, got {len(line)}",
                                lineno, min(len(line), width) + 1)
        for c, ch in enumerate(line):
            if ch not in GLYPHS:
                raise MapParseError(f"unknown glyph {ch!r}", lineno, c + 1)
            if ch == "S":
                if start is not None:
                    raise MapParseError("duplicate start", lineno, c + 1)
                start = (r, c)
            elif ch == "T":
                if treasure is not None:
                    raise MapParseError("duplicate treasure", lineno, c + 1)
                treasure = (r, c)
            elif ch == "F":
                fires.add((r, c))
            elif ch == "P":
                pits.add((r, c))
    if start is None:
        raise MapParseError("missing start 'S'", 1 + offset, 1)
    if treasure is None:
        raise MapParseError("missing treasure 'T'", 1 + offset, 1)
    if width == 0:
        raise MapParseError("empty row", 1 + offset, 1)
    return TaskSpec(task_id, width, len(lines), start, treasure,
                    frozenset(fires), frozenset(pits), max_steps, discount)


def dump_grid(task: TaskSpec, comment: Optional[str] = None) -> str:
    rows = []
    for r in range(task.height):
        row = []
        for c in range(task.width):
            cell = (r, c)
            if cell == task.start:
                row.append("S")
            elif cell == task.treasure:
                row.append("T")
            elif cell in task.fires:
                row.append("F")
            elif cell in task.pits:
                row.append("P")
            else:
                row.append(".")
        rows.append("".join(row))
    head = f"#{comment}\n" if comment is not None else ""
    return head + "\n".join(rows) + "\n"


def read_grid_file(path, task_id: int = 0, **kwargs) -> TaskSpec:
    with open(path, encoding="utf-8") as fh:
        return load_grid(fh.read(), task_id=task_id, **kwargs)
