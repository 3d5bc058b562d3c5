from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..curriculum import Curriculum
from ..graybox import GrayBoxContext, Score, decode_up
from ..scheduling import UtilityPenalty, encode_curriculum


class BudgetExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchBox:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi) or np.any(lo < 0):
            raise ValueError("need 0 <= lower <= upper with matching shapes")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def default(cls, n: int, u_max: float = 1000.0, p_max: float = 100.0) -> "SearchBox":
        d = n + n * (n - 1)
        upper = np.concatenate([np.full(n, u_max), np.full(d - n, p_max)])
        return cls(np.zeros(d), upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def to_unit(self, x):
        span = np.where(self.upper > self.lower, self.upper - self.lower, 1.0)
        return (np.asarray(x) - self.lower) / span

    def from_unit(self, z):
        return self.lower + np.clip(z, 0.0, 1.0) * (self.upper - self.lower)


@dataclass(frozen=True)
class OptBudget:
    max_evaluations: int = 300
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_evaluations < 1:
            raise ValueError("budget must be >= 1")


@dataclass
class Observation:
    point: np.ndarray  # flat (u, p): u then off-diagonal p, row-major
    value: float
    curriculum: Curriculum
    index: int

    def point_digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.point, dtype="<f8").tobytes()).hexdigest()[:16]


@dataclass
class RunResult:
    algorithm: str
    best: Observation
    observations: List[Observation]
    evaluations: int
    incumbents: List[float]
    extra: dict = field(default_factory=dict)

    def trace_records(self) -> List[dict]:
        return [{"index": o.index, "point": o.point_digest(), "curriculum": list(o.curriculum),
                 "regret": o.value, "incumbent": inc}
                for o, inc in zip(self.observations, self.incumbents)]

    def write_trace(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.trace_records():
                fh.write(json.dumps(rec) + "\n")


class Tracker:
    """Evaluation bookkeeping for one optimizer run.

    A curriculum costs one unit of budget the first time this run asks for it;
    asking again is free.  With ``count_repeats`` every request costs one unit.
    """

    def __init__(self, ctx: GrayBoxContext, budget: Optional[int] = None,
                 count_repeats: bool = False):
        self.ctx = ctx
        self.budget = budget
        self.count_repeats = count_repeats
        self.evaluations = 0
        self.seen: Dict[Curriculum, Score] = {}
        self.observations: List[Observation] = []
        self.incumbents: List[float] = []
        self.best: Optional[Observation] = None

    @property
    def exhausted(self) -> bool:
        return self.budget is not None and self.evaluations >= self.budget

    def would_cost(self, c: Curriculum) -> bool:
        return self.count_repeats or c not in self.seen

    def score(self, c: Curriculum) -> Score:
        c = tuple(c)
        if self.would_cost(c):
            if self.exhausted:
                raise BudgetExhausted(f"budget of {self.budget} evaluations used")
            self.evaluations += 1
            self.seen[c] = self.ctx.evaluate(c)
        return self.seen[c]

    def observe(self, c: Curriculum, point=None) -> Observation:
        c = tuple(c)
        s = self.score(c)
        if point is None:
            point = encode_curriculum(c, self.ctx.n, self.ctx.L).flat()
        obs = Observation(np.asarray(point, dtype=float), s.regret, c, len(self.observations))
        self.observations.append(obs)
        if self.best is None or obs.value < self.best.value:
            self.best = obs
        self.incumbents.append(self.best.value)
        return obs

    def observe_point(self, point) -> Observation:
        up = UtilityPenalty.from_flat(point, self.ctx.n)
        return self.observe(decode_up(up, self.ctx.L), up.flat())

    def result(self, algorithm: str, **extra) -> RunResult:
        if self.best is None:
            raise RuntimeError("no evaluations were made")
        return RunResult(algorithm, self.best, list(self.observations), self.evaluations,
                         list(self.incumbents), extra)
