"""The composite objective psi(u, p) = regret(decode(solve(u, p))) and the
closed-form estimate of (u, p) from singleton and pair curricula."""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .curriculum import (Curriculum, EvalCache, RegretConfig, TaskLibrary,
                         check_curriculum, evaluate_curriculum)
from .scheduling import (UtilityPenalty, decode, from_offdiag, offdiag,
                         solution_from_sequence, solve)


class Score(NamedTuple):
    regret: float
    merit: float


@dataclass
class GrayBoxContext:
    """Everything needed to score a curriculum.

    ``oracle`` replaces reinforcement-learning evaluation with any
    ``curriculum -> Score`` callable (synthetic benchmarks, tests).
    """
    library: Optional[TaskLibrary] = None
    regret_cfg: RegretConfig = RegretConfig()
    cache: Optional[EvalCache] = field(default_factory=EvalCache)
    L: Optional[int] = None
    oracle: Optional[Callable[[Curriculum], Score]] = None
    n_tasks: Optional[int] = None
    requests: int = 0

    def __post_init__(self):
        if self.library is None and self.oracle is None:
            raise ValueError("need a task library or an oracle")
        if self.library is not None:
            if self.n_tasks is not None and self.n_tasks != self.library.n:
                raise ValueError("n_tasks disagrees with the library")
            self.n_tasks = self.library.n
            if self.L is None:
                self.L = self.library.max_length
        if self.n_tasks is None or self.L is None:
            raise ValueError("n_tasks and L are required with an oracle")
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self.n_tasks

    def evaluate(self, c: Sequence[int]) -> Score:
        c = check_curriculum(c, self.n, self.L)
        with self._lock:
            self.requests += 1
        if self.oracle is not None:
            return Score(*self.oracle(c))
        res = evaluate_curriculum(self.library, c, self.regret_cfg, self.cache)
        return Score(res.regret, res.merit)

    def without_cache(self) -> "GrayBoxContext":
        return GrayBoxContext(self.library, self.regret_cfg, None, self.L,
                              self.oracle, self.n_tasks)


class AdditiveMerit:
    """Merit that follows the additive utility/penalty model exactly:
    ``U(c) = U_hat(c; u*, p*) + offset`` and regret ``N*g - U``."""

    def __init__(self, up: UtilityPenalty, L: int, offset: float = 0.0,
                 episodes: int = 100, threshold: float = 1.0):
        self.up = up
        self.L = L
        self.offset = offset
        self.episodes = episodes
        self.threshold = threshold
        self.calls = 0

    def merit(self, c: Curriculum) -> float:
        sol = solution_from_sequence(c, self.up.n, self.L, self.up)
        return sol.objective + self.offset

    def __call__(self, c: Curriculum) -> Score:
        self.calls += 1
        m = self.merit(c)
        return Score(self.episodes * self.threshold - m, m)


def decode_up(up: UtilityPenalty, L: int) -> Curriculum:
    return decode(solve(up, L), L)


def psi(ctx: GrayBoxContext, up: UtilityPenalty) -> float:
    if up.n != ctx.n:
        raise ValueError(f"expected {ctx.n} tasks, got {up.n}")
    return ctx.evaluate(decode_up(up, ctx.L)).regret


@dataclass
class HeuristicEstimate:
    u_bar: np.ndarray
    p_bar: np.ndarray  # n x n, diagonal unused
    U_bar: float
    utility_shift: float
    singles: np.ndarray  # U(m_i)
    pairs: np.ndarray  # pairs[i, j] = U(m_i, m_j), i trained first

    @property
    def up(self) -> UtilityPenalty:
        return UtilityPenalty(self.u_bar, self.p_bar)

    def to_json(self) -> str:
        return json.dumps({
            "u_bar": self.u_bar.tolist(), "p_bar": offdiag(self.p_bar).tolist(),
            "U_bar": self.U_bar, "utility_shift": self.utility_shift,
            "singles": self.singles.tolist(), "pairs": offdiag(self.pairs).tolist(),
        }) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "HeuristicEstimate":
        d = json.loads(text)
        n = len(d["u_bar"])
        return cls(np.array(d["u_bar"]), from_offdiag(d["p_bar"], n), d["U_bar"],
                   d["utility_shift"], np.array(d["singles"]), from_offdiag(d["pairs"], n))


def estimate_from_merits(singles: np.ndarray, pairs: np.ndarray) -> HeuristicEstimate:
    """Utilities and penalties from singleton merits ``U(m_i)`` and ordered pair
    merits ``U(m_i, m_j)``.

    With ``b[j, i] = U(m_i, m_j) - U(m_i) - U(m_j)`` the penalty of j before i
    is ``b[j, i] + U_bar`` and ``u_i = U(m_i) + sum_k b[i, k] + (n - 2) U_bar``.
    ``U_bar`` is set so the smallest penalty is zero; utilities then get one
    common non-negative shift so that ``min u >= 10 max p``.
    """
    singles = np.asarray(singles, dtype=float)
    n = len(singles)
    off = ~np.eye(n, dtype=bool)
    b = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                b[j, i] = pairs[i, j] - singles[i] - singles[j]
    U_bar = -float(np.min(b[off])) if n > 1 else 0.0
    p_bar = np.where(off, b + U_bar, 0.0)
    # guard against -0.0 / rounding below zero at the minimum
    p_bar = np.maximum(p_bar, 0.0)
    a = singles + np.where(off, b, 0.0).sum(axis=1)
    u_raw = a + (n - 2) * U_bar
    p_max = float(np.max(p_bar[off])) if n > 1 else 0.0
    shift = max(0.0, 10.0 * p_max - float(np.min(u_raw)))
    u_bar = np.maximum(u_raw + shift, 0.0)
    return HeuristicEstimate(u_bar, p_bar, U_bar, shift, singles, np.asarray(pairs, dtype=float))


def estimate_up(ctx: GrayBoxContext, evaluate: Optional[Callable] = None) -> HeuristicEstimate:
    """Spend n^2 merit evaluations (n singletons, n(n-1) ordered pairs)."""
    n = ctx.n
    if n < 2:
        raise ValueError("the estimate needs at least two tasks")
    if ctx.L < 2:
        raise ValueError("pair curricula need L >= 2")
    evaluate = evaluate or ctx.evaluate
    singles = np.array([evaluate((i,)).merit for i in range(n)])
    pairs = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                pairs[i, j] = evaluate((i, j)).merit
    return estimate_from_merits(singles, pairs)


def heuristic_curriculum(ctx: GrayBoxContext, estimate: Optional[HeuristicEstimate] = None,
                         evaluate: Optional[Callable] = None) -> Tuple[Curriculum, float]:
    """Curriculum picked by the scheduler at the estimated (u, p), and its regret."""
    evaluate = evaluate or ctx.evaluate
    if ctx.n == 1 or ctx.L < 2:
        # too small for pairs: compare the candidates directly
        options = [()] + [(i,) for i in range(ctx.n)]
        scores = [evaluate(c) for c in options]
        k = int(np.argmax([s.merit for s in scores]))
        return options[k], scores[k].regret
    if estimate is None:
        estimate = estimate_up(ctx, evaluate)
    c = decode_up(estimate.up, ctx.L)
    return c, evaluate(c).regret
