"""Reference algorithms: no curriculum, greedy extension, uniform random
search, the closed-form heuristic, and exhaustive ranking."""
from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from ..curriculum import Curriculum, count_feasible, enumerate_feasible
from ..graybox import GrayBoxContext, HeuristicEstimate, decode_up, estimate_up
from .tracker import BudgetExhausted, OptBudget, RunResult, SearchBox, Tracker

DEFAULT_CEILING = 20000


def run_c0(ctx: GrayBoxContext) -> RunResult:
    tr = Tracker(ctx, budget=1)
    tr.observe(())
    return tr.result("c0")


def run_greedy(ctx: GrayBoxContext, budget: OptBudget) -> RunResult:
    """Grow the curriculum one task at a time, keeping the extension with the
    lowest regret while it strictly beats the current prefix."""
    if budget.max_evaluations < ctx.n:
        raise ValueError(f"greedy needs a budget of at least n={ctx.n}")
    tr = Tracker(ctx, budget=budget.max_evaluations)
    incumbent: Curriculum = ()
    inc_value = tr.observe(()).value
    try:
        while len(incumbent) < ctx.L:
            best_ext, best_value = None, None
            for t in range(ctx.n):
                if t in incumbent:
                    continue
                obs = tr.observe(incumbent + (t,))
                if best_value is None or obs.value < best_value:
                    best_ext, best_value = obs.curriculum, obs.value
            if best_value is None or not best_value < inc_value:
                break
            incumbent, inc_value = best_ext, best_value
    except BudgetExhausted:
        pass
    return tr.result("greedy", curriculum=list(incumbent))


def run_random(ctx: GrayBoxContext, box: SearchBox, budget: OptBudget,
               max_proposals: Optional[int] = None) -> RunResult:
    rng = np.random.default_rng(budget.rng_seed)
    tr = Tracker(ctx, budget=budget.max_evaluations)
    max_proposals = max_proposals or 20 * budget.max_evaluations
    for _ in range(max_proposals):
        if tr.exhausted:
            break
        z = rng.random(box.dim)
        tr.observe_point(box.from_unit(z))
    return tr.result("random")


def run_heuristic(ctx: GrayBoxContext,
                  estimate: Optional[HeuristicEstimate] = None) -> RunResult:
    """n^2 singleton/pair evaluations, then one evaluation of the scheduled
    curriculum.  Every request is charged, repeats included."""
    tr = Tracker(ctx, count_repeats=True)
    if estimate is None:
        estimate = estimate_up(ctx, evaluate=tr.score)
    point = estimate.up.flat()
    tr.observe(decode_up(estimate.up, ctx.L), point)
    # only the final curriculum is reported as this run's observation
    return tr.result("heuristic", estimate=estimate)


def run_exhaustive(ctx: GrayBoxContext, ceiling: int = DEFAULT_CEILING) -> RunResult:
    """Evaluate all of C; ``extra['ranking']`` lists (curriculum, regret) by
    ascending regret (stable on enumeration order)."""
    total = count_feasible(ctx.n, ctx.L)
    if total > ceiling:
        raise ValueError(f"|C| = {total} exceeds the exhaustive ceiling {ceiling}")
    tr = Tracker(ctx, budget=total)
    for c in enumerate_feasible(ctx.n, ctx.L):
        tr.observe(c)
    order = sorted(range(len(tr.observations)), key=lambda k: tr.observations[k].value)
    ranking: List[Tuple[Curriculum, float]] = [
        (tr.observations[k].curriculum, tr.observations[k].value) for k in order]
    return tr.result("exhaustive", ranking=ranking)


def rank_of(value: float, ranking) -> int:
    """1-based rank of a regret value against an exhaustive ranking."""
    return 1 + sum(1 for _, v in ranking if v < value)
