"""Experiment configuration, algorithm dispatch, run traces and the
results table."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .curriculum import (EvalCache, Normalizer, RegretConfig, TaskLibrary,
                         evaluate_curriculum, check_curriculum)
from .graybox import GrayBoxContext, HeuristicEstimate, estimate_up
from .gridworld import dump_grid, read_grid_file
from .learner import LearnerConfig, TileCodingConfig
from .optimizers import (GPConfig, OptBudget, RunResult, SearchBox, TPEConfig, rank_of,
                         run_c0, run_exhaustive, run_gp, run_greedy, run_heuristic,
                         run_random, run_tpe)
from .tasks import generate_library

SCHEMA_VERSION = 1
ALGORITHMS = ("c0", "greedy", "gp", "heuristic", "tpe", "random", "exhaustive")
# fixed sub-stream ids so that adding an algorithm never shifts another's seed
_STREAM = {name: k for k, name in enumerate(ALGORITHMS)}


class ConfigError(ValueError):
    """User-facing configuration problem (exit status 2)."""


@dataclass
class ExperimentConfig:
    task_files: List[str]
    final_task_file: str
    L: int
    episodes: int = 100
    repetitions: int = 1
    threshold: float = 1.0
    normalizer: Optional[List[float]] = None  # [offset, scale]; None -> task bounds
    learner: dict = field(default_factory=dict)
    tiles: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    gp: dict = field(default_factory=dict)
    tpe: dict = field(default_factory=dict)
    box: List[float] = field(default_factory=lambda: [1000.0, 100.0])
    base_seed: int = 0
    output_dir: str = "runs"
    exhaustive_ceiling: int = 20000
    max_steps: int = 50
    discount: float = 0.99
    schema_version: int = SCHEMA_VERSION
    base_dir: str = "."

    def path(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    @property
    def out(self) -> Path:
        return self.path(self.output_dir)

    def library(self) -> TaskLibrary:
        tasks = []
        for i, f in enumerate(self.task_files):
            tasks.append(_read_task(self.path(f), i, self.max_steps, self.discount))
        final = _read_task(self.path(self.final_task_file), len(tasks), self.max_steps,
                           self.discount)
        try:
            return TaskLibrary(tuple(tasks), final, self.L)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def regret_config(self) -> RegretConfig:
        try:
            return RegretConfig(
                threshold=self.threshold, episodes_final=self.episodes,
                repetitions=self.repetitions, base_seed=self.base_seed,
                normalizer=Normalizer(*self.normalizer) if self.normalizer else None,
                learner=LearnerConfig(**self.learner), tiles=TileCodingConfig(**self.tiles))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad learner/regret settings: {exc}") from exc

    def budget(self, algo: str, override: Optional[int] = None) -> OptBudget:
        value = override if override is not None else self.budgets.get(algo, 300)
        if value <= 0:
            raise ConfigError(f"budget must be positive, got {value}")
        return OptBudget(int(value), algorithm_seed(self.base_seed, algo))

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("base_dir")
        return json.dumps(d, indent=1, sort_keys=True) + "\n"


def _read_task(path: Path, task_id: int, max_steps: int, discount: float):
    if not path.exists():
        raise ConfigError(f"task map not found: {path}")
    try:
        return read_grid_file(path, task_id, max_steps=max_steps, discount=discount)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def algorithm_seed(base_seed: int, algo: str) -> int:
    ss = np.random.SeedSequence([base_seed, 7919, _STREAM.get(algo, len(_STREAM))])
    return int(ss.generate_state(1)[0])


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {doc.get('schema_version')!r}")
    known = set(ExperimentConfig.__dataclass_fields__) - {"base_dir"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = ExperimentConfig(**doc, base_dir=str(path.parent))
    except TypeError as exc:
        raise ConfigError(f"config is missing fields: {exc}") from exc
    if not cfg.task_files:
        raise ConfigError("need at least one source task")
    return cfg


def write_generated_experiment(out_dir, seed: int, n: int = 5, L: int = 3, episodes: int = 100,
                               repetitions: int = 3, **overrides) -> Path:
    """Write maps for a generated task set plus a config that points at them."""
    out_dir = Path(out_dir)
    (out_dir / "maps").mkdir(parents=True, exist_ok=True)
    lib = generate_library(seed, n=n, L=L)
    names = []
    for t in lib.tasks:
        name = f"maps/task{t.id}.txt"
        (out_dir / name).write_text(dump_grid(t), encoding="utf-8")
        names.append(name)
    (out_dir / "maps/final.txt").write_text(dump_grid(lib.final_task), encoding="utf-8")
    cfg = ExperimentConfig(task_files=names, final_task_file="maps/final.txt", L=L,
                           episodes=episodes, repetitions=repetitions, base_seed=seed,
                           output_dir="runs", **overrides)
    path = out_dir / "config.json"
    path.write_text(cfg.to_json(), encoding="utf-8")
    return path


class Experiment:
    """A configured task library with its persistent evaluation cache."""

    def __init__(self, cfg: ExperimentConfig, persist: bool = True):
        self.cfg = cfg
        self.library = cfg.library()
        self.regret_cfg = cfg.regret_config()
        cache_path = None
        if persist:
            cfg.out.mkdir(parents=True, exist_ok=True)
            cache_path = cfg.out / "cache.jsonl"
        self.cache = EvalCache(cache_path)

    def context(self) -> GrayBoxContext:
        return GrayBoxContext(self.library, self.regret_cfg, self.cache)

    def evaluate(self, curriculum: Sequence[int]):
        c = check_curriculum(curriculum, self.library.n, self.library.max_length)
        return evaluate_curriculum(self.library, c, self.regret_cfg, self.cache)

    def estimate(self, ctx: Optional[GrayBoxContext] = None,
                 persist: bool = True) -> HeuristicEstimate:
        """Heuristic (u, p), reloaded from the output directory when present."""
        path = self.cfg.out / "estimate.json"
        if persist and path.exists():
            return HeuristicEstimate.from_json(path.read_text(encoding="utf-8"))
        est = estimate_up(ctx or self.context())
        if persist:
            path.write_text(est.to_json(), encoding="utf-8")
        return est

    def run(self, algo: str, budget: Optional[int] = None, persist: bool = True) -> RunResult:
        if algo not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")
        cfg = self.cfg
        ctx = self.context()
        n = self.library.n
        box = SearchBox.default(n, *cfg.box)
        if algo == "c0":
            result = run_c0(ctx)
        elif algo == "greedy":
            result = run_greedy(ctx, cfg.budget(algo, budget))
        elif algo == "random":
            result = run_random(ctx, box, cfg.budget(algo, budget))
        elif algo == "gp":
            result = run_gp(ctx, box, GPConfig(**cfg.gp), cfg.budget(algo, budget))
        elif algo == "heuristic":
            result = run_heuristic(ctx)
            if persist:
                est = result.extra["estimate"]
                (cfg.out / "estimate.json").write_text(est.to_json(), encoding="utf-8")
        elif algo == "tpe":
            est = self.estimate(persist=persist)
            result = run_tpe(ctx, TPEConfig(**cfg.tpe), cfg.budget(algo, budget), est)
        else:
            result = run_exhaustive(ctx, cfg.exhaustive_ceiling)
        if persist:
            result.write_trace(cfg.out / f"{algo}.trace.jsonl")
            summary = {"algorithm": algo, "curriculum": list(result.best.curriculum),
                       "regret": result.best.value, "evaluations": result.evaluations,
                       "proposals": len(result.observations)}
            (cfg.out / f"{algo}.result.json").write_text(json.dumps(summary, sort_keys=True) + "\n",
                                                         encoding="utf-8")
        return result


# ---------------------------------------------------------------------------
# report

def read_trace(path) -> List[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def build_report(trace_dir) -> dict:
    trace_dir = Path(trace_dir)
    traces = {}
    for algo in ALGORITHMS:
        p = trace_dir / f"{algo}.trace.jsonl"
        if p.exists():
            traces[algo] = read_trace(p)
    ranking = None
    if "exhaustive" in traces:
        ranking = sorted(r["regret"] for r in traces["exhaustive"])
    rows = []
    for algo in ALGORITHMS:
        if algo not in traces or algo == "exhaustive" or not traces[algo]:
            continue
        best = min(traces[algo], key=lambda r: (r["regret"], r["index"]))
        rank = None if ranking is None else 1 + sum(1 for v in ranking if v < best["regret"])
        rows.append({"algorithm": algo, "regret": best["regret"],
                     "curriculum": best["curriculum"], "rank": rank})
    report = {"rows": rows, "warnings": []}
    if ranking is not None:
        report["size"] = len(ranking)
        report["best_regret"] = ranking[0]
    else:
        report["warnings"].append("no exhaustive trace: ranks unavailable")
    return report


def format_report(report: dict) -> str:
    lines = [f"{'algorithm':<12}{'regret':>14}{'rank':>8}  curriculum"]
    for r in report["rows"]:
        rank = "n/a" if r["rank"] is None else str(r["rank"])
        lines.append(f"{r['algorithm']:<12}{r['regret']:>14.6f}{rank:>8}  {tuple(r['curriculum'])}")
    if "size" in report:
        lines.append(f"best regret over C: {report['best_regret']:.6f}   |C| = {report['size']}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# desk-scale benchmark

def desk_benchmark(seed: int, n: int = 5, L: int = 3, episodes: int = 100,
                   repetitions: int = 3, budget: int = 50,
                   algorithms: Sequence[str] = ("c0", "heuristic", "gp", "tpe"),
                   learner: Optional[LearnerConfig] = None, gp: Optional[GPConfig] = None,
                   tpe: Optional[TPEConfig] = None) -> dict:
    """Exhaustive ground truth plus the listed algorithms on a generated task set.

    Returns ``{"size": |C|, "best": P*, algo: {"curriculum", "regret", "rank",
    "evaluations"}}``.  Nothing is written to disk.
    """
    lib = generate_library(seed, n=n, L=L)
    rc = RegretConfig(episodes_final=episodes, repetitions=repetitions, base_seed=seed,
                      learner=learner or LearnerConfig())
    ctx = GrayBoxContext(lib, rc, EvalCache())
    ex = run_exhaustive(ctx)
    ranking = ex.extra["ranking"]
    out = {"size": len(ranking), "best": ranking[0][1],
           "exhaustive": {"evaluations": ex.evaluations}}
    estimate = None
    box = SearchBox.default(n)
    for algo in algorithms:
        b = OptBudget(budget, algorithm_seed(seed, algo))
        if algo == "c0":
            res = run_c0(ctx)
        elif algo == "heuristic":
            res = run_heuristic(ctx)
            estimate = res.extra["estimate"]
        elif algo == "tpe":
            res = run_tpe(ctx, tpe or TPEConfig(), b, estimate)
        elif algo == "gp":
            res = run_gp(ctx, box, gp or GPConfig(), b)
        elif algo == "greedy":
            res = run_greedy(ctx, b)
        elif algo == "random":
            res = run_random(ctx, box, b)
        else:
            raise ValueError(f"unknown algorithm {algo!r}")
        out[algo] = {"curriculum": res.best.curriculum, "regret": res.best.value,
                     "rank": rank_of(res.best.value, ranking), "evaluations": res.evaluations}
    return out
