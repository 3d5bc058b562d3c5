"""Chained training along a curriculum, regret/merit on the final task,
the feasible set of curricula, and an evaluation cache."""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .gridworld import TaskSpec, optimal_return, worst_return
from .learner import LearnerConfig, PolicyParams, TileCodingConfig, train

Curriculum = Tuple[int, ...]

WORKERS_ENV = "CURRICULUM_WORKERS"


class InfeasibleCurriculum(ValueError):
    pass


@dataclass(frozen=True)
class TaskLibrary:
    tasks: Tuple[TaskSpec, ...]
    final_task: TaskSpec
    max_length: int

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ValueError("task ids must be unique")
        if not 1 <= self.max_length <= len(self.tasks):
            raise ValueError(f"need 1 <= L <= n, got L={self.max_length}, n={len(self.tasks)}")

    @property
    def n(self) -> int:
        return len(self.tasks)

    def digest(self) -> str:
        parts = [t.digest() for t in self.tasks] + [self.final_task.digest(), str(self.max_length)]
        parts += [f"{t.max_steps}:{t.discount!r}" for t in (*self.tasks, self.final_task)]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()[:16]


def check_curriculum(c: Sequence[int], n: int, L: int) -> Curriculum:
    """Validate ``c`` against the feasible set for (n, L) and return it as a tuple."""
    c = tuple(int(i) for i in c)
    if len(c) > L:
        raise InfeasibleCurriculum(f"length {len(c)} exceeds L={L}")
    if len(set(c)) != len(c):
        raise InfeasibleCurriculum(f"repeated task in {c}")
    for i in c:
        if not 0 <= i < n:
            raise InfeasibleCurriculum(f"task index {i} outside [0, {n})")
    return c


@dataclass(frozen=True)
class Normalizer:
    """Affine map ``(ret - offset) / scale`` applied to episode returns."""
    offset: float = 0.0
    scale: float = 1.0

    def __call__(self, returns):
        return (np.asarray(returns, dtype=float) - self.offset) / self.scale

    @classmethod
    def for_task(cls, task: TaskSpec) -> "Normalizer":
        lo, hi = worst_return(task), optimal_return(task)
        if hi <= lo:
            return cls(lo, 1.0)
        return cls(lo, hi - lo)


@dataclass(frozen=True)
class RegretConfig:
    threshold: float = 1.0
    episodes_final: int = 100
    episodes_source: Optional[int] = None  # None -> episodes_final
    repetitions: int = 1
    base_seed: int = 0
    normalizer: Optional[Normalizer] = None  # None -> Normalizer.for_task(final task)
    learner: LearnerConfig = LearnerConfig()
    tiles: TileCodingConfig = TileCodingConfig()

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.episodes_final < 1:
            raise ValueError("episodes_final must be >= 1")
        if self.episodes_source is not None and self.episodes_source < 1:
            raise ValueError("episodes_source must be >= 1")

    @property
    def source_episodes(self) -> int:
        return self.episodes_final if self.episodes_source is None else self.episodes_source

    def resolved(self, lib: TaskLibrary) -> "RegretConfig":
        if self.normalizer is not None:
            return self
        return replace(self, normalizer=Normalizer.for_task(lib.final_task))

    def digest(self, lib: TaskLibrary) -> str:
        cfg = self.resolved(lib)
        blob = {
            "lib": lib.digest(),
            "g": cfg.threshold,
            "nf": cfg.episodes_final,
            "ns": cfg.source_episodes,
            "R": cfg.repetitions,
            "seed": cfg.base_seed,
            "norm": [cfg.normalizer.offset, cfg.normalizer.scale],
            "learner": {k: v for k, v in asdict(cfg.learner).items()
                        if k not in ("episodes", "rng_seed")},
            "tiles": cfg.tiles.digest(),
        }
        return hashlib.sha256(json.dumps(blob, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class EvalResult:
    curriculum: Curriculum
    regret: float
    merit: float
    returns: np.ndarray  # raw discounted returns, repetitions x episodes_final
    normalizer: Normalizer
    threshold: float
    seeds: Tuple[int, ...]

    @property
    def per_episode_returns(self) -> np.ndarray:
        return self.normalizer(self.returns)

    def same_as(self, other: "EvalResult") -> bool:
        return (self.curriculum == other.curriculum
                and self.regret == other.regret
                and self.merit == other.merit
                and self.seeds == other.seeds
                and np.array_equal(self.returns, other.returns))

    def to_record(self, digest: str) -> dict:
        return {
            "curriculum": list(self.curriculum),
            "digest": digest,
            "regret": self.regret,
            "merit": self.merit,
            "seeds": list(self.seeds),
            "threshold": self.threshold,
            "normalizer": [self.normalizer.offset, self.normalizer.scale],
            "returns": self.returns.tolist(),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EvalResult":
        return cls(tuple(rec["curriculum"]), rec["regret"], rec["merit"],
                   np.array(rec["returns"], dtype=float), Normalizer(*rec["normalizer"]),
                   rec["threshold"], tuple(rec["seeds"]))


class EvalCache:
    """Thread-safe map ``(curriculum, config digest) -> EvalResult``.

    With ``path`` set, every insertion is appended to a JSON-lines file and the
    file is replayed on construction; a truncated last line is ignored.
    """

    def __init__(self, path=None):
        self._data: Dict[Tuple[Curriculum, str], EvalResult] = {}
        self._lock = threading.Lock()
        self.path = path
        self.hits = 0
        self.misses = 0
        self._fresh_line = True
        if path is not None and os.path.exists(path):
            self._replay(path)

    def _replay(self, path):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                self._fresh_line = line.endswith("\n")
                try:
                    rec = json.loads(line)
                    res = EvalResult.from_record(rec)
                except (ValueError, KeyError, TypeError):
                    continue
                self._data[(res.curriculum, rec["digest"])] = res

    def __len__(self):
        return len(self._data)

    def __contains__(self, key):
        return key in self._data

    def get(self, key) -> Optional[EvalResult]:
        res = self._data.get(key)
        if res is None:
            self.misses += 1
        else:
            self.hits += 1
        return res

    def put(self, key, result: EvalResult) -> None:
        with self._lock:
            self._data[key] = result
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    if not self._fresh_line:
                        # close off a torn record left by an interrupted writer
                        fh.write("\n")
                        self._fresh_line = True
                    fh.write(json.dumps(result.to_record(key[1])) + "\n")


def _stage_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def stage_seeds(rep_seed: int, c: Curriculum) -> Tuple[List[int], int]:
    """Learner seeds for the source stages of ``c`` and for the final stage.

    The final-stage seed depends only on the repetition, so all curricula are
    compared on the same exploration stream for the final task.
    """
    src = [_stage_seed(rep_seed, 0, k, i) for k, i in enumerate(c)]
    return src, _stage_seed(rep_seed, 1)


def train_along(lib: TaskLibrary, c: Curriculum, cfg: RegretConfig, rep_seed: int):
    """Train through the curriculum then the final task; returns final θ and
    the final-task episode returns."""
    theta = PolicyParams.zeros(cfg.tiles)
    src, fin = stage_seeds(rep_seed, c)
    for i, seed in zip(c, src):
        learner = replace(cfg.learner, episodes=cfg.source_episodes, rng_seed=seed)
        theta, _ = train(lib.tasks[i], theta, learner, cfg.tiles)
    learner = replace(cfg.learner, episodes=cfg.episodes_final, rng_seed=fin)
    return train(lib.final_task, theta, learner, cfg.tiles)


def _compute(lib: TaskLibrary, c: Curriculum, cfg: RegretConfig) -> EvalResult:
    seeds = tuple(cfg.base_seed + r for r in range(cfg.repetitions))
    rows = [train_along(lib, c, cfg, s)[1] for s in seeds]
    returns = np.vstack(rows)
    psi = cfg.normalizer(returns)
    g = cfg.threshold
    regret = float(np.mean(np.sum(g - psi, axis=1)))
    merit = float(np.mean(np.sum(psi, axis=1)))
    return EvalResult(c, regret, merit, returns, cfg.normalizer, g, seeds)


def evaluate_curriculum(lib: TaskLibrary, c: Sequence[int], cfg: RegretConfig,
                        cache: Optional[EvalCache] = None) -> EvalResult:
    c = check_curriculum(c, lib.n, lib.max_length)
    cfg = cfg.resolved(lib)
    if cache is None:
        return _compute(lib, c, cfg)
    key = (c, cfg.digest(lib))
    hit = cache.get(key)
    if hit is not None:
        return hit
    res = _compute(lib, c, cfg)
    cache.put(key, res)
    return res


def evaluate_many(lib: TaskLibrary, curricula: Iterable[Sequence[int]], cfg: RegretConfig,
                  cache: Optional[EvalCache] = None,
                  workers: Optional[int] = None) -> List[EvalResult]:
    """Evaluate several curricula, optionally on a thread pool; result order
    follows the input."""
    curricula = list(curricula)
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers <= 1 or len(curricula) < 2:
        return [evaluate_curriculum(lib, c, cfg, cache) for c in curricula]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: evaluate_curriculum(lib, c, cfg, cache), curricula))


def merit(result: EvalResult, cfg: Optional[RegretConfig] = None) -> float:
    """Mean over repetitions of the summed normalized final-task returns."""
    psi = result.per_episode_returns
    return float(np.mean(np.sum(psi, axis=1)))


def count_feasible(n: int, L: int) -> int:
    return sum(math.perm(n, k) for k in range(L + 1))


def enumerate_feasible(n: int, L: int) -> Iterator[Curriculum]:
    """All repetition-free sequences of length 0..L over range(n), shortest
    first, lexicographic within a length."""
    if not 1 <= L <= n:
        raise ValueError(f"need 1 <= L <= n, got n={n}, L={L}")
    for k in range(L + 1):
        yield from itertools.permutations(range(n), k)


def rank_curriculum(target: Sequence[int], all_results: Sequence[EvalResult]) -> int:
    """1-based rank of ``target`` by ascending regret; ties share the best rank."""
    target = tuple(target)
    mine = [r for r in all_results if r.curriculum == target]
    if not mine:
        raise KeyError(f"curriculum {target} not among results")
    value = mine[0].regret
    return 1 + sum(1 for r in all_results if r.regret < value)
