"""Tile-coded linear action values and Sarsa(lambda) with replacing traces.

Features only look at geometry relative to the agent: the offset to the
treasure (tiled together with the action) and the hazards around the cell the
action moves into, expressed in the action's own frame so that "stepping into
a fire" shares weights across directions.  Nothing depends on absolute
position or task identity, which is what lets a weight vector trained on one
grid be reused on another.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numba
import numpy as np

from .gridworld import (ACTIONS, MOVES, Action, GridState, TaskSpec,
                        transition_tables)

FREE, FIRE, PIT, WALL = 0, 1, 2, 3


@dataclass(frozen=True)
class TileCodingConfig:
    num_tilings: int = 8
    tiles_per_dim: int = 8
    hazard_radius: int = 2
    feature_table_size: int = 8192
    hashing_seed: int = 0
    hazard_tilings: int = 2
    offset_range: int = 12

    def __post_init__(self):
        if self.num_tilings < 1:
            raise ValueError("num_tilings must be >= 1")
        if self.feature_table_size < self.num_tilings:
            raise ValueError("feature_table_size must be >= num_tilings")
        if self.hazard_radius < 0:
            raise ValueError("hazard_radius must be >= 0")
        if self.tiles_per_dim < 1 or self.offset_range < 1:
            raise ValueError("tiles_per_dim and offset_range must be positive")
        if self.hazard_tilings < 0:
            raise ValueError("hazard_tilings must be >= 0")

    @property
    def K(self) -> int:
        return self.feature_table_size

    @property
    def n_hazard(self) -> int:
        return min(self.hazard_tilings, self.num_tilings - 1)

    @property
    def n_treasure(self) -> int:
        return self.num_tilings - self.n_hazard

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class LearnerConfig:
    step_size: Optional[float] = None  # None -> 0.1 / num_tilings
    trace_decay: float = 0.9
    epsilon: float = 0.1
    episodes: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if not 0.0 <= self.trace_decay <= 1.0:
            raise ValueError("trace_decay must lie in [0, 1]")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")

    def alpha(self, tiles: TileCodingConfig) -> float:
        if self.step_size is None:
            return 0.1 / tiles.num_tilings
        return self.step_size


@dataclass
class PolicyParams:
    weights: np.ndarray
    tiles_digest: str = ""

    @classmethod
    def zeros(cls, tiles: TileCodingConfig) -> "PolicyParams":
        return cls(np.zeros(tiles.K), tiles.digest())

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.weights.copy(), self.tiles_digest)

    @property
    def K(self) -> int:
        return len(self.weights)

    def save(self, path) -> None:
        header = {"K": self.K, "tiles": self.tiles_digest, "dtype": "<f8"}
        with open(path, "wb") as fh:
            fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
            fh.write(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, tiles: Optional[TileCodingConfig] = None) -> "PolicyParams":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline())
            weights = np.frombuffer(fh.read(), dtype="<f8").copy()
        if len(weights) != header["K"]:
            raise ValueError(f"expected {header['K']} weights, found {len(weights)}")
        if tiles is not None:
            if header["K"] != tiles.K or header["tiles"] != tiles.digest():
                raise ValueError("weights were trained with a different tile coding")
        return cls(weights, header["tiles"])


# ---------------------------------------------------------------------------
# features

def _cell_type(task: TaskSpec, cell) -> int:
    if not task.in_bounds(cell):
        return WALL
    if cell in task.fires:
        return FIRE
    if cell in task.pits:
        return PIT
    return FREE


def _hash(key: tuple, seed: int) -> int:
    h = hashlib.blake2b(repr(key).encode(), digest_size=8,
                        salt=seed.to_bytes(8, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def _local_pattern(task: TaskSpec, pos, a: Action, radius: int):
    """Hazard types around the target cell, in the action's frame."""
    fr, fc = MOVES[a]
    lr, lc = -fc, fr
    r, c = pos
    offsets = {
        "self": (0, 0),
        "fwd": (fr, fc),
        "fwd2": (2 * fr, 2 * fc),
        "fwd_left": (fr + lr, fc + lc),
        "fwd_right": (fr - lr, fc - lc),
    }
    out = {}
    for name, (dr, dc) in offsets.items():
        if abs(dr) + abs(dc) <= radius or name == "self":
            out[name] = _cell_type(task, (r + dr, c + dc))
    return out


def _raw_keys(cfg: TileCodingConfig, task: TaskSpec, pos, a: Action):
    keys = []
    dr = task.treasure[0] - pos[0]
    dc = task.treasure[1] - pos[1]
    R = cfg.offset_range
    dr = min(max(dr, -R), R)
    dc = min(max(dc, -R), R)
    width = 2.0 * R / cfg.tiles_per_dim
    nt = cfg.n_treasure
    for t in range(nt):
        off_r = width * t / nt
        off_c = width * ((3 * t) % nt) / nt
        tr = math.floor((dr + R + off_r) / width)
        tc = math.floor((dc + R + off_c) / width)
        keys.append(("treasure", t, tr, tc, int(a)))
    pattern = _local_pattern(task, pos, a, cfg.hazard_radius)
    for h in range(cfg.n_hazard):
        if h % 2 == 0:
            keys.append(("hazard", h, tuple(sorted(pattern.items()))))
        else:
            fwd = pattern.get("fwd", FREE)
            fire_near = any(pattern.get(k) == FIRE
                            for k in ("self", "fwd2", "fwd_left", "fwd_right"))
            keys.append(("hazard", h, fwd, fire_near))
    return keys


def featurize(cfg: TileCodingConfig, task: TaskSpec, s: GridState, a: Action) -> np.ndarray:
    """Active feature indices (one per tiling) for the pair ``(s, a)``."""
    block = cfg.K // cfg.num_tilings
    keys = _raw_keys(cfg, task, s.position, Action(a))
    return np.array([t * block + _hash(k, cfg.hashing_seed) % block
                     for t, k in enumerate(keys)], dtype=np.int64)


@lru_cache(maxsize=512)
def feature_table(cfg: TileCodingConfig, task: TaskSpec) -> np.ndarray:
    """Features for every (cell, action), shape (cells, 4, num_tilings)."""
    table = np.empty((task.n_cells, 4, cfg.num_tilings), dtype=np.int64)
    for r in range(task.height):
        for c in range(task.width):
            s = GridState((r, c))
            for a in ACTIONS:
                table[task.cell_index((r, c)), a] = featurize(cfg, task, s, a)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=512)
def _dynamics(task: TaskSpec):
    return transition_tables(task)


def q_hat(theta: PolicyParams, features) -> float:
    w = theta.weights
    total = 0.0
    for k in features:
        if k < 0 or k >= len(w):
            raise IndexError(f"feature index {k} outside [0, {len(w)})")
        total += w[k]
    return total


def select_action(theta: PolicyParams, task: TaskSpec, s: GridState, epsilon: float,
                  rng: np.random.Generator,
                  tiles: TileCodingConfig = TileCodingConfig()) -> Action:
    """Epsilon-greedy over q-hat; greedy ties go to the earliest action."""
    if rng.random() < epsilon:
        return Action(int(rng.integers(4)))
    values = [q_hat(theta, featurize(tiles, task, s, a)) for a in ACTIONS]
    return Action(int(np.argmax(values)))


# ---------------------------------------------------------------------------
# training kernel

@numba.njit(cache=True, nogil=True)
def _q(theta, feats, s, a):
    total = 0.0
    for k in range(feats.shape[2]):
        total += theta[feats[s, a, k]]
    return total


@numba.njit(cache=True, nogil=True)
def _choose(theta, feats, s, eps, u1, u2):
    if u1 < eps:
        a = int(u2 * 4.0)
        return a if a < 4 else 3
    best = 0
    best_q = _q(theta, feats, s, 0)
    for a in range(1, 4):
        q = _q(theta, feats, s, a)
        if q > best_q:
            best_q = q
            best = a
    return best


@numba.njit(cache=True, nogil=True)
def _sarsa_lambda(theta, feats, nxt, rew, term, start, max_steps, gamma,
                  alpha, lam, eps, draws):
    n_episodes = draws.shape[0]
    K = theta.shape[0]
    T = feats.shape[2]
    returns = np.zeros(n_episodes)
    trace = np.zeros(K)
    in_trace = np.zeros(K, dtype=np.bool_)
    active = np.empty(K, dtype=np.int64)
    for ep in range(n_episodes):
        n_active = 0
        s = start
        a = _choose(theta, feats, s, eps, draws[ep, 0, 0], draws[ep, 0, 1])
        G = 0.0
        disc = 1.0
        for t in range(max_steps):
            q = _q(theta, feats, s, a)
            for k in range(T):
                idx = feats[s, a, k]
                if not in_trace[idx]:
                    in_trace[idx] = True
                    active[n_active] = idx
                    n_active += 1
                trace[idx] = 1.0
            s2 = nxt[s, a]
            r = rew[s, a]
            G += disc * r
            disc *= gamma
            done = term[s, a]
            a2 = 0
            if done:
                target = r
            else:
                a2 = _choose(theta, feats, s2, eps, draws[ep, t + 1, 0], draws[ep, t + 1, 1])
                target = r + gamma * _q(theta, feats, s2, a2)
            delta = target - q
            step = alpha * delta
            for j in range(n_active):
                idx = active[j]
                theta[idx] += step * trace[idx]
            if done:
                break
            decay = gamma * lam
            for j in range(n_active):
                trace[active[j]] *= decay
            s = s2
            a = a2
        for j in range(n_active):
            idx = active[j]
            trace[idx] = 0.0
            in_trace[idx] = False
        returns[ep] = G
    return returns


def exploration_draws(seed: int, episodes: int, max_steps: int) -> np.ndarray:
    """Uniform draws consumed by training: two per action choice."""
    rng = np.random.default_rng(seed)
    return rng.random((episodes, max_steps + 1, 2))


def train(task: TaskSpec, theta0: PolicyParams, learner: LearnerConfig,
          tiles: TileCodingConfig) -> Tuple[PolicyParams, np.ndarray]:
    """Run ``learner.episodes`` episodes of Sarsa(lambda) from ``theta0``.

    Returns the final parameters and the discounted return of every episode.
    ``theta0`` is not modified.
    """
    if theta0.K != tiles.K:
        raise ValueError(f"parameter length {theta0.K} does not match K={tiles.K}")
    if theta0.tiles_digest and theta0.tiles_digest != tiles.digest():
        raise ValueError("parameters were trained with a different tile coding")
    theta = PolicyParams(np.array(theta0.weights, dtype=np.float64, copy=True), tiles.digest())
    if learner.episodes == 0:
        return theta, np.zeros(0)
    feats = feature_table(tiles, task)
    nxt, rew, term = _dynamics(task)
    draws = exploration_draws(learner.rng_seed, learner.episodes, task.max_steps)
    returns = _sarsa_lambda(theta.weights, feats, nxt, rew, term,
                            task.cell_index(task.start), task.max_steps, task.discount,
                            learner.alpha(tiles), learner.trace_decay, learner.epsilon,
                            draws)
    return theta, returns


def greedy_return(task: TaskSpec, theta: PolicyParams, tiles: TileCodingConfig) -> float:
    """Discounted return of one episode following the greedy policy."""
    feats = feature_table(tiles, task)
    nxt, rew, term = _dynamics(task)
    s = task.cell_index(task.start)
    G, disc = 0.0, 1.0
    for _ in range(task.max_steps):
        a = _choose(theta.weights, feats, s, 0.0, 1.0, 0.0)
        G += disc * rew[s, a]
        disc *= task.discount
        if term[s, a]:
            break
        s = nxt[s, a]
    return G
