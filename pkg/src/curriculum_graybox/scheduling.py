"""Exact solver for the utility/precedence-penalty scheduling ILP.

Decision variables for n tasks and at most L slots:

* ``delta[i]`` -- task i is in the curriculum,
* ``gamma[i, j]`` -- task i is in the curriculum and comes before task j
  (excluded tasks count as coming after every included one),
* ``x[i]`` -- slot of task i, ``L - 1`` for excluded tasks.

The objective is ``sum_i u_i delta_i - sum_{i != j} p_ij gamma_ij``.  Penalty
matrices are stored dense ``n x n`` with the diagonal ignored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from .curriculum import Curriculum, InfeasibleCurriculum, check_curriculum

MAX_EXACT_N = 20
MAX_BRUTE_N = 8


class UnsupportedSize(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UtilityPenalty:
    u: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float)
        n = len(u)
        if p.shape != (n, n):
            raise ValueError(f"p must be {n}x{n}, got {p.shape}")
        np.fill_diagonal(p, 0.0)
        if np.any(u < 0) or np.any(p < 0):
            raise ValueError("utilities and penalties must be non-negative")
        u.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return len(self.u)

    def flat(self) -> np.ndarray:
        """``u`` followed by the off-diagonal of ``p`` in row-major order."""
        return np.concatenate([self.u, offdiag(self.p)])

    @classmethod
    def from_flat(cls, vec, n: int) -> "UtilityPenalty":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:n], from_offdiag(vec[n:], n))

    def scaled(self, factor: float) -> "UtilityPenalty":
        return UtilityPenalty(self.u * factor, self.p * factor)


def offdiag(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    return m[~np.eye(n, dtype=bool)]


def from_offdiag(vec, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    m[~np.eye(n, dtype=bool)] = vec
    return m


@dataclass(frozen=True, eq=False)
class ScheduleSolution:
    x: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    objective: float

    @property
    def n(self) -> int:
        return len(self.x)


def objective(delta, gamma, up: UtilityPenalty) -> float:
    delta = np.asarray(delta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = up.n
    if delta.shape != (n,) or gamma.shape != (n, n):
        raise ValueError(f"shape mismatch: delta {delta.shape}, gamma {gamma.shape}, n={n}")
    g = gamma.copy()
    np.fill_diagonal(g, 0.0)
    return float(up.u @ delta - np.sum(up.p * g))


def solution_from_sequence(seq: Sequence[int], n: int, L: int,
                           up: Optional[UtilityPenalty] = None) -> ScheduleSolution:
    """Canonical (x, delta, gamma) for an ordered selection."""
    x = np.full(n, L - 1, dtype=np.int64)
    delta = np.zeros(n, dtype=np.int64)
    for pos, i in enumerate(seq):
        x[i] = pos
        delta[i] = 1
    gamma = np.zeros((n, n), dtype=np.int64)
    for i in seq:
        for j in range(n):
            if j != i and (not delta[j] or x[i] < x[j]):
                gamma[i, j] = 1
    obj = objective(delta, gamma, up) if up is not None else float("nan")
    return ScheduleSolution(x, delta, gamma, obj)


def check_feasible(sol: ScheduleSolution, L: int) -> Tuple[bool, Optional[str]]:
    """Check every constraint row; returns ``(ok, first violation or None)``."""
    x, d, g = np.asarray(sol.x), np.asarray(sol.delta), np.asarray(sol.gamma)
    n = len(x)
    if d.shape != (n,) or g.shape != (n, n):
        return False, "shape mismatch"
    for i in range(n):
        if x[i] != int(x[i]) or not 0 <= x[i] <= L - 1:
            return False, f"domain: x[{i}]={x[i]} not an integer in [0, {L - 1}]"
        if d[i] not in (0, 1):
            return False, f"domain: delta[{i}]={d[i]} not binary"
        for j in range(n):
            if i != j and g[i, j] not in (0, 1):
                return False, f"domain: gamma[{i},{j}]={g[i, j]} not binary"
    for i in range(n):
        if x[i] < (L - 1) * (1 - d[i]):
            return False, f"x[{i}] >= (L-1)(1-delta[{i}]) violated"
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if x[i] + d[j] > x[j] + L * g[j, i]:
                return False, (f"x[{i}] + delta[{j}] <= x[{j}] + L*gamma[{j},{i}] "
                               f"violated for i={i}, j={j}")
    for i in range(n):
        for j in range(i + 1, n):
            if g[i, j] + g[j, i] > 1:
                return False, f"gamma[{i},{j}] + gamma[{j},{i}] <= 1 violated"
    return True, None


def decode(sol: ScheduleSolution, L: Optional[int] = None) -> Curriculum:
    """Included tasks ordered by slot."""
    if L is None:
        L = int(np.max(sol.x)) + 1 if len(sol.x) else 1
    ok, why = check_feasible(sol, L)
    if not ok:
        raise InfeasibleCurriculum(f"cannot decode infeasible solution: {why}")
    included = [i for i in range(sol.n) if sol.delta[i] == 1]
    return tuple(sorted(included, key=lambda i: sol.x[i]))


def _better(value, seq, best_value, best_seq) -> bool:
    # fewest tasks first, then lexicographically smallest
    if best_seq is None or value > best_value:
        return True
    if value < best_value:
        return False
    return (len(seq), seq) < (len(best_seq), best_seq)


def solve(up: UtilityPenalty, L: int) -> ScheduleSolution:
    """Globally optimal schedule by dynamic programming over task subsets.

    ``f(S)`` is the best value of ordering the set ``S`` as a prefix; placing
    ``i`` last adds ``u_i - sum_{j in S - i} p_ji``.  A complete selection also
    pays ``p_ij`` for each included i and excluded j.
    """
    n = up.n
    if n > MAX_EXACT_N:
        raise UnsupportedSize(f"exact solver supports n <= {MAX_EXACT_N}, got {n}")
    if not 1 <= L <= max(n, 1):
        raise ValueError(f"need 1 <= L <= n, got L={L}, n={n}")
    u = up.u.tolist()
    p = up.p.tolist()
    best = {0: (0.0, ())}
    layer = [0]
    for size in range(1, L + 1):
        nxt = {}
        for mask in layer:
            base_value, base_seq = best[mask]
            for i in range(n):
                bit = 1 << i
                if mask & bit:
                    continue
                gain = u[i]
                for j in base_seq:
                    gain -= p[j][i]
                value = base_value + gain
                seq = base_seq + (i,)
                new = mask | bit
                cur = nxt.get(new)
                if cur is None or value > cur[0] or (value == cur[0] and seq < cur[1]):
                    nxt[new] = (value, seq)
        best.update(nxt)
        layer = list(nxt)
    chosen_value, chosen_seq = None, None
    for mask, (value, seq) in best.items():
        out = [j for j in range(n) if not mask >> j & 1]
        total = value
        for i in seq:
            for j in out:
                total -= p[i][j]
        if _better(total, seq, chosen_value, chosen_seq):
            chosen_value, chosen_seq = total, seq
    return solution_from_sequence(chosen_seq, n, L, up)


@lru_cache(maxsize=64)
def _sequence_patterns(n: int, L: int):
    from .curriculum import enumerate_feasible
    seqs = list(enumerate_feasible(n, L))
    D = np.zeros((len(seqs), n))
    G = np.zeros((len(seqs), n * n))
    for k, seq in enumerate(seqs):
        sol = solution_from_sequence(seq, n, L)
        D[k] = sol.delta
        g = sol.gamma.astype(float)
        np.fill_diagonal(g, 0.0)
        G[k] = g.ravel()
    return seqs, D, G


def brute_force_solve(up: UtilityPenalty, L: int) -> ScheduleSolution:
    """Score every feasible curriculum and keep the best (TieBreak order)."""
    n = up.n
    if n > MAX_BRUTE_N:
        raise UnsupportedSize(f"brute force supports n <= {MAX_BRUTE_N}, got {n}")
    seqs, D, G = _sequence_patterns(n, L)
    values = D @ up.u - G @ up.p.ravel()
    # seqs are ordered by length then lexicographically, so argmax is the TieBreak winner
    k = int(np.argmax(values))
    return solution_from_sequence(seqs[k], n, L, up)


def encode_curriculum(c: Sequence[int], n: int, L: int) -> UtilityPenalty:
    """Parameters whose unique optimal schedule (under TieBreak) is ``c``."""
    c = check_curriculum(c, n, L)
    pos = {t: k for k, t in enumerate(c)}
    u = np.zeros(n)
    p = np.zeros((n, n))
    for i in range(n):
        if i in pos:
            u[i] = n + 1
            for j in c:
                if j != i and pos[i] > pos[j]:
                    p[i, j] = 1.0
        else:
            p[i, :] = 1.0
    return UtilityPenalty(u, p)


# ---------------------------------------------------------------------------
# instance / solution files

def dump_instance(up: UtilityPenalty, L: int) -> str:
    return json.dumps({"n": up.n, "L": L, "u": up.u.tolist(),
                       "p": offdiag(up.p).tolist()}, indent=1) + "\n"


def load_instance(text: str) -> Tuple[UtilityPenalty, int]:
    doc = json.loads(text)
    n = int(doc["n"])
    if len(doc["u"]) != n or len(doc["p"]) != n * (n - 1):
        raise ValueError("instance vector lengths do not match n")
    return UtilityPenalty(doc["u"], from_offdiag(doc["p"], n)), int(doc["L"])


def dump_solution(sol: ScheduleSolution) -> str:
    return json.dumps({"x": sol.x.tolist(), "delta": sol.delta.tolist(),
                       "gamma": offdiag(sol.gamma).tolist(),
                       "objective": sol.objective}, indent=1) + "\n"


def load_solution(text: str) -> ScheduleSolution:
    doc = json.loads(text)
    n = len(doc["x"])
    gamma = from_offdiag(doc["gamma"], n).astype(np.int64)
    return ScheduleSolution(np.array(doc["x"], dtype=np.int64),
                            np.array(doc["delta"], dtype=np.int64), gamma,
                            float(doc["objective"]))
