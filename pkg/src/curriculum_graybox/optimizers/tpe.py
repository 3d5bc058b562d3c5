"""Tree-structured Parzen estimator used as a local search around the
heuristic (u, p).  Every dimension of the search space is continuous and
independent, so the "tree" is flat: one truncated Parzen mixture per
dimension."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import log_ndtr
from scipy.stats import truncnorm

from ..graybox import GrayBoxContext, HeuristicEstimate, estimate_up
from .tracker import OptBudget, RunResult, Tracker


@dataclass(frozen=True)
class TPEConfig:
    quantile: float = 0.25
    candidates: int = 24
    prior_std_factor: float = 0.5
    min_bandwidth: float = 0.05  # fraction of the prior std
    startup: int = 5
    prior_weight: float = 1.0
    max_proposals_factor: int = 10

    def __post_init__(self):
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must lie in (0, 1)")
        if self.candidates < 1:
            raise ValueError("candidates must be >= 1")


class TruncatedParzen:
    """Per-dimension mixture of Gaussians truncated to ``[0, inf)``: one prior
    component plus one kernel per observation."""

    def __init__(self, points, prior_mu, prior_sigma, min_bandwidth, prior_weight=1.0):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.prior_mu = np.asarray(prior_mu, dtype=float)
        self.prior_sigma = np.asarray(prior_sigma, dtype=float)
        m = points.shape[0] if points.size else 0
        d = len(self.prior_mu)
        floor = min_bandwidth * self.prior_sigma
        if m > 0:
            spread = points.std(axis=0) if m > 1 else np.zeros(d)
            bw = spread * (m + 1) ** (-1.0 / 5.0)
            bw = np.clip(bw, floor, self.prior_sigma)
            mus = np.vstack([self.prior_mu, points])
            sigmas = np.vstack([self.prior_sigma, np.broadcast_to(bw, (m, d))])
        else:
            mus = self.prior_mu[None, :]
            sigmas = self.prior_sigma[None, :]
        self.mus = mus
        self.sigmas = sigmas
        w = np.ones(len(mus))
        w[0] = prior_weight
        self.weights = w / w.sum()

    def sample(self, rng, size):
        d = self.mus.shape[1]
        comp = rng.choice(len(self.weights), size=(size, d), p=self.weights)
        mu = np.take_along_axis(self.mus, comp, axis=0)
        sig = np.take_along_axis(self.sigmas, comp, axis=0)
        a = (0.0 - mu) / sig
        return truncnorm.rvs(a, np.inf, loc=mu, scale=sig, size=(size, d), random_state=rng)

    def logpdf(self, X):
        """Sum over dimensions of the log mixture density, shape (len(X),)."""
        X = np.atleast_2d(X)
        z = (X[:, None, :] - self.mus[None]) / self.sigmas[None]
        # log N(z) - log sigma - log P(component >= 0)
        log_comp = (-0.5 * z ** 2 - 0.5 * math.log(2 * math.pi) - np.log(self.sigmas)[None]
                    - log_ndtr(self.mus / self.sigmas)[None])
        log_mix = np.logaddexp.reduce(log_comp + np.log(self.weights)[None, :, None], axis=1)
        return log_mix.sum(axis=1)


def prior_from_estimate(estimate: HeuristicEstimate, cfg: TPEConfig):
    center = estimate.up.flat()
    n = len(estimate.u_bar)
    u, p = center[:n], center[n:]
    su = cfg.prior_std_factor * (u.mean() if u.mean() > 0 else 1.0)
    sp = cfg.prior_std_factor * (p.mean() if p.size and p.mean() > 0 else 1.0)
    sigma = np.concatenate([np.full(n, su), np.full(len(p), sp)])
    return center, sigma


def select_candidate(log_ratio, rng) -> int:
    """Index of the largest ratio, uniformly among exact ties."""
    top = np.flatnonzero(log_ratio == np.max(log_ratio))
    return int(top[rng.integers(len(top))]) if len(top) > 1 else int(top[0])


def run_tpe(ctx: GrayBoxContext, cfg: TPEConfig, budget: OptBudget,
            estimate: Optional[HeuristicEstimate] = None) -> RunResult:
    """The first evaluation is the prior center itself, so the result is never
    worse than the heuristic point."""
    if estimate is None:
        estimate = estimate_up(ctx)
    rng = np.random.default_rng(budget.rng_seed)
    center, sigma = prior_from_estimate(estimate, cfg)
    tr = Tracker(ctx, budget=budget.max_evaluations)
    X = [center]
    tr.observe_point(center)
    max_proposals = cfg.max_proposals_factor * budget.max_evaluations
    prior = TruncatedParzen(np.empty((0, len(center))), center, sigma, cfg.min_bandwidth)
    while not tr.exhausted and len(tr.observations) < max_proposals:
        if len(X) < cfg.startup:
            x = prior.sample(rng, 1)[0]
        else:
            y = np.array([o.value for o in tr.observations])
            order = np.argsort(y, kind="stable")
            n_good = max(1, int(math.ceil(cfg.quantile * len(y))))
            Xa = np.array(X)
            good = TruncatedParzen(Xa[order[:n_good]], center, sigma, cfg.min_bandwidth,
                                   cfg.prior_weight)
            bad = TruncatedParzen(Xa[order[n_good:]], center, sigma, cfg.min_bandwidth,
                                  cfg.prior_weight)
            cand = good.sample(rng, cfg.candidates)
            x = cand[select_candidate(good.logpdf(cand) - bad.logpdf(cand), rng)]
        X.append(x)
        tr.observe_point(x)
    return tr.result("tpe", center=center.tolist())
