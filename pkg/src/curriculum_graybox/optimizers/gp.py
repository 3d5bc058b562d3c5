"""Gaussian-process surrogate with expected improvement over the (u, p) box."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.stats import norm
from scipy.stats import qmc

from ..graybox import GrayBoxContext
from .tracker import OptBudget, RunResult, SearchBox, Tracker


class CovarianceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GPConfig:
    noise: float = 1e-6  # lower bound on noise variance, standardized units
    fit_restarts: int = 2
    acquisition_restarts: int = 5
    acquisition_samples: int = 2000
    initial_design: int = 10
    refine_evals: int = 200
    max_proposals_factor: int = 4
    lengthscale_bounds: tuple = (1e-2, 1e2)

    def __post_init__(self):
        if self.noise <= 0:
            raise ValueError("noise must be positive")
        if self.acquisition_restarts < 1 or self.fit_restarts < 1:
            raise ValueError("restarts must be >= 1")


def se_kernel(A, B, lengthscales, signal_var):
    A = np.asarray(A) / lengthscales
    B = np.asarray(B) / lengthscales
    sq = (np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T)
    return signal_var * np.exp(-0.5 * np.maximum(sq, 0.0))


class GaussianProcess:
    """Zero-mean GP with a squared-exponential ARD kernel."""

    def __init__(self, lengthscales, signal_var: float = 1.0, noise_var: float = 1e-6):
        self.lengthscales = np.asarray(lengthscales, dtype=float)
        self.signal_var = float(signal_var)
        self.noise_var = float(noise_var)
        self.jitter = 0.0

    def fit(self, X, y, max_jitter: float = 1e-2) -> "GaussianProcess":
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        K = se_kernel(self.X, self.X, self.lengthscales, self.signal_var)
        jitter = 0.0
        while True:
            try:
                self.L = linalg.cholesky(K + (self.noise_var + jitter) * np.eye(len(K)), lower=True)
                break
            except linalg.LinAlgError:
                jitter = 1e-10 if jitter == 0.0 else jitter * 10.0
                if jitter > max_jitter:
                    raise CovarianceError(f"covariance not positive definite up to jitter {max_jitter}")
        self.jitter = jitter
        self.alpha = linalg.cho_solve((self.L, True), self.y)
        return self

    def predict(self, Xs):
        Xs = np.atleast_2d(np.asarray(Xs, dtype=float))
        Ks = se_kernel(Xs, self.X, self.lengthscales, self.signal_var)
        mean = Ks @ self.alpha
        v = linalg.solve_triangular(self.L, Ks.T, lower=True)
        var = np.maximum(self.signal_var - np.sum(v * v, 0), 0.0)
        return mean, np.sqrt(var)


def neg_log_marginal(params, X, y, noise_floor):
    """Negative log marginal likelihood and its gradient in log-parameters
    ``[log l_1..log l_d, log signal_var, log noise_var]``."""
    d = X.shape[1]
    ls = np.exp(params[:d])
    sf2 = np.exp(params[d])
    sn2 = noise_floor + np.exp(params[d + 1])
    n = len(y)
    diff2 = (X[:, None, :] - X[None, :, :]) ** 2 / ls ** 2
    Kf = sf2 * np.exp(-0.5 * diff2.sum(-1))
    K = Kf + sn2 * np.eye(n)
    try:
        L = linalg.cholesky(K, lower=True)
    except linalg.LinAlgError:
        return 1e25, np.zeros_like(params)
    alpha = linalg.cho_solve((L, True), y)
    nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * n * np.log(2 * np.pi)
    W = np.outer(alpha, alpha) - linalg.cho_solve((L, True), np.eye(n))
    grad = np.empty_like(params)
    for k in range(d):
        grad[k] = -0.5 * np.sum(W * Kf * diff2[:, :, k])
    grad[d] = -0.5 * np.sum(W * Kf)
    grad[d + 1] = -0.5 * np.trace(W) * (sn2 - noise_floor)
    return nll, grad


def fit_hyperparameters(X, y, cfg: GPConfig, rng, start=None):
    d = X.shape[1]
    lo, hi = np.log(cfg.lengthscale_bounds[0]), np.log(cfg.lengthscale_bounds[1])
    bounds = [(lo, hi)] * d + [(np.log(1e-2), np.log(1e2)), (np.log(1e-10), np.log(1.0))]
    starts = []
    if start is not None:
        starts.append(np.asarray(start))
    while len(starts) < cfg.fit_restarts:
        starts.append(np.concatenate([np.log(rng.uniform(0.1, 2.0, d)) + np.log(np.sqrt(d)),
                                      [0.0, np.log(1e-3)]]))
    best = None
    for x0 in starts:
        x0 = np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds])
        res = optimize.minimize(neg_log_marginal, x0, args=(X, y, cfg.noise), jac=True,
                                method="L-BFGS-B", bounds=bounds, options={"maxiter": 100})
        if best is None or res.fun < best.fun:
            best = res
    return best.x


def expected_improvement(mean, std, best):
    """EI for minimization: E[max(best - Y, 0)] with Y ~ N(mean, std^2)."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    imp = best - mean
    out = np.maximum(imp, 0.0)
    pos = std > 0
    z = imp[pos] / std[pos]
    out[pos] = imp[pos] * norm.cdf(z) + std[pos] * norm.pdf(z)
    return np.maximum(out, 0.0)


def _propose(gp: GaussianProcess, best: float, dim: int, cfg: GPConfig, rng, anchors):
    """Maximize EI on the unit cube: random samples, then Nelder-Mead from the
    best few.  Returns ``(z, ei)``."""
    cand = rng.random((cfg.acquisition_samples, dim))
    if len(anchors):
        picks = anchors[rng.integers(len(anchors), size=cfg.acquisition_samples // 4)]
        local = np.clip(picks + 0.05 * rng.standard_normal(picks.shape), 0.0, 1.0)
        cand = np.vstack([cand, local])
    mean, std = gp.predict(cand)
    ei = expected_improvement(mean, std, best)
    order = np.argsort(-ei, kind="stable")[:cfg.acquisition_restarts]

    def neg_ei(z):
        z = np.clip(z, 0.0, 1.0)
        m, s = gp.predict(z[None, :])
        return -expected_improvement(m, s, best)[0]

    best_z, best_ei = cand[order[0]], ei[order[0]]
    for k in order:
        res = optimize.minimize(neg_ei, cand[k], method="Nelder-Mead",
                                options={"maxfev": cfg.refine_evals, "xatol": 1e-4, "fatol": 1e-12})
        z = np.clip(res.x, 0.0, 1.0)
        val = -neg_ei(z)
        if val > best_ei:
            best_z, best_ei = z, val
    return best_z, best_ei


def run_gp(ctx: GrayBoxContext, box: SearchBox, cfg: GPConfig, budget: OptBudget) -> RunResult:
    if budget.max_evaluations <= cfg.initial_design:
        raise ValueError("budget must exceed the initial design size")
    rng = np.random.default_rng(budget.rng_seed)
    tr = Tracker(ctx, budget=budget.max_evaluations)
    design = qmc.LatinHypercube(d=box.dim, seed=rng).random(cfg.initial_design)
    Z = []
    for z in design:
        tr.observe_point(box.from_unit(z))
        Z.append(z)
    params = None
    fallbacks = 0
    max_proposals = cfg.max_proposals_factor * budget.max_evaluations
    while not tr.exhausted and len(tr.observations) < max_proposals:
        y = np.array([o.value for o in tr.observations])
        Zarr = np.array(Z)
        sd = y.std()
        if sd == 0.0:
            z = rng.random(box.dim)
            fallbacks += 1
        else:
            ys = (y - y.mean()) / sd
            params = fit_hyperparameters(Zarr, ys, cfg, rng, start=params)
            d = box.dim
            gp = GaussianProcess(np.exp(params[:d]), np.exp(params[d]),
                                 cfg.noise + np.exp(params[d + 1])).fit(Zarr, ys)
            anchors = Zarr[np.argsort(ys, kind="stable")[:5]]
            z, ei = _propose(gp, ys.min(), d, cfg, rng, anchors)
            if not ei > 0.0:
                z = rng.random(box.dim)
                fallbacks += 1
        tr.observe_point(box.from_unit(z))
        Z.append(np.clip(z, 0.0, 1.0))
    return tr.result("gp", random_fallbacks=fallbacks)
