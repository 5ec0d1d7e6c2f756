"""Bayesian optimization over angles with a GP surrogate on the torus.

Angles are embedded as ``(cos t, sin t)`` pairs and a Matern 5/2 kernel is
applied to the Euclidean distance between embeddings, so the surrogate is
periodic in every coordinate. Candidates are chosen by Expected Improvement
(minimization convention); batches are built greedily with a multiplicative
local penalty around points already in the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.special import ndtr

from .ansatz import TWO_PI, principal

SQRT5 = np.sqrt(5.0)
JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class NumericalFailure(np.linalg.LinAlgError):
    """Kernel matrix not positive definite even after jitter escalation."""


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float = 1.0
    length_scale: float = 1.0
    noise_variance: float = 1e-4

    def __post_init__(self):
        if min(self.signal_variance, self.length_scale, self.noise_variance) <= 0:
            raise ValueError(f"kernel hyperparameters must be positive: {self}")

    def as_log(self) -> np.ndarray:
        return np.log([self.length_scale, self.signal_variance, self.noise_variance])

    @classmethod
    def from_log(cls, v) -> "KernelParams":
        ls, sv, nv = np.exp(v)
        return cls(signal_variance=float(sv), length_scale=float(ls), noise_variance=float(nv))


@dataclass(frozen=True)
class HyperBounds:
    length_scale: tuple = (0.05, 10.0)
    signal_variance: tuple = (1e-3, 1e3)
    noise_variance: tuple = (1e-6, 1.0)

    def log_bounds(self):
        return [tuple(np.log(b)) for b in (self.length_scale, self.signal_variance, self.noise_variance)]


@dataclass(frozen=True)
class AcquisitionConfig:
    batch_size: int = 5
    random_starts: int = 32
    incumbent_starts: int = 32
    refine_starts: int = 4
    initial_step: float = 0.5
    min_step: float = 1e-3
    max_sweeps: int = 60
    penalty_scale: float = 0.5

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def torus_embed(params) -> np.ndarray:
    """Map ``(..., d)`` angles to ``(..., 2d)`` as interleaved cos/sin pairs."""
    t = np.asarray(params, dtype=float)
    out = np.empty(t.shape[:-1] + (2 * t.shape[-1],))
    out[..., 0::2] = np.cos(t)
    out[..., 1::2] = np.sin(t)
    return out


def _sqdist(a, b):
    d = (a * a).sum(-1)[:, None] + (b * b).sum(-1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def matern52(r, signal_variance, length_scale):
    a = SQRT5 * np.asarray(r) / length_scale
    return signal_variance * (1.0 + a + a * a / 3.0) * np.exp(-a)


def _cholesky(K):
    scale = np.mean(np.diag(K))
    for jitter in JITTERS:
        try:
            return np.linalg.cholesky(K + jitter * scale * np.eye(len(K)))
        except np.linalg.LinAlgError:
            continue
    raise NumericalFailure("kernel matrix is not positive definite after jitter escalation")


@dataclass
class SurrogateState:
    """Fitted GP posterior. ``X`` holds raw angles, ``y`` the observed costs."""

    X: np.ndarray
    y: np.ndarray
    kernel: KernelParams
    mean: float = 0.0
    Z: np.ndarray = field(init=False, repr=False)
    L: np.ndarray = field(init=False, repr=False)
    alpha: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float)
        self.Z = torus_embed(self.X)
        K = self.kernel_matrix(self.Z, self.Z)
        K[np.diag_indices_from(K)] += self.kernel.noise_variance
        self.L = _cholesky(K)
        self.alpha = cho_solve((self.L, True), self.y - self.mean)

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    @property
    def embedded_dimension(self) -> int:
        return self.Z.shape[1]

    def kernel_matrix(self, A, B):
        r = np.sqrt(_sqdist(A, B))
        return matern52(r, self.kernel.signal_variance, self.kernel.length_scale)

    def predict(self, X, return_std: bool = True):
        """Posterior mean and standard deviation of the latent cost at ``X``."""
        Zs = torus_embed(np.atleast_2d(X))
        Ks = self.kernel_matrix(Zs, self.Z)
        mu = self.mean + Ks @ self.alpha
        if not return_std:
            return mu
        v = solve_triangular(self.L, Ks.T, lower=True, check_finite=False)
        var = self.kernel.signal_variance - (v * v).sum(0)
        return mu, np.sqrt(np.maximum(var, 0.0))

    def log_marginal_likelihood(self) -> float:
        r = self.y - self.mean
        return float(-0.5 * r @ self.alpha - np.log(np.diag(self.L)).sum()
                     - 0.5 * len(r) * np.log(2 * np.pi))


def _neg_lml_and_grad(logp, Z, r, sq):
    ls, sv, nv = np.exp(logp)
    dist = np.sqrt(sq)
    a = SQRT5 * dist / ls
    e = np.exp(-a)
    Kf = sv * (1.0 + a + a * a / 3.0) * e
    K = Kf.copy()
    K[np.diag_indices_from(K)] += nv
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros(3)
    alpha = cho_solve((L, True), r)
    nll = 0.5 * r @ alpha + np.log(np.diag(L)).sum() + 0.5 * len(r) * np.log(2 * np.pi)
    Kinv = cho_solve((L, True), np.eye(len(r)))
    W = np.outer(alpha, alpha) - Kinv
    dK_dls = sv * (a * a / 3.0) * (1.0 + a) * e
    grad = -0.5 * np.array([
        np.sum(W * dK_dls),
        np.sum(W * Kf),
        nv * np.trace(W),
    ])
    return float(nll), grad


def fit_hyperparameters(X, y, bounds: HyperBounds = HyperBounds(), restarts: int = 8,
                        seed=0, init: KernelParams | None = None) -> KernelParams:
    """Maximize the log marginal likelihood over log-scaled hyperparameters."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    Z = torus_embed(X)
    sq = _sqdist(Z, Z)
    r = y - y.mean()
    lb = np.array(bounds.log_bounds())
    rng = np.random.default_rng(seed)
    starts = [rng.uniform(lb[:, 0], lb[:, 1]) for _ in range(restarts)]
    if init is not None:
        starts[0] = np.clip(init.as_log(), lb[:, 0], lb[:, 1])
    best_val, best_x = np.inf, None
    for x0 in starts:
        res = minimize(_neg_lml_and_grad, x0, args=(Z, r, sq), jac=True,
                       method="L-BFGS-B", bounds=lb)
        if res.fun < best_val:
            best_val, best_x = res.fun, res.x
    if best_x is None or not np.isfinite(best_val):
        raise NumericalFailure("hyperparameter fit failed on every restart")
    return KernelParams.from_log(best_x)


def gp_fit(X, y, kernel: KernelParams | None = None, bounds: HyperBounds = HyperBounds(),
           restarts: int = 8, seed=0, init: KernelParams | None = None) -> SurrogateState:
    """Fit a GP surrogate; hyperparameters are optimized unless ``kernel`` is given."""
    y = np.asarray(y, dtype=float)
    if y.size < 1:
        raise ValueError("need at least one observation")
    if kernel is None:
        kernel = fit_hyperparameters(X, y, bounds, restarts, seed, init)
    return SurrogateState(X, y, kernel, mean=float(y.mean()))


def ei_from_moments(mu, s, best):
    """Closed-form EI for minimization; reduces to ``max(0, best - mu)`` at ``s = 0``."""
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(s, dtype=float)
    gain = best - mu
    out = np.maximum(gain, 0.0)
    pos = s > 0
    z = np.divide(gain, s, out=np.zeros_like(gain), where=pos)
    val = gain * ndtr(z) + s * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    out = np.where(pos, np.maximum(val, 0.0), out)
    return out


def expected_improvement(surrogate: SurrogateState, candidates, best_cost: float):
    cand = np.asarray(candidates, dtype=float)
    single = cand.ndim == 1
    mu, s = surrogate.predict(np.atleast_2d(cand))
    ei = ei_from_moments(mu, s, best_cost)
    return float(ei[0]) if single else ei


def _penalty(Zc, chosen_Z, radius):
    if not chosen_Z:
        return np.ones(len(Zc))
    sq = _sqdist(Zc, np.array(chosen_Z))
    return np.prod(1.0 - np.exp(-0.5 * sq / radius ** 2), axis=1)


def _maximize(score, starts, cfg: AcquisitionConfig):
    """Coordinate pattern search on the torus from the best few starts.

    The refined starts move independently; their neighbourhoods are scored in
    one stacked call per sweep.
    """
    vals = score(starts)
    order = np.argsort(-vals, kind="stable")[: cfg.refine_starts]
    best_x, best_v = starts[order[0]].copy(), vals[order[0]]
    d = starts.shape[1]
    moves = np.concatenate([np.eye(d), -np.eye(d)])
    x, v = starts[order].copy(), vals[order].copy()
    step = np.full(len(order), cfg.initial_step)
    active = np.ones(len(order), dtype=bool)
    for _ in range(cfg.max_sweeps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cands = principal(x[idx, None, :] + step[idx, None, None] * moves[None])
        cv = score(cands.reshape(-1, d)).reshape(idx.size, 2 * d)
        j = np.argmax(cv, axis=1)
        top = cv[np.arange(idx.size), j]
        better = top > v[idx]
        x[idx[better]] = cands[np.flatnonzero(better), j[better]]
        v[idx[better]] = top[better]
        worse = idx[~better]
        step[worse] *= 0.5
        active[worse[step[worse] < cfg.min_step]] = False
    k = int(np.argmax(v))
    if v[k] > best_v:
        best_x, best_v = x[k], v[k]
    return best_x, best_v


def propose_batch(surrogate: SurrogateState, acquisition: AcquisitionConfig = AcquisitionConfig(),
                  rng_seed=0, best_cost: float | None = None) -> np.ndarray:
    """Greedy batch of EI maximizers with local penalization.

    Starts are uniform random points plus Gaussian perturbations of the best
    observed inputs; the top starts are refined coordinate by coordinate.
    """
    rng = np.random.default_rng(rng_seed)
    d = surrogate.dimension
    if best_cost is None:
        best_cost = float(surrogate.y.min())
    radius = acquisition.penalty_scale * surrogate.kernel.length_scale
    top = surrogate.X[np.argsort(surrogate.y, kind="stable")[: max(1, min(5, len(surrogate.y)))]]

    batch, chosen_Z = [], []
    for _ in range(acquisition.batch_size):
        def score(P):
            ei = expected_improvement(surrogate, P, best_cost)
            return ei * _penalty(torus_embed(P), chosen_Z, radius)

        starts = [rng.uniform(0.0, TWO_PI, size=(acquisition.random_starts, d))]
        if acquisition.incumbent_starts:
            base = top[rng.integers(len(top), size=acquisition.incumbent_starts)]
            scale = rng.choice([0.05, 0.2, 0.5], size=(acquisition.incumbent_starts, 1))
            starts.append(principal(base + scale * rng.standard_normal(base.shape)))
        x, _ = _maximize(score, np.concatenate(starts), acquisition)
        batch.append(x)
        chosen_Z.append(torus_embed(x))
    return np.array(batch)
