"""Closed-form Multinomial-Dirichlet inference for one sex group.

With register counts q ~ Multinomial(n, theta) and a Dirichlet(alpha) prior
on the age shares theta, the posterior is Dirichlet(alpha + q). Each share's
marginal is Beta(alpha*_l, A* - alpha*_l), which gives equal-tailed credible
intervals without any simulation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .special import betaincinv, gammaln

#: Draws per independently seeded chunk in ``sample``.
SAMPLE_CHUNK = 65536


@dataclass(frozen=True)
class DirichletPosterior:
    alpha_star: np.ndarray
    n: float
    prior: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.asarray(self.alpha_star, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("alpha_star must be a non-empty vector")
        if not np.all(a > 0) or not np.all(np.isfinite(a)):
            raise ValueError("all posterior concentrations must be positive and finite")
        a.setflags(write=False)
        object.__setattr__(self, "alpha_star", a)

    @property
    def A_star(self) -> float:
        return float(self.alpha_star.sum())

    @property
    def size(self) -> int:
        return self.alpha_star.size


@dataclass(frozen=True)
class IntervalEstimate:
    """Posterior means and equal-tailed bounds, per age group."""

    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float
    scale: float = 1.0  # 1 for shares, the population total for counts


def posterior_update(q, alpha) -> DirichletPosterior:
    """Conjugate update: alpha* = q + alpha."""
    q = np.asarray(q)
    alpha = np.asarray(alpha, dtype=float)
    if q.shape != alpha.shape or q.ndim != 1:
        raise ValueError(f"dimension mismatch: q {q.shape} vs alpha {alpha.shape}")
    if np.any(alpha <= 0):
        raise ValueError("prior concentrations must be positive")
    if np.any(q < 0):
        raise ValueError("counts must be nonnegative")
    return DirichletPosterior(q + alpha, float(q.sum()), alpha)


def posterior_mean(post: DirichletPosterior) -> np.ndarray:
    return post.alpha_star / post.alpha_star.sum()


def log_norm_const(alpha_star) -> float:
    """log B(alpha) = sum(log Gamma(alpha_l)) - log Gamma(sum(alpha_l))."""
    a = np.asarray(alpha_star, dtype=float)
    if np.any(a <= 0):
        raise ValueError("log_norm_const needs positive parameters")
    return float(gammaln(a).sum() - gammaln(a.sum()))


def log_density(theta, post: DirichletPosterior, atol: float = 1e-10) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != post.alpha_star.shape:
        raise ValueError("theta has the wrong dimension")
    if np.any(theta < 0) or abs(theta.sum() - 1.0) > atol:
        raise ValueError("theta is not on the simplex")
    a = post.alpha_star
    with np.errstate(divide="ignore"):
        terms = np.where(a == 1.0, 0.0, (a - 1.0) * np.log(theta))
    return float(-log_norm_const(a) + terms.sum())


def beta_marginal(post: DirichletPosterior, l: int):
    """Shape parameters of the marginal Beta law of share ``l``."""
    a = post.alpha_star[l]
    return a, post.A_star - a


def marginal_interval(post: DirichletPosterior, l, level: float = 0.95):
    """Equal-tailed interval at ``level`` for share ``l`` (int or index array)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    l = np.asarray(l)
    if post.size == 1:
        ones = np.ones(l.shape)
        return (ones[()], ones[()]) if l.ndim == 0 else (ones, ones)
    a = post.alpha_star[l]
    b = post.A_star - a
    lo = betaincinv((1.0 - level) / 2.0, a, b)
    hi = betaincinv((1.0 + level) / 2.0, a, b)
    return lo, hi


def share_intervals(post: DirichletPosterior, level: float = 0.95) -> IntervalEstimate:
    lo, hi = marginal_interval(post, np.arange(post.size), level)
    return IntervalEstimate(posterior_mean(post), np.asarray(lo), np.asarray(hi), level)


def count_estimates(post: DirichletPosterior, total: float, level: float = 0.95) -> IntervalEstimate:
    """Share estimates rescaled by a population total."""
    if total <= 0:
        raise ValueError("total must be positive")
    s = share_intervals(post, level)
    return IntervalEstimate(total * s.point, total * s.lower, total * s.upper, level, float(total))


def sample(post: DirichletPosterior, m: int, seed: int, workers: int = 1) -> np.ndarray:
    """Draw ``m`` share vectors as normalized independent gamma variates.

    Draws are generated in fixed-size chunks, each with its own child seed
    spawned from ``seed``, so the result does not depend on ``workers``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    n_chunks = -(-m // SAMPLE_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty((m, post.size))

    def fill(k):
        start = k * SAMPLE_CHUNK
        stop = min(m, start + SAMPLE_CHUNK)
        rng = np.random.default_rng(children[k])
        g = rng.standard_gamma(post.alpha_star, size=(stop - start, post.size))
        out[start:stop] = g / g.sum(axis=1, keepdims=True)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, range(n_chunks)))
    else:
        for k in range(n_chunks):
            fill(k)
    return out
