"""Closed-form and Monte-Carlo divergences between diagonal Gaussians.

Covers the KL divergence, the skew-geometric Jensen-Shannon divergence (JS-G,
closed form via the geometric-mean Gaussian), the bounded generalized
Jensen-Shannon divergence (JS-A, Monte Carlo with a stable log-mixture), and
the regularization-dominance utilities built on them.

Conventions
-----------
The first argument of every two-distribution operation is the variational
posterior q, the second the prior p. Skew duality, JS(q||p) at alpha equals
JS(p||q) at 1-alpha, makes the opposite ordering interconvertible.

Monte-Carlo estimators take an explicit seed and are bit-reproducible for a
given seed; sample generation is sequential per call, so results do not depend
on thread placement. The two-distribution estimators derive one child stream
per distribution from the seed; passing `streams=(s_first, s_second)` instead
pins the streams directly, which is what makes the alpha=0.5 symmetry hold
exactly under argument swap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .gaussian import DiagonalGaussian

__all__ = [
    "DivergenceConfig",
    "GeometricMeanParams",
    "kl_gaussian",
    "geometric_mean_params",
    "jsg_gaussian_closed",
    "jsa_bound",
    "mc_kl",
    "jsg_mc",
    "jsa_mc",
    "alpha_threshold",
    "variance_condition_holds",
    "jsg_dominates_kl",
    "fit_quadratic_coefficient",
]


@dataclass(frozen=True)
class DivergenceConfig:
    """Divergence hyperparameters: skew alpha, constraint weight lam, MC budget, seed."""

    alpha: float = 0.0
    lam: float = 1.0
    mc_samples: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@dataclass(frozen=True)
class GeometricMeanParams:
    """Per-dimension parameters of the geometric-mean Gaussian of two diagonal Gaussians."""

    mu_prime: np.ndarray
    sigma_prime_sq: np.ndarray

    def __post_init__(self):
        if np.any(self.sigma_prime_sq <= 0.0):
            raise ValueError("sigma_prime_sq must be strictly positive")

    def to_gaussian(self) -> DiagonalGaussian:
        return DiagonalGaussian(self.mu_prime, np.sqrt(self.sigma_prime_sq))


def _check_dims(q: DiagonalGaussian, p: DiagonalGaussian):
    if q.dim != p.dim:
        raise ValueError(f"dimension mismatch: {q.dim} vs {p.dim}")


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")


def kl_gaussian(q: DiagonalGaussian, p: DiagonalGaussian) -> float:
    """KL(q || p) for diagonal Gaussians, in closed form.

    0.5 * sum_i [ vq_i/vp_i + ln(vp_i/vq_i) + (mp_i - mq_i)^2 / vp_i - 1 ],
    always >= 0, exactly 0 for identical inputs.
    """
    _check_dims(q, p)
    vq, vp = q.var, p.var
    return 0.5 * float(
        np.sum(vq / vp + np.log(vp / vq) + (p.mu - q.mu) ** 2 / vp - 1.0)
    )


def geometric_mean_params(q: DiagonalGaussian, p: DiagonalGaussian, alpha: float) -> GeometricMeanParams:
    """Parameters of the (reverse-form, normalized) geometric-mean Gaussian q^alpha p^(1-alpha).

    Per dimension:
        sigma'^2 = vq*vp / ((1-alpha)*vq + alpha*vp)
        mu'      = sigma'^2 * (alpha*mq/vq + (1-alpha)*mp/vp)

    At alpha=0 this collapses onto p, at alpha=1 onto q.
    """
    _check_dims(q, p)
    _check_alpha(alpha)
    vq, vp = q.var, p.var
    sigma_prime_sq = vq * vp / ((1.0 - alpha) * vq + alpha * vp)
    mu_prime = sigma_prime_sq * (alpha * q.mu / vq + (1.0 - alpha) * p.mu / vp)
    return GeometricMeanParams(mu_prime=mu_prime, sigma_prime_sq=sigma_prime_sq)


def jsg_gaussian_closed(q: DiagonalGaussian, p: DiagonalGaussian, alpha: float) -> float:
    """Skew-geometric Jensen-Shannon divergence JS-G(q || p) in closed form.

    Equals (1-alpha)*KL(q||g') + alpha*KL(p||g') where g' is the geometric-mean
    Gaussian of `geometric_mean_params`; >= 0, recovers KL(q||p) at alpha=0 and
    KL(p||q) at alpha=1, and satisfies the skew duality
    JS-G(q||p)|alpha = JS-G(p||q)|1-alpha.
    """
    _check_dims(q, p)
    _check_alpha(alpha)
    vq, vp = q.var, p.var
    gm = geometric_mean_params(q, p, alpha)
    vg = gm.sigma_prime_sq
    t_trace = ((1.0 - alpha) * vq + alpha * vp) / vg
    t_logdet = np.log(vg) - (1.0 - alpha) * np.log(vq) - alpha * np.log(vp)
    t_mq = (1.0 - alpha) * (gm.mu_prime - q.mu) ** 2 / vg
    t_mp = alpha * (gm.mu_prime - p.mu) ** 2 / vg
    return 0.5 * float(np.sum(t_trace + t_logdet + t_mq + t_mp - 1.0))


def jsa_bound(alpha: float) -> float:
    """Upper bound -(1-alpha)*log(alpha) - alpha*log(1-alpha) of the generalized JS divergence.

    Holds for any two distributions in any dimension. At alpha in {0, 1} the
    bound diverges (the divergence degenerates to an unbounded KL), so +inf is
    returned as a sentinel rather than raising.
    """
    _check_alpha(alpha)
    if alpha == 0.0 or alpha == 1.0:
        return math.inf
    return -(1.0 - alpha) * math.log(alpha) - alpha * math.log(1.0 - alpha)


def mc_kl(q_sampler, q_logpdf, p_logpdf, n: int, seed) -> float:
    """Unbiased Monte-Carlo estimate of KL(q || p) = E_q[log q - log p].

    Parameters
    ----------
    q_sampler : callable(rng, n) -> (n, d) array
        Draws n samples from q.
    q_logpdf, p_logpdf : callable((n, d) array) -> (n,) array
        Log densities evaluated per sample.
    n : int
        Sample count, >= 1.
    seed : int or sequence of int
        Stream selector; identical seeds give identical estimates, and for a
        fixed seed the first n draws are a prefix of any larger budget.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    x = q_sampler(rng, n)
    vals = np.asarray(q_logpdf(x), dtype=np.float64) - np.asarray(p_logpdf(x), dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise NumericError(f"non-finite log-density at sample index {int(bad[0])}")
    return float(np.mean(vals))


def _gaussian_logpdf(x: np.ndarray, g: DiagonalGaussian) -> np.ndarray:
    z = (x - g.mu) / g.sigma
    return np.sum(-0.5 * np.log(2.0 * np.pi) - np.log(g.sigma) - 0.5 * z**2, axis=-1)


def _stream_seeds(seed, streams):
    """Derive the per-distribution stream pair from a base seed, or pass `streams` through."""
    if streams is not None:
        if seed is not None:
            raise ValueError("pass either seed or streams, not both")
        if len(streams) != 2:
            raise ValueError("streams must have exactly two entries")
        return streams[0], streams[1]
    if seed is None:
        raise ValueError("a seed (or explicit streams) is required")
    base = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return base + [0], base + [1]


def jsg_mc(q: DiagonalGaussian, p: DiagonalGaussian, alpha: float, n: int,
           seed=None, *, streams=None) -> float:
    """Monte-Carlo estimate of the closed-form JS-G divergence.

    Estimates (1-alpha)*E_q[log q - log g'] + alpha*E_p[log p - log g'] against
    the geometric-mean Gaussian g', each expectation with n samples from its own
    stream, so the estimate converges to `jsg_gaussian_closed`.
    """
    _check_dims(q, p)
    _check_alpha(alpha)
    g_prime = geometric_mean_params(q, p, alpha).to_gaussian()
    seed_q, seed_p = _stream_seeds(seed, streams)
    total = 0.0
    if alpha < 1.0:
        total += (1.0 - alpha) * mc_kl(
            q.sample, lambda x: _gaussian_logpdf(x, q), lambda x: _gaussian_logpdf(x, g_prime), n, seed_q
        )
    if alpha > 0.0:
        total += alpha * mc_kl(
            p.sample, lambda x: _gaussian_logpdf(x, p), lambda x: _gaussian_logpdf(x, g_prime), n, seed_p
        )
    return total


def jsa_mc(q: DiagonalGaussian, p: DiagonalGaussian, alpha: float, n: int,
           seed=None, *, streams=None) -> float:
    """Monte-Carlo estimate of the generalized JS divergence with skewed mixture.

    Estimates (1-alpha)*E_q[log q - log m] + alpha*E_p[log p - log m] where the
    mixture m = alpha*q + (1-alpha)*p is evaluated as a log-sum-exp, never by
    exponentiating the component densities directly. The estimand is bounded by
    `jsa_bound(alpha)`.
    """
    _check_dims(q, p)
    _check_alpha(alpha)

    def log_mix(x):
        lq = _gaussian_logpdf(x, q)
        lp = _gaussian_logpdf(x, p)
        if alpha == 0.0:
            return lp
        if alpha == 1.0:
            return lq
        return np.logaddexp(math.log(alpha) + lq, math.log(1.0 - alpha) + lp)

    seed_q, seed_p = _stream_seeds(seed, streams)
    total = 0.0
    if alpha < 1.0:
        total += (1.0 - alpha) * mc_kl(
            q.sample, lambda x: _gaussian_logpdf(x, q), log_mix, n, seed_q
        )
    if alpha > 0.0:
        total += alpha * mc_kl(
            p.sample, lambda x: _gaussian_logpdf(x, p), log_mix, n, seed_p
        )
    return total


def alpha_threshold(q: DiagonalGaussian, p: DiagonalGaussian) -> float:
    """Skew threshold 2*KL(q||p) / (KL(q||p) + KL(p||q)), always >= 0.

    For lam=1, the weighted forward/reverse-KL constraint term exceeds the plain
    KL term exactly when alpha lies above this threshold; a threshold below 1
    means some admissible alpha in (0, 1] achieves it.
    """
    kl_qp = kl_gaussian(q, p)
    kl_pq = kl_gaussian(p, q)
    denom = kl_qp + kl_pq
    if denom == 0.0:
        raise ValueError("alpha threshold undefined: the distributions are identical")
    return 2.0 * kl_qp / denom


def variance_condition_holds(q: DiagonalGaussian, p: DiagonalGaussian) -> bool:
    """Whether the prior variance strictly exceeds the posterior variance (univariate).

    This is the exact condition under which some alpha in [0, 1] makes the
    weighted-KL constraint term dominate the plain KL term.
    """
    if q.dim != 1 or p.dim != 1:
        raise ValueError("variance_condition_holds expects univariate Gaussians")
    return bool(p.var[0] > q.var[0])


def jsg_dominates_kl(q: DiagonalGaussian, p: DiagonalGaussian, alpha: float, lam: float) -> bool:
    """Whether lam * [(1-alpha)^2 KL(q||p) + alpha^2 KL(p||q)] strictly exceeds KL(q||p).

    This is the dominance check on the weighted forward/reverse-KL expansion of
    the constraint term; for lam=1 it is true exactly when
    alpha > alpha_threshold(q, p).
    """
    _check_alpha(alpha)
    kl_qp = kl_gaussian(q, p)
    kl_pq = kl_gaussian(p, q)
    weighted = lam * ((1.0 - alpha) ** 2 * kl_qp + alpha**2 * kl_pq)
    return bool(weighted > kl_qp)


def fit_quadratic_coefficient(x: np.ndarray, y: np.ndarray) -> float:
    """Leading coefficient of the least-squares quadratic fit y ~ a*x^2 + b*x + c."""
    return float(np.polyfit(np.asarray(x, float), np.asarray(y, float), 2)[0])
