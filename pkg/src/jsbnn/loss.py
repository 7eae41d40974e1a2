"""The three training objectives: KL/ELBO, closed-form JS-G, and Monte-Carlo JS-G/JS-A.

Every objective is (constraint weight) * divergence + expected negative
log-likelihood, with the likelihood expectation always estimated by sampled
forward passes. The whole objective is built once as an autodiff graph, so the
reported breakdown and the gradients used for training come from the same
arithmetic.

Loss evaluation is read-only over the network; each call derives its own RNG
stream from (cfg.seed, step), which keeps evaluation deterministic, allows the
same noise to be replayed for gradient checks, and makes concurrent evaluation
across batches safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .divergence import DivergenceConfig
from .network import BayesianNetwork, LayerNoise

__all__ = [
    "LossBreakdown",
    "LOSS_KINDS",
    "BREAKDOWN_CSV_HEADER",
    "nll_mc",
    "kl_loss",
    "jsg_loss_closed",
    "jsg_loss_mc",
    "jsa_loss_mc",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

LOSS_KINDS = ("kl", "jsg_closed", "jsg_mc", "jsa_mc")

BREAKDOWN_CSV_HEADER = "step,divergence_term,nll_term,total"


@dataclass(frozen=True)
class LossBreakdown:
    """Divergence and likelihood parts of one loss evaluation.

    total = minibatch_scale * divergence_term + nll_term; minibatch_scale in
    (0, 1] spreads one full-batch application of the divergence over the
    minibatches of an epoch.
    """

    divergence_term: float
    nll_term: float
    total: float
    minibatch_scale: float

    @classmethod
    def assemble(cls, divergence_term: float, nll_term: float, minibatch_scale: float) -> "LossBreakdown":
        if not 0.0 < minibatch_scale <= 1.0:
            raise ValueError(f"minibatch_scale must lie in (0, 1], got {minibatch_scale}")
        return cls(
            divergence_term=divergence_term,
            nll_term=nll_term,
            total=minibatch_scale * divergence_term + nll_term,
            minibatch_scale=minibatch_scale,
        )

    def csv_row(self, step: int) -> str:
        return f"{step},{self.divergence_term!r},{self.nll_term!r},{self.total!r}"


# ---------------------------------------------------------------------------
# noise bundles: every loss draws from a stream derived from (seed, step)
# ---------------------------------------------------------------------------


@dataclass
class NoiseBundle:
    """Frozen randomness for one loss evaluation: reparameterization noise for
    the posterior samples, plus direct prior draws for the Monte-Carlo kinds."""

    epsilons: list  # [sample][layer] -> LayerNoise
    prior_draws: list  # [sample][layer] -> (weights array, biases array)


def draw_bundle(net: BayesianNetwork, cfg: DivergenceConfig, step: int = 0,
                with_prior: bool = False) -> NoiseBundle:
    """Draw the randomness for one evaluation at a given step.

    The posterior-noise draws come first so that, for equal (seed, step), all
    loss kinds share identical epsilon samples.
    """
    rng = np.random.default_rng([int(cfg.seed), int(step)])
    eps = [
        [
            LayerNoise(rng.standard_normal(l.weights.dim), rng.standard_normal(l.biases.dim))
            for l in net.layers
        ]
        for _ in range(cfg.mc_samples)
    ]
    prior = []
    if with_prior:
        for _ in range(cfg.mc_samples):
            draws = []
            for l in net.layers:
                pw = net.prior_for(l.weights.dim)
                pb = net.prior_for(l.biases.dim)
                draws.append(
                    (
                        pw.mu + pw.sigma * rng.standard_normal(l.weights.dim),
                        pb.mu + pb.sigma * rng.standard_normal(l.biases.dim),
                    )
                )
            prior.append(draws)
    return NoiseBundle(epsilons=eps, prior_draws=prior)


# ---------------------------------------------------------------------------
# graph construction
# ---------------------------------------------------------------------------


@dataclass
class _LayerLeaves:
    w_mu: ad.Tensor
    w_rho: ad.Tensor
    b_mu: ad.Tensor
    b_rho: ad.Tensor


def _make_leaves(net: BayesianNetwork) -> list:
    return [
        _LayerLeaves(
            ad.Tensor(l.weights.mu),
            ad.Tensor(l.weights.rho),
            ad.Tensor(l.biases.mu),
            ad.Tensor(l.biases.rho),
        )
        for l in net.layers
    ]


def _validate_batch(net: BayesianNetwork, batch):
    x, y = batch
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("batch features must be (n, d) with one label per row")
    if x.shape[0] and x.shape[1] != net.n_inputs:
        raise ValueError(f"batch has {x.shape[1]} features, network expects {net.n_inputs}")
    if y.size and (np.any(y < 0) or np.any(y >= net.n_outputs)):
        raise ValueError(f"labels must lie in [0, {net.n_outputs})")
    return x, y


def _sampled_params(leaves, net, eps):
    """Per-layer reparameterized samples (w, b, sigma_w, sigma_b) as tensors."""
    out = []
    for leaf, noise in zip(leaves, eps):
        sig_w = ad.softplus(leaf.w_rho)
        sig_b = ad.softplus(leaf.b_rho)
        w = leaf.w_mu + sig_w * ad.Tensor(noise.weights)
        b = leaf.b_mu + sig_b * ad.Tensor(noise.biases)
        out.append((w, b, sig_w, sig_b))
    return out


def _forward_graph(net, sampled, x):
    h = ad.Tensor(x)
    for layer, (w, b, _, _) in zip(net.layers, sampled):
        h = h @ w.reshape((layer.fan_in, layer.fan_out)) + b
        if layer.activation == "relu":
            h = ad.relu(h)
    return h


def _cross_entropy(logits, y):
    # sum over the batch of -log softmax(logits)[y]
    return ad.logsumexp(logits, axis=1).sum() - ad.gather_rows(logits, y).sum()


def _log_q(sampled, leaves):
    """log q(w | theta) of one full sampled parameter vector, as a scalar tensor."""
    total = ad.Tensor(0.0)
    for (w, b, sig_w, sig_b), leaf in zip(sampled, leaves):
        for val, mu, sig in ((w, leaf.w_mu, sig_w), (b, leaf.b_mu, sig_b)):
            z = (val - mu) / sig
            total = total + ((z * z) * (-0.5) - ad.log(sig)).sum() + (-_HALF_LOG_2PI * mu.value.size)
    return total


def _log_prior(net, values) -> float:
    """log P(w) of constant parameter values (plain float, no gradient path)."""
    total = 0.0
    for layer, (w, b) in zip(net.layers, values):
        for val, dim in ((w, layer.weights.dim), (b, layer.biases.dim)):
            g = net.prior_for(dim)
            z = (np.asarray(val) - g.mu) / g.sigma
            total += float(np.sum(-_HALF_LOG_2PI - np.log(g.sigma) - 0.5 * z**2))
    return total


def _log_prior_of_sampled(net, sampled):
    """log P(w) of the sampled (theta-dependent) parameter vector, as a tensor."""
    total = ad.Tensor(0.0)
    for layer, (w, b, _, _) in zip(net.layers, sampled):
        for val, dim in ((w, layer.weights.dim), (b, layer.biases.dim)):
            g = net.prior_for(dim)
            z = (val - ad.Tensor(g.mu)) / ad.Tensor(g.sigma)
            total = total + ((z * z) * (-0.5)).sum() + float(
                np.sum(-_HALF_LOG_2PI - np.log(g.sigma))
            )
    return total


def _log_q_of_constant(values, leaves):
    """log q(w | theta) of constant values (prior draws); gradients flow into theta."""
    total = ad.Tensor(0.0)
    for (w, b), leaf in zip(values, leaves):
        for val, mu, rho in ((w, leaf.w_mu, leaf.w_rho), (b, leaf.b_mu, leaf.b_rho)):
            sig = ad.softplus(rho)
            z = (ad.Tensor(np.asarray(val)) - mu) / sig
            total = total + ((z * z) * (-0.5) - ad.log(sig)).sum() + (-_HALF_LOG_2PI * mu.value.size)
    return total


def _kl_closed_graph(net, leaves):
    total = ad.Tensor(0.0)
    for layer, leaf in zip(net.layers, leaves):
        for mu, rho, dim in (
            (leaf.w_mu, leaf.w_rho, layer.weights.dim),
            (leaf.b_mu, leaf.b_rho, layer.biases.dim),
        ):
            p = net.prior_for(dim)
            vp = p.var
            sig = ad.softplus(rho)
            vq = sig * sig
            terms = vq / vp + ad.log(ad.Tensor(vp) / vq) + (ad.Tensor(p.mu) - mu) ** 2 / vp - 1.0
            total = total + terms.sum() * 0.5
    return total


def _jsg_closed_graph(net, leaves, alpha):
    total = ad.Tensor(0.0)
    for layer, leaf in zip(net.layers, leaves):
        for mu, rho, dim in (
            (leaf.w_mu, leaf.w_rho, layer.weights.dim),
            (leaf.b_mu, leaf.b_rho, layer.biases.dim),
        ):
            p = net.prior_for(dim)
            vp, mp = p.var, p.mu
            sig = ad.softplus(rho)
            vq = sig * sig
            vg = vq * vp / (vq * (1.0 - alpha) + alpha * vp)
            mu_g = vg * (mu * alpha / vq + (1.0 - alpha) * mp / vp)
            t_trace = (vq * (1.0 - alpha) + alpha * vp) / vg
            t_logdet = ad.log(vg) - ad.log(vq) * (1.0 - alpha) - ad.Tensor(alpha * np.log(vp))
            t_mq = (mu_g - mu) ** 2 / vg * (1.0 - alpha)
            t_mp = (mu_g - ad.Tensor(mp)) ** 2 / vg * alpha
            total = total + (t_trace + t_logdet + t_mq + t_mp - 1.0).sum() * 0.5
    return total


def _mc_divergence_graph(net, leaves, sampled_per_draw, bundle, cfg, kind):
    """Monte-Carlo divergence for the jsg_mc / jsa_mc kinds, as a scalar tensor."""
    alpha = cfg.alpha
    n = cfg.mc_samples

    def log_mix(log_q_t, log_p_t):
        # skewed full-vector mixture alpha*q + (1-alpha)*P, in log space
        if alpha == 0.0:
            return log_p_t
        if alpha == 1.0:
            return log_q_t
        return ad.logaddexp(log_q_t + math.log(alpha), log_p_t + math.log(1.0 - alpha))

    if kind == "jsg_mc":
        # closed-form geometric-mean parameters, theta-dependent through vq
        def log_gprime(sampled_or_values, is_tensor):
            total = ad.Tensor(0.0)
            for idx, layer in enumerate(net.layers):
                leaf = leaves[idx]
                if is_tensor:
                    w, b, sig_w, sig_b = sampled_or_values[idx]
                    pairs = ((w, leaf.w_mu, sig_w, layer.weights.dim), (b, leaf.b_mu, sig_b, layer.biases.dim))
                else:
                    w, b = sampled_or_values[idx]
                    pairs = (
                        (ad.Tensor(np.asarray(w)), leaf.w_mu, ad.softplus(leaf.w_rho), layer.weights.dim),
                        (ad.Tensor(np.asarray(b)), leaf.b_mu, ad.softplus(leaf.b_rho), layer.biases.dim),
                    )
                for val, mu, sig, dim in pairs:
                    p = net.prior_for(dim)
                    vp, mp = p.var, p.mu
                    vq = sig * sig
                    vg = vq * vp / (vq * (1.0 - alpha) + alpha * vp)
                    mu_g = vg * (mu * alpha / vq + (1.0 - alpha) * mp / vp)
                    z2 = (val - mu_g) ** 2 / vg
                    total = total + (z2 * (-0.5) - ad.log(vg) * 0.5).sum() + (-_HALF_LOG_2PI * dim)
            return total

        term_q = ad.Tensor(0.0)
        if alpha < 1.0:
            for sampled in sampled_per_draw:
                term_q = term_q + _log_q(sampled, leaves) - log_gprime(sampled, True)
            term_q = term_q * ((1.0 - alpha) / n)
        term_p = ad.Tensor(0.0)
        if alpha > 0.0:
            for values in bundle.prior_draws:
                term_p = term_p + ad.Tensor(_log_prior(net, values)) - log_gprime(values, False)
            term_p = term_p * (alpha / n)
        return term_q + term_p

    # jsa_mc
    term_q = ad.Tensor(0.0)
    if alpha < 1.0:
        for sampled in sampled_per_draw:
            lq = _log_q(sampled, leaves)
            lp = _log_prior_of_sampled(net, sampled)
            term_q = term_q + lq - log_mix(lq, lp)
        term_q = term_q * ((1.0 - alpha) / n)
    term_p = ad.Tensor(0.0)
    if alpha > 0.0:
        for values in bundle.prior_draws:
            lq = _log_q_of_constant(values, leaves)
            lp = ad.Tensor(_log_prior(net, values))
            term_p = term_p + lp - log_mix(lq, lp)
        term_p = term_p * (alpha / n)
    return term_q + term_p


def build_loss_graph(net: BayesianNetwork, batch, kind: str, cfg: DivergenceConfig,
                     minibatch_scale: float, bundle: NoiseBundle):
    """Assemble the full loss graph; returns (total, divergence, nll, leaves).

    The divergence tensor already carries the constraint weight lam (fixed to 1
    for the plain KL loss); total = minibatch_scale * divergence + nll.
    An empty batch yields nll = 0, i.e. a pure divergence objective.
    """
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    if not 0.0 < minibatch_scale <= 1.0:
        raise ValueError(f"minibatch_scale must lie in (0, 1], got {minibatch_scale}")
    x, y = _validate_batch(net, batch)
    leaves = _make_leaves(net)
    sampled_per_draw = [_sampled_params(leaves, net, eps) for eps in bundle.epsilons]

    nll = ad.Tensor(0.0)
    if x.shape[0]:
        for sampled in sampled_per_draw:
            nll = nll + _cross_entropy(_forward_graph(net, sampled, x), y)
        nll = nll * (1.0 / cfg.mc_samples)

    if kind == "kl":
        div = _kl_closed_graph(net, leaves)
    elif kind == "jsg_closed":
        div = _jsg_closed_graph(net, leaves, cfg.alpha) * cfg.lam
    else:
        div = _mc_divergence_graph(net, leaves, sampled_per_draw, bundle, cfg, kind) * cfg.lam

    total = div * minibatch_scale + nll
    return total, div, nll, leaves


def _evaluate(net, batch, kind, cfg, minibatch_scale, step) -> LossBreakdown:
    with_prior = kind in ("jsg_mc", "jsa_mc")
    bundle = draw_bundle(net, cfg, step, with_prior=with_prior)
    total, div, nll, _ = build_loss_graph(net, batch, kind, cfg, minibatch_scale, bundle)
    return LossBreakdown(
        divergence_term=div.item(),
        nll_term=nll.item(),
        total=total.item(),
        minibatch_scale=minibatch_scale,
    )


# ---------------------------------------------------------------------------
# public objectives
# ---------------------------------------------------------------------------


def nll_mc(net: BayesianNetwork, batch, n_samples: int, seed) -> float:
    """Monte-Carlo expected negative log likelihood of a labeled batch.

    -(1/n_samples) * sum_i sum_(x,y) log softmax(forward(x, eps_i))[y].
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    x, y = _validate_batch(net, batch)
    if not x.shape[0]:
        raise ValueError("batch must be non-empty")
    cfg = DivergenceConfig(mc_samples=n_samples, seed=seed)
    bundle = draw_bundle(net, cfg, 0)
    leaves = _make_leaves(net)
    nll = ad.Tensor(0.0)
    for eps in bundle.epsilons:
        sampled = _sampled_params(leaves, net, eps)
        nll = nll + _cross_entropy(_forward_graph(net, sampled, x), y)
    return nll.item() / n_samples


def kl_loss(net, batch, cfg: DivergenceConfig, minibatch_scale: float = 1.0, step: int = 0) -> LossBreakdown:
    """Classic variational objective: exact KL(q || prior) plus sampled NLL (lam fixed to 1)."""
    return _evaluate(net, batch, "kl", cfg, minibatch_scale, step)


def jsg_loss_closed(net, batch, cfg: DivergenceConfig, minibatch_scale: float = 1.0, step: int = 0) -> LossBreakdown:
    """Geometric JS objective with the divergence evaluated in closed form.

    divergence_term = lam * sum over parameter tensors of the closed-form JS-G;
    reproduces `kl_loss` exactly at alpha=0, lam=1.
    """
    return _evaluate(net, batch, "jsg_closed", cfg, minibatch_scale, step)


def jsg_loss_mc(net, batch, cfg: DivergenceConfig, minibatch_scale: float = 1.0, step: int = 0) -> LossBreakdown:
    """Geometric JS objective with the divergence estimated by Monte Carlo.

    Samples cfg.mc_samples draws from the posterior (shared with the NLL term)
    and the prior, scoring both against the geometric-mean Gaussian, so the
    estimate converges to the closed-form divergence of `jsg_loss_closed`.
    """
    return _evaluate(net, batch, "jsg_mc", cfg, minibatch_scale, step)


def jsa_loss_mc(net, batch, cfg: DivergenceConfig, minibatch_scale: float = 1.0, step: int = 0) -> LossBreakdown:
    """Bounded generalized JS objective, estimated by Monte Carlo.

    divergence_term = lam * [(1-a) E_q[log q - log m] + a E_P[log P - log m]]
    with the full-parameter-vector mixture m = a*q + (1-a)*P evaluated as a
    stable log-sum-exp; the estimand is bounded by lam * jsa_bound(a).
    """
    return _evaluate(net, batch, "jsa_mc", cfg, minibatch_scale, step)
