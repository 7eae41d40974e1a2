"""Independent oracles used to verify the library's own estimators.

These deliberately avoid the package's gaussian/divergence code paths: densities
come from scipy.stats and integration is a self-contained adaptive Simpson rule,
so an error in the implementation under test cannot cancel out here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import NumericError

__all__ = ["quadrature_jsa", "finite_diff", "GoldenCase", "load_golden"]


def _adaptive_simpson(f, knots: np.ndarray, tol: float, max_rounds: int = 60) -> float:
    """Adaptive Simpson over the panels defined by `knots`, absolute tolerance `tol`.

    Works on a vectorized stack of intervals: every refinement round halves all
    panels whose local Richardson error estimate is still too large.
    """
    a = np.asarray(knots[:-1], dtype=np.float64)
    b = np.asarray(knots[1:], dtype=np.float64)
    span = float(knots[-1] - knots[0])
    fa, fb = f(a), f(b)
    total = 0.0
    for _ in range(max_rounds):
        m = 0.5 * (a + b)
        fm = f(m)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        h = b - a
        s_whole = h / 6.0 * (fa + 4.0 * fm + fb)
        s_halves = h / 12.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb)
        err = (s_halves - s_whole) / 15.0
        ok = np.abs(err) <= tol * (h / span)
        total += float(np.sum((s_halves + err)[ok]))
        if np.all(ok):
            return total
        bad = ~ok
        # split the bad panels in two and keep going
        a = np.concatenate([a[bad], m[bad]])
        b = np.concatenate([m[bad], b[bad]])
        fa = np.concatenate([fa[bad], fm[bad]])
        fb = np.concatenate([fm[bad], fb[bad]])
    raise NumericError("adaptive Simpson quadrature did not converge")


def quadrature_jsa(q_mu: float, q_sigma: float, p_mu: float, p_sigma: float,
                   alpha: float, tol: float = 1e-10) -> float:
    """High-precision univariate generalized JS divergence via quadrature.

    Evaluates (1-alpha) * KL(q || m) + alpha * KL(p || m) with the skewed mixture
    m = alpha*q + (1-alpha)*p, integrating each KL integrand with adaptive
    Simpson over the union of both 10-sigma supports.

    Parameters
    ----------
    q_mu, q_sigma : float
        Mean and standard deviation of the first (posterior-slot) Gaussian.
    p_mu, p_sigma : float
        Mean and standard deviation of the second (prior-slot) Gaussian.
    alpha : float
        Skew parameter in [0, 1].
    tol : float
        Absolute tolerance per integral.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    lo = min(q_mu - 10.0 * q_sigma, p_mu - 10.0 * p_sigma)
    hi = max(q_mu + 10.0 * q_sigma, p_mu + 10.0 * p_sigma)
    # seed panels around both modes so a narrow component cannot be stepped over
    marks = [lo, hi]
    for mu, sigma in ((q_mu, q_sigma), (p_mu, p_sigma)):
        for k in (-3.0, -1.0, 0.0, 1.0, 3.0):
            marks.append(mu + k * sigma)
    knots = np.unique(np.clip(np.asarray(marks, dtype=np.float64), lo, hi))

    def log_mix(x):
        lq = norm.logpdf(x, q_mu, q_sigma)
        lp = norm.logpdf(x, p_mu, p_sigma)
        if alpha == 0.0:
            return lp
        if alpha == 1.0:
            return lq
        return np.logaddexp(np.log(alpha) + lq, np.log(1.0 - alpha) + lp)

    def integrand_q(x):
        lq = norm.logpdf(x, q_mu, q_sigma)
        return np.exp(lq) * (lq - log_mix(x))

    def integrand_p(x):
        lp = norm.logpdf(x, p_mu, p_sigma)
        return np.exp(lp) * (lp - log_mix(x))

    total = 0.0
    if alpha < 1.0:
        total += (1.0 - alpha) * _adaptive_simpson(integrand_q, knots, tol)
    if alpha > 0.0:
        total += alpha * _adaptive_simpson(integrand_p, knots, tol)
    return total


def finite_diff(loss_evaluator, params: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient estimate of a scalar function.

    `loss_evaluator` must be deterministic: any Monte-Carlo noise inside it has
    to be frozen so both sides of every stencil see the same samples.
    """
    params = np.asarray(params, dtype=np.float64)
    grad = np.empty_like(params)
    for i in range(params.size):
        bumped = params.copy()
        bumped[i] = params[i] + h
        f_plus = loss_evaluator(bumped)
        bumped[i] = params[i] - h
        f_minus = loss_evaluator(bumped)
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class GoldenCase:
    """One frozen test case: serialized inputs, expected output, and its provenance.

    provenance is one of {"paper", "trivial", "derived"}; derived cases must name
    the oracle that produced the expected value.
    """

    identifier: str
    inputs: dict
    expected: object
    provenance: str
    oracle: str

    def __post_init__(self):
        if self.provenance not in ("paper", "trivial", "derived"):
            raise ValueError(f"unknown provenance tag {self.provenance!r}")
        if self.provenance == "derived" and not self.oracle:
            raise ValueError(f"derived case {self.identifier} must name its oracle")


def load_golden(path) -> GoldenCase:
    """Load a golden JSON file into a GoldenCase."""
    raw = json.loads(Path(path).read_text())
    return GoldenCase(
        identifier=raw["identifier"],
        inputs=raw["inputs"],
        expected=raw["expected"],
        provenance=raw["provenance"],
        oracle=raw.get("oracle", ""),
    )
