"""Marginal density, score and posterior functionals under X | theta ~ N(theta, sigma^2).

Every quantity is assembled from per-component log terms

    log w_i + log N(x; m_i, s_i^2)

(``m_i = atom_i, s_i = sigma`` for discrete priors, ``s_i^2 = sigma^2 + tau_i^2``
for mixture components) and combined by max-shifted exponentiation, so
nothing underflows when sigma is small or |x| is large.

All functions accept a scalar or an array ``x`` and return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .errors import InvalidSigma
from .priors import DiscretePrior, Prior

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Likelihood:
    sigma: float

    def __post_init__(self):
        check_sigma(self.sigma)


def check_sigma(sigma: float) -> float:
    try:
        value = float(sigma)
    except (TypeError, ValueError):
        raise InvalidSigma(f"sigma must be a number, got {sigma!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise InvalidSigma(f"sigma must be positive and finite, got {sigma!r}")
    return value


def _shape_out(x, values: np.ndarray):
    return float(np.reshape(values, -1)[0]) if np.ndim(x) == 0 else values


def _components(prior: Prior, sigma: float, x: np.ndarray):
    """Per-component terms for each x.

    Returns ``(log_terms, centers, marginal_vars, post_means, post_vars)``;
    ``log_terms`` has shape (len(x), n_components), the posterior arrays are
    broadcastable to it.
    """
    x = x[:, None]
    if isinstance(prior, DiscretePrior):
        atoms = prior.atoms_array
        s2 = np.full_like(atoms, sigma * sigma)
        log_terms = (
            np.log(prior.weights_array) - 0.5 * (x - atoms) ** 2 / (sigma * sigma)
            - LOG_SQRT_2PI - math.log(sigma)
        )
        post_means = np.broadcast_to(atoms, log_terms.shape)
        post_vars = np.zeros_like(atoms)
        return log_terms, atoms, s2, post_means, post_vars

    mu = prior.means_array
    tau2 = prior.variances_array
    s2 = sigma * sigma + tau2
    log_terms = (
        np.log(prior.weights_array) - 0.5 * (x - mu) ** 2 / s2 - LOG_SQRT_2PI - 0.5 * np.log(s2)
    )
    shrink = tau2 / s2
    post_means = mu + shrink * (x - mu)
    post_vars = shrink * sigma * sigma
    return log_terms, mu, s2, post_means, post_vars


def _posterior_weights(log_terms: np.ndarray) -> np.ndarray:
    shifted = log_terms - log_terms.max(axis=1, keepdims=True)
    w = np.exp(shifted)
    return w / w.sum(axis=1, keepdims=True)


def log_marginal_density(prior: Prior, sigma: float, x):
    """log f_{G,sigma}(x), the log density of X marginally over theta ~ G."""
    sigma = check_sigma(sigma)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    log_terms, *_ = _components(prior, sigma, xa)
    return _shape_out(x, logsumexp(log_terms, axis=1))


def marginal_score(prior: Prior, sigma: float, x):
    """f'/f at x.

    Derivative kernel ``(m_i - x)/s_i^2 * w_i N(x; m_i, s_i^2)`` summed with
    the same max shift as the density, so the shift cancels in the ratio.
    """
    sigma = check_sigma(sigma)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    log_terms, centers, s2, _, _ = _components(prior, sigma, xa)
    kernel = np.exp(log_terms - log_terms.max(axis=1, keepdims=True))
    slopes = (centers - xa[:, None]) / s2
    score = np.sum(kernel * slopes, axis=1) / np.sum(kernel, axis=1)
    return _shape_out(x, score)


def posterior_mean(prior: Prior, sigma: float, x):
    """E_G[theta | X = x] as a posterior-weighted average of component means."""
    sigma = check_sigma(sigma)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    log_terms, _, _, post_means, _ = _components(prior, sigma, xa)
    p = _posterior_weights(log_terms)
    return _shape_out(x, np.sum(p * post_means, axis=1))


def posterior_mean_tweedie(prior: Prior, sigma: float, x):
    """Tweedie's formula: x + sigma^2 * f'(x)/f(x)."""
    sigma = check_sigma(sigma)
    xa = np.asarray(x, dtype=float)
    return _shape_out(x, xa + sigma * sigma * np.asarray(marginal_score(prior, sigma, xa)))


def posterior_tail(prior: Prior, sigma: float, x, s: float):
    """P(theta > s | X = x); atoms equal to ``s`` do not count."""
    sigma = check_sigma(sigma)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    log_terms, _, _, post_means, post_vars = _components(prior, sigma, xa)
    p = _posterior_weights(log_terms)
    if isinstance(prior, DiscretePrior):
        comp_tail = (prior.atoms_array > s).astype(float)
    else:
        comp_tail = norm.sf((s - post_means) / np.sqrt(post_vars))
    out = np.clip(np.sum(p * comp_tail, axis=-1), 0.0, 1.0)
    return _shape_out(x, out)


def posterior_second_moment(prior: Prior, sigma: float, x):
    """E_G[theta^2 | X = x]."""
    sigma = check_sigma(sigma)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    log_terms, _, _, post_means, post_vars = _components(prior, sigma, xa)
    p = _posterior_weights(log_terms)
    return _shape_out(x, np.sum(p * (post_vars + post_means**2), axis=1))
