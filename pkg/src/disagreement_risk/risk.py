"""Bayes risk of the G1 posterior mean when theta is drawn from G0.

    R(G1, sigma; G0) = E_{theta ~ G0} (E_{G1}[theta | X] - theta)^2
    M(G1, sigma; G0) = E_{theta ~ G0} E_{G1}[theta | X]^2

with X | theta ~ N(theta, sigma^2).

Two deterministic rules are available.  ``"panels"`` (the default)
integrates over x against the marginal of X given each G0 component, using
composite Gauss-Legendre panels whose breakpoints are graded around the
points where the G1 posterior switches between components; at small sigma
those switches are much narrower than sigma and a global Gauss-Hermite rule
steps over them.  ``"gauss_hermite"`` is the plain tensor rule: exact sum
(or Gauss-Hermite nodes) over theta, Gauss-Hermite nodes over the noise.
Seeded Monte Carlo is the independent cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import roots_hermitenorm
from numpy.polynomial.legendre import leggauss

from .errors import DisagreementRiskError
from .posterior import check_sigma, posterior_mean
from .priors import DiscretePrior, Prior, sample

RULES = ("panels", "gauss_hermite")
# half-width of the x-range per G0 component, in marginal standard deviations
PANEL_RANGE = 10.0

MC_CHUNK = 1 << 16
MAX_SEED = (1 << 64) - 1


class Method(str, Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts, sample size and seed governing every expectation."""

    gh_nodes: int = 121
    mc_samples: int = 200_000
    seed: int = 0
    theta_nodes: int = 61
    rule: str = "panels"
    panel_nodes: int = 16

    def __post_init__(self):
        if self.rule not in RULES:
            raise DisagreementRiskError(f"rule must be one of {RULES}, got {self.rule!r}")
        if int(self.panel_nodes) != self.panel_nodes or self.panel_nodes < 2:
            raise DisagreementRiskError(f"panel_nodes must be an integer >= 2, got {self.panel_nodes!r}")
        if int(self.gh_nodes) != self.gh_nodes or self.gh_nodes < 3:
            raise DisagreementRiskError(f"gh_nodes must be an integer >= 3, got {self.gh_nodes!r}")
        if int(self.theta_nodes) != self.theta_nodes or self.theta_nodes < 1:
            raise DisagreementRiskError(f"theta_nodes must be a positive integer, got {self.theta_nodes!r}")
        if int(self.mc_samples) != self.mc_samples or self.mc_samples < 100:
            raise DisagreementRiskError(f"mc_samples must be an integer >= 100, got {self.mc_samples!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise DisagreementRiskError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class RiskReport:
    risk: float
    second_moment: float
    method: Method
    sigma: float
    n_evals: int
    std_error: Optional[float] = None
    spec: QuadratureSpec = field(default_factory=QuadratureSpec)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method"] = self.method.value
        return out

    def csv_row(self) -> list:
        return [
            repr(self.sigma), repr(self.risk), repr(self.second_moment), self.method.value,
            "" if self.std_error is None else repr(self.std_error),
        ]


CSV_HEADER = ["sigma", "risk", "second_moment", "method", "std_error"]


@lru_cache(maxsize=32)
def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E[g(Z)], Z ~ N(0, 1); weights sum to one."""
    z, w = roots_hermitenorm(n)
    w = w / math.sqrt(2.0 * math.pi)
    z.setflags(write=False)
    w.setflags(write=False)
    return z, w


def theta_nodes(prior: Prior, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Outer integration rule for theta ~ prior: atoms, or GH nodes per component."""
    if isinstance(prior, DiscretePrior):
        return prior.atoms_array, prior.weights_array
    u, wu = gauss_hermite(spec.theta_nodes)
    sd = np.sqrt(prior.variances_array)
    thetas = (prior.means_array[:, None] + sd[:, None] * u).ravel()
    weights = (prior.weights_array[:, None] * wu).ravel()
    return thetas, weights


def _quadrature_gh(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec):
    thetas, tw = theta_nodes(g0, spec)
    z, zw = gauss_hermite(spec.gh_nodes)
    x = thetas[:, None] + sigma * z
    rule = posterior_mean(g1, sigma, x.ravel()).reshape(x.shape)
    risk = float(tw @ (((rule - thetas[:, None]) ** 2) @ zw))
    moment = float(tw @ ((rule**2) @ zw))
    return risk, moment, x.size


@lru_cache(maxsize=32)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = leggauss(n)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def _marginal_components(prior: Prior, sigma: float):
    """(mean, marginal variance of X, weight) per component; atoms have zero spread."""
    if isinstance(prior, DiscretePrior):
        m = prior.atoms_array
        tau2 = np.zeros_like(m)
    else:
        m = prior.means_array
        tau2 = prior.variances_array
    return m, tau2, sigma * sigma + tau2, prior.weights_array


def transition_points(g1: Prior, sigma: float) -> list[tuple[float, float]]:
    """Where two G1 components have equal posterior weight, with the switch width.

    For components i, j the log posterior odds are quadratic in x (linear
    when the marginal variances agree); each real root x* is returned with
    width 1 / |d(log odds)/dx| at x*.
    """
    m, _, s2, w = _marginal_components(g1, sigma)
    logw = np.log(w) - 0.5 * np.log(s2)
    out = []
    n = len(m)
    for i in range(n):
        for j in range(i + 1, n):
            a = -0.5 / s2[i] + 0.5 / s2[j]
            b = m[i] / s2[i] - m[j] / s2[j]
            c = logw[i] - logw[j] - 0.5 * m[i] ** 2 / s2[i] + 0.5 * m[j] ** 2 / s2[j]
            if abs(a) <= 1e-12 * max(1.0 / s2[i], 1.0 / s2[j]):
                if b == 0.0:
                    continue
                roots = [-c / b]
            else:
                disc = b * b - 4.0 * a * c
                if disc < 0.0:
                    continue
                sq = math.sqrt(disc)
                roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
            for r in roots:
                slope = abs(2.0 * a * r + b)
                if slope > 0.0 and math.isfinite(r):
                    out.append((float(r), 1.0 / slope))
    return out


def _panel_nodes(center: float, scale: float, transitions, order: int):
    lo, hi = center - PANEL_RANGE * scale, center + PANEL_RANGE * scale
    pts = [center + scale * np.arange(-2 * PANEL_RANGE, 2 * PANEL_RANGE + 1) / 2.0]
    for x_star, width in transitions:
        if not lo < x_star < hi or width >= 0.5 * scale:
            continue
        steps = width * 2.0 ** np.arange(0, math.ceil(math.log2(scale / width)) + 1)
        pts.append(np.array([x_star]))
        pts.append(x_star + steps)
        pts.append(x_star - steps)
    edges = np.unique(np.clip(np.concatenate(pts), lo, hi))
    t, w = _legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * t).ravel()
    wx = (half[:, None] * w).ravel()
    return x, wx


def _quadrature_panels(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec):
    # theta | X within one G0 component is N(mu + lam (x - mu), lam sigma^2),
    # so R = sum_i w_i E_X[(d(X) - m_i(X))^2 + v_i] with X ~ N(mu_i, s_i^2).
    transitions = transition_points(g1, sigma)
    mus, tau2, s2, weights = _marginal_components(g0, sigma)
    xs, dens, cmean, cvar, cw = [], [], [], [], []
    for mu, t2, v, w in zip(mus, tau2, s2, weights):
        scale = math.sqrt(v)
        x, wx = _panel_nodes(mu, scale, transitions, spec.panel_nodes)
        lam = t2 / v
        xs.append(x)
        dens.append(wx * np.exp(-0.5 * (x - mu) ** 2 / v) / math.sqrt(2.0 * math.pi * v))
        cmean.append(mu + lam * (x - mu))
        cvar.append(lam * sigma * sigma)
        cw.append(w)
    rule = posterior_mean(g1, sigma, np.concatenate(xs))
    risk = moment = 0.0
    start = 0
    for x, d, m, v, w in zip(xs, dens, cmean, cvar, cw):
        r = rule[start:start + x.size]
        start += x.size
        risk += float(w) * float(d @ ((r - m) ** 2 + v))
        moment += float(w) * float(d @ (r * r))
    return risk, moment, start


def _quadrature(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec):
    if spec.rule == "gauss_hermite":
        return _quadrature_gh(g0, g1, sigma, spec)
    return _quadrature_panels(g0, g1, sigma, spec)


def risk_quadrature(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec = QuadratureSpec()) -> RiskReport:
    sigma = check_sigma(sigma)
    risk, moment, n = _quadrature(g0, g1, sigma, spec)
    return RiskReport(
        risk=max(risk, 0.0), second_moment=max(moment, 0.0), method=Method.QUADRATURE,
        sigma=sigma, n_evals=n, std_error=None, spec=spec,
    )


def second_moment_functional(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """E_{G0}[E_{G1}[theta | X]^2] by the same quadrature as :func:`risk_quadrature`."""
    sigma = check_sigma(sigma)
    return max(_quadrature(g0, g1, sigma, spec)[1], 0.0)


def _mc_chunk(g0: Prior, g1: Prior, sigma: float, seed: int, index: int, size: int):
    # Each chunk owns an independent stream keyed by (seed, index), so the
    # total is the same however chunks are scheduled.
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    theta = sample(g0, size, rng)
    x = theta + sigma * rng.standard_normal(size)
    rule = posterior_mean(g1, sigma, x)
    loss = (rule - theta) ** 2
    mean = loss.mean()
    return size, mean, float(((loss - mean) ** 2).sum()), float((rule**2).sum())


def risk_monte_carlo(
    g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec = QuadratureSpec(), workers: int = 1
) -> RiskReport:
    sigma = check_sigma(sigma)
    n = spec.mc_samples
    sizes = [MC_CHUNK] * (n // MC_CHUNK)
    if n % MC_CHUNK:
        sizes.append(n % MC_CHUNK)

    def run(i):
        return _mc_chunk(g0, g1, sigma, spec.seed, i, sizes[i])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]

    # Chan et al. pairwise combination, in chunk order
    count, mean, m2, moment_sum = 0, 0.0, 0.0, 0.0
    for nb, mb, m2b, msum in parts:
        total = count + nb
        delta = mb - mean
        mean += delta * nb / total
        m2 += m2b + delta * delta * count * nb / total
        count = total
        moment_sum += msum
    sd = math.sqrt(m2 / (count - 1))
    return RiskReport(
        risk=float(mean), second_moment=moment_sum / count, method=Method.MONTE_CARLO,
        sigma=sigma, n_evals=count, std_error=sd / math.sqrt(count), spec=spec,
    )


def risk_upper_from_moment(m: float, v: float) -> float:
    """R <= 2 E[theta^2] + 2 M <= 2V + 2M."""
    if m < 0 or v < 0:
        raise DisagreementRiskError(f"m and v must be nonnegative, got m={m!r}, v={v!r}")
    return 2.0 * v + 2.0 * m
