"""Named numerical checks of the inequalities that control the risk.

Each check returns a :class:`BoundReport` with ``margin = rhs - lhs``; a
pointwise check reports the grid point with the smallest margin as the
witness, together with both sides evaluated there.  Grids are always
explicit arguments with documented defaults.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.stats import norm

from .errors import NegativeInput, NonCenteredPrior
from .posterior import (
    LOG_SQRT_2PI,
    check_sigma,
    log_marginal_density,
    marginal_score,
    posterior_mean,
    posterior_second_moment,
)
from .priors import (
    Prior,
    TailCondition,
    abs_moment,
    default_s_grid,
    mean,
    second_moment,
    tail_constant,
    two_sided_tail,
    variance,
)
from .risk import QuadratureSpec, risk_quadrature, risk_upper_from_moment

CENTER_TOL = 1e-9
MARGIN_RTOL = 1e-9
X_GRID_POINTS = 2001
MILLS_GRID_POINTS = 10_000


@dataclass(frozen=True)
class BoundReport:
    name: str
    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    witness: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _report(name: str, lhs: float, rhs: float, witness: Optional[float] = None) -> BoundReport:
    margin = rhs - lhs
    ok = bool(margin >= -MARGIN_RTOL * (1.0 + abs(rhs)))
    return BoundReport(name, float(lhs), float(rhs), float(margin), ok,
                       None if witness is None else float(witness))


def _pointwise(name: str, grid: np.ndarray, lhs: np.ndarray, rhs: np.ndarray) -> BoundReport:
    margins = rhs - lhs
    # rank by margin relative to the pass tolerance so large-|rhs| points don't dominate
    i = int(np.argmin(margins / (1.0 + np.abs(rhs))))
    return _report(name, lhs[i], rhs[i], grid[i])


def _require_centered(prior: Prior, label: str) -> None:
    mu = mean(prior)
    if abs(mu) > CENTER_TOL:
        raise NonCenteredPrior(f"{label} must have mean zero within {CENTER_TOL:g}, got {mu!r}")


def default_x_grid(sigma: float, n: int = X_GRID_POINTS) -> np.ndarray:
    half = 10.0 * sigma + 10.0
    return np.linspace(-half, half, n)


def default_mills_grid(n: int = MILLS_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 40.0, n)


def check_lemma1(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec = QuadratureSpec()) -> BoundReport:
    """E_{G0}[E_{G1}[theta|X]^2] <= 6V + 4 sigma^2 for centred priors with variance <= V."""
    sigma = check_sigma(sigma)
    _require_centered(g0, "g0")
    _require_centered(g1, "g1")
    v = max(variance(g0), variance(g1))
    lhs = risk_quadrature(g0, g1, sigma, spec).second_moment
    return _report("lemma1_second_moment", lhs, 6.0 * v + 4.0 * sigma * sigma)


def check_jensen_denom(g1: Prior, sigma: float, xs: Optional[Iterable[float]] = None) -> BoundReport:
    """log f(x) >= -log(sqrt(2 pi) sigma) - (x^2 + V) / (2 sigma^2), V = E theta^2.

    lhs is the lower bound, rhs the log density, both in the log domain.
    """
    sigma = check_sigma(sigma)
    _require_centered(g1, "g1")
    xs = default_x_grid(sigma) if xs is None else np.asarray(list(xs), dtype=float)
    v = second_moment(g1)
    log_f = log_marginal_density(g1, sigma, xs)
    bound = -LOG_SQRT_2PI - math.log(sigma) - (xs**2 + v) / (2.0 * sigma * sigma)
    return _pointwise("jensen_denominator", xs, bound, log_f)


def check_score_bound(g1: Prior, sigma: float, xs: Optional[Iterable[float]] = None) -> BoundReport:
    """(f'/f)^2 <= sigma^-2 * log(1 / (2 pi sigma^2 f^2))."""
    sigma = check_sigma(sigma)
    xs = default_x_grid(sigma) if xs is None else np.asarray(list(xs), dtype=float)
    score = marginal_score(g1, sigma, xs)
    log_f = log_marginal_density(g1, sigma, xs)
    rhs = -2.0 * (log_f + LOG_SQRT_2PI + math.log(sigma)) / (sigma * sigma)
    return _pointwise("score_bound", xs, score**2, rhs)


def check_mills(xs: Optional[Iterable[float]] = None) -> BoundReport:
    """Upper Gaussian tail: P(Z > x) <= exp(-x^2/2) / 2 for x >= 0."""
    xs = default_mills_grid() if xs is None else np.asarray(list(xs), dtype=float)
    if xs.size and xs.min() < 0:
        raise NegativeInput(f"xs must be nonnegative, got min {xs.min()!r}")
    return _pointwise("mills_ratio", xs, norm.sf(xs), 0.5 * np.exp(-0.5 * xs**2))


def check_tail_condition(g1: Prior, tc: TailCondition, s_grid: Optional[Iterable[float]] = None) -> BoundReport:
    """max(1 - G(s), G(-s)) <= c s^-k on the grid (default: :func:`default_s_grid`)."""
    s = default_s_grid(g1) if s_grid is None else np.asarray(list(s_grid), dtype=float)
    return _pointwise("tail_condition", s, two_sided_tail(g1, s), tc.c * s ** (-tc.k))


def check_markov_tail(g1: Prior, k: float) -> BoundReport:
    """The optimal tail constant never exceeds E|theta|^k."""
    return _report("markov_tail_constant", tail_constant(g1, k), abs_moment(g1, k))


def check_posterior_jensen(g1: Prior, sigma: float, xs: Optional[Iterable[float]] = None) -> BoundReport:
    """E[theta|x]^2 <= E[theta^2|x] pointwise."""
    sigma = check_sigma(sigma)
    xs = default_x_grid(sigma) if xs is None else np.asarray(list(xs), dtype=float)
    pm = posterior_mean(g1, sigma, xs)
    return _pointwise("posterior_jensen", xs, pm**2, posterior_second_moment(g1, sigma, xs))


def check_risk_dominance(g0: Prior, g1: Prior, sigma: float, spec: QuadratureSpec = QuadratureSpec()) -> BoundReport:
    """R <= 2V + 2M with V the larger of the two prior variances."""
    report = risk_quadrature(g0, g1, sigma, spec)
    v = max(variance(g0), variance(g1))
    return _report("risk_dominance", report.risk, risk_upper_from_moment(report.second_moment, v))


def all_bounds(
    g0: Prior,
    g1: Prior,
    sigma: float,
    spec: QuadratureSpec = QuadratureSpec(),
    xs: Optional[Iterable[float]] = None,
    tail: Optional[TailCondition] = None,
    s_grid: Optional[Iterable[float]] = None,
) -> list[BoundReport]:
    """Every check applicable to (g0, g1, sigma), in a fixed order."""
    xs = None if xs is None else np.asarray(list(xs), dtype=float)
    reports = [
        check_lemma1(g0, g1, sigma, spec),
        check_jensen_denom(g1, sigma, xs),
        check_score_bound(g1, sigma, xs),
        check_posterior_jensen(g1, sigma, xs),
        check_risk_dominance(g0, g1, sigma, spec),
        check_mills(),
    ]
    if tail is not None:
        reports.append(check_tail_condition(g1, tail, s_grid))
        reports.append(check_markov_tail(g1, tail.k))
    return reports
