"""Priors over the unknown mean: discrete and Gaussian-mixture families.

Both families are immutable and stored in canonical form, so two priors
describing the same distribution compare equal.  The module also provides
the moment functionals, the CDF, and the smallest constant ``c`` for which
the polynomial tail bound

    max(1 - G(s), G(-s)) <= c * s**(-k)    for all s > 0

holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Union

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp
from scipy.stats import norm

from .errors import InvalidPrior, NonIntegrableTail

WEIGHT_SUM_TOL = 1e-12
TAIL_GRID_POINTS = 1024


def _as_float_tuple(values, name: str) -> tuple[float, ...]:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidPrior(f"{name}: expected a non-empty list of numbers")
    if not np.all(np.isfinite(arr)):
        raise InvalidPrior(f"{name}: all entries must be finite")
    return tuple(float(v) for v in arr)


def _check_weights(weights: tuple[float, ...]) -> None:
    if any(w < 0 for w in weights):
        raise InvalidPrior("weights: entries must be nonnegative")
    total = math.fsum(weights)
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidPrior(f"weights: must sum to 1 within {WEIGHT_SUM_TOL:g}, got {total!r}")


@dataclass(frozen=True)
class DiscretePrior:
    """Finitely supported prior sum_i w_i * delta(atom_i).

    Construction prunes zero weights, merges duplicate atoms and sorts the
    support, so ``atoms`` is strictly increasing and ``weights`` positive.
    """

    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __init__(self, atoms, weights):
        atoms_t = _as_float_tuple(atoms, "atoms")
        weights_t = _as_float_tuple(weights, "weights")
        if len(atoms_t) != len(weights_t):
            raise InvalidPrior("atoms and weights must have equal length")
        _check_weights(weights_t)

        merged: dict[float, float] = {}
        for a, w in zip(atoms_t, weights_t):
            if w > 0.0:
                # -0.0 and 0.0 are the same atom
                key = a + 0.0
                merged[key] = merged.get(key, 0.0) + w
        support = sorted(merged)
        object.__setattr__(self, "atoms", tuple(support))
        object.__setattr__(self, "weights", tuple(merged[a] for a in support))

    @classmethod
    def point_mass(cls, at: float = 0.0) -> DiscretePrior:
        return cls([at], [1.0])

    @classmethod
    def rademacher(cls, scale: float = 1.0) -> DiscretePrior:
        return cls([-scale, scale], [0.5, 0.5])

    @property
    def atoms_array(self) -> np.ndarray:
        return np.array(self.atoms)

    @property
    def weights_array(self) -> np.ndarray:
        return np.array(self.weights)

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class GaussianMixturePrior:
    """Prior sum_i w_i * N(mean_i, variance_i)."""

    means: tuple[float, ...]
    variances: tuple[float, ...]
    weights: tuple[float, ...]

    def __init__(self, means, variances, weights):
        means_t = _as_float_tuple(means, "means")
        vars_t = _as_float_tuple(variances, "variances")
        weights_t = _as_float_tuple(weights, "weights")
        if not len(means_t) == len(vars_t) == len(weights_t):
            raise InvalidPrior("means, variances and weights must have equal length")
        if any(v <= 0 for v in vars_t):
            raise InvalidPrior("variances: entries must be strictly positive")
        _check_weights(weights_t)

        comps = sorted((m + 0.0, v, w) for m, v, w in zip(means_t, vars_t, weights_t) if w > 0.0)
        object.__setattr__(self, "means", tuple(c[0] for c in comps))
        object.__setattr__(self, "variances", tuple(c[1] for c in comps))
        object.__setattr__(self, "weights", tuple(c[2] for c in comps))

    @classmethod
    def normal(cls, mean: float = 0.0, variance: float = 1.0) -> GaussianMixturePrior:
        return cls([mean], [variance], [1.0])

    @property
    def means_array(self) -> np.ndarray:
        return np.array(self.means)

    @property
    def variances_array(self) -> np.ndarray:
        return np.array(self.variances)

    @property
    def weights_array(self) -> np.ndarray:
        return np.array(self.weights)

    def __len__(self) -> int:
        return len(self.means)


Prior = Union[DiscretePrior, GaussianMixturePrior]


@dataclass(frozen=True)
class TailCondition:
    """Exponent ``k > 2`` and constant ``c > 0`` of the polynomial tail bound."""

    k: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 2):
            raise InvalidPrior(f"tail condition requires k > 2, got {self.k!r}")
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidPrior(f"tail condition requires c > 0, got {self.c!r}")


# ---------------------------------------------------------------------------
# moments and distribution function
# ---------------------------------------------------------------------------

def mean(prior: Prior) -> float:
    if isinstance(prior, DiscretePrior):
        return math.fsum(w * a for a, w in zip(prior.atoms, prior.weights))
    return math.fsum(w * m for m, w in zip(prior.means, prior.weights))


def second_moment(prior: Prior) -> float:
    """Raw second moment E[theta^2]."""
    if isinstance(prior, DiscretePrior):
        return math.fsum(w * a * a for a, w in zip(prior.atoms, prior.weights))
    return math.fsum(w * (m * m + v) for m, v, w in zip(prior.means, prior.variances, prior.weights))


def variance(prior: Prior) -> float:
    mu = mean(prior)
    if isinstance(prior, DiscretePrior):
        return math.fsum(w * (a - mu) ** 2 for a, w in zip(prior.atoms, prior.weights))
    return math.fsum(
        w * ((m - mu) ** 2 + v) for m, v, w in zip(prior.means, prior.variances, prior.weights)
    )


def abs_moment(prior: Prior, p: float) -> float:
    """E|theta|^p; exact for discrete priors, adaptive quadrature per mixture component."""
    if isinstance(prior, DiscretePrior):
        return math.fsum(w * abs(a) ** p for a, w in zip(prior.atoms, prior.weights))
    total = 0.0
    for m, v, w in zip(prior.means, prior.variances, prior.weights):
        sd = math.sqrt(v)
        lo, hi = m - 40.0 * sd, m + 40.0 * sd
        val, _ = integrate.quad(
            lambda t: abs(t) ** p * norm.pdf(t, loc=m, scale=sd), lo, hi,
            points=[0.0] if lo < 0.0 < hi else None, epsabs=0.0, epsrel=1e-12, limit=200,
        )
        total += w * val
    return total


def cdf(prior: Prior, s):
    """P(theta <= s), right-continuous at atoms.  Vectorised over ``s``."""
    s_arr = np.asarray(s, dtype=float)
    if isinstance(prior, DiscretePrior):
        cum = np.concatenate([[0.0], np.cumsum(prior.weights_array)])
        idx = np.searchsorted(prior.atoms_array, s_arr, side="right")
        out = np.minimum(cum[idx], 1.0)
    else:
        z = (s_arr[..., None] - prior.means_array) / np.sqrt(prior.variances_array)
        out = norm.cdf(z) @ prior.weights_array
    return float(out) if out.ndim == 0 else out


def survival(prior: Prior, s):
    """P(theta > s), the strict survival function 1 - G(s)."""
    s_arr = np.asarray(s, dtype=float)
    if isinstance(prior, DiscretePrior):
        w = prior.weights_array
        tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        idx = np.searchsorted(prior.atoms_array, s_arr, side="right")
        out = np.minimum(tail[idx], 1.0)
    else:
        z = (s_arr[..., None] - prior.means_array) / np.sqrt(prior.variances_array)
        out = norm.sf(z) @ prior.weights_array
    return float(out) if out.ndim == 0 else out


def two_sided_tail(prior: Prior, s):
    """max(1 - G(s), G(-s)), the left side of the tail bound."""
    s_arr = np.asarray(s, dtype=float)
    return np.maximum(survival(prior, s_arr), cdf(prior, -s_arr))


def _log_two_sided_tail_mixture(prior: GaussianMixturePrior, s: np.ndarray) -> np.ndarray:
    mu = prior.means_array
    sd = np.sqrt(prior.variances_array)
    logw = np.log(prior.weights_array)
    right = logsumexp(logw + norm.logsf((s[:, None] - mu) / sd), axis=1)
    left = logsumexp(logw + norm.logcdf((-s[:, None] - mu) / sd), axis=1)
    return np.maximum(right, left)


def tail_grid_bounds(prior: Prior) -> tuple[float, float]:
    """Range of the log-spaced s-grid used for tail constants and tail checks."""
    if isinstance(prior, DiscretePrior):
        mags = np.abs(prior.atoms_array)
        nonzero = mags[mags > 0]
        if nonzero.size == 0:
            return 1e-6, 1e3
        lo = max(1e-6, 1e-3 * nonzero.min())
        hi = 1e3 * nonzero.max()
    else:
        sd = np.sqrt(prior.variances_array)
        proxy = np.abs(prior.means_array) + sd
        lo = max(1e-6, 1e-3 * float(sd.min()))
        hi = 1e3 * float(proxy.max())
    return lo, hi


def default_s_grid(prior: Prior, n: int = TAIL_GRID_POINTS) -> np.ndarray:
    """Log-spaced s-grid, plus each atom magnitude and its left neighbour.

    Right tails of discrete priors are left-continuous in ``s`` at atoms, so
    the supremum of ``s**k * P(theta > s)`` is only approached from below;
    the neighbour ``nextafter(a, 0)`` makes it visible on the grid.
    """
    lo, hi = tail_grid_bounds(prior)
    grid = np.geomspace(lo, hi, n)
    if isinstance(prior, DiscretePrior):
        mags = np.abs(prior.atoms_array)
        mags = mags[mags > 0]
        grid = np.concatenate([grid, mags, np.nextafter(mags, 0.0)])
    return np.unique(grid)


def tail_constant(prior: Prior, k: float) -> float:
    """Smallest c with max(1 - G(s), G(-s)) <= c * s**(-k) for every s > 0."""
    if not k > 2:
        raise InvalidPrior(f"tail constant requires k > 2, got {k!r}")
    if isinstance(prior, DiscretePrior):
        atoms = prior.atoms_array
        w = prior.weights_array
        # s**k * tail is increasing between jumps, so the sup sits at an atom
        # magnitude m: P(theta >= m) from the right, P(theta <= -m) from the left.
        best = 0.0
        for m in np.unique(np.abs(atoms[atoms != 0])):
            right = math.fsum(w[atoms >= m])
            left = math.fsum(w[atoms <= -m])
            best = max(best, m**k * max(right, left))
        return best
    return _tail_constant_mixture(prior, k)


def _tail_constant_mixture(prior: GaussianMixturePrior, k: float) -> float:
    lo, hi = tail_grid_bounds(prior)
    log_s = np.linspace(math.log(lo), math.log(hi), TAIL_GRID_POINTS)
    vals = k * log_s + _log_two_sided_tail_mixture(prior, np.exp(log_s))
    i = int(np.argmax(vals))
    if i == len(vals) - 1:
        raise NonIntegrableTail(
            f"s^k * tail still increasing at s={hi:g}; tail does not satisfy k={k}"
        )
    a = log_s[max(i - 1, 0)]
    b = log_s[i + 1]

    def neg(ls: float) -> float:
        return -(k * ls + float(_log_two_sided_tail_mixture(prior, np.array([math.exp(ls)]))[0]))

    res = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    best = max(float(vals[i]), -float(res.fun))
    return math.exp(best)


# ---------------------------------------------------------------------------
# sampling and serialisation
# ---------------------------------------------------------------------------

def sample(prior: Prior, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` values of theta from ``prior``."""
    idx = rng.choice(len(prior), size=n, p=prior.weights_array)
    if isinstance(prior, DiscretePrior):
        return prior.atoms_array[idx]
    sd = np.sqrt(prior.variances_array)
    return prior.means_array[idx] + sd[idx] * rng.standard_normal(n)


def prior_to_dict(prior: Prior) -> dict[str, Any]:
    if isinstance(prior, DiscretePrior):
        return {"type": "discrete", "atoms": list(prior.atoms), "weights": list(prior.weights)}
    return {
        "type": "gaussian_mixture",
        "means": list(prior.means),
        "variances": list(prior.variances),
        "weights": list(prior.weights),
    }


def prior_from_dict(data: dict[str, Any]) -> Prior:
    if not isinstance(data, dict):
        raise InvalidPrior("prior: expected a JSON object")
    kind = data.get("type")
    try:
        if kind == "discrete":
            return DiscretePrior(data["atoms"], data["weights"])
        if kind == "gaussian_mixture":
            return GaussianMixturePrior(data["means"], data["variances"], data["weights"])
    except KeyError as exc:
        raise InvalidPrior(f"prior: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidPrior):
            raise
        raise InvalidPrior(f"prior: {exc}") from None
    raise InvalidPrior(f"type: expected 'discrete' or 'gaussian_mixture', got {kind!r}")
