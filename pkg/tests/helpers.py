"""Seeded random priors shared by the test modules."""

from __future__ import annotations

import math

import numpy as np

from disagreement_risk.priors import DiscretePrior, GaussianMixturePrior


def random_discrete(rng: np.random.Generator, max_atoms: int = 10, *, centered: bool = True,
                    max_var: float | None = None, scale: float = 3.0) -> DiscretePrior:
    n = int(rng.integers(2, max_atoms + 1))
    atoms = rng.uniform(-scale, scale, size=n)
    weights = rng.dirichlet(np.ones(n))
    if centered:
        atoms = atoms - math.fsum(weights * atoms)
    if max_var is not None:
        var = math.fsum(weights * (atoms - math.fsum(weights * atoms)) ** 2)
        target = rng.uniform(0.05, 1.0) * max_var
        atoms = atoms * math.sqrt(target / var)
    return DiscretePrior(atoms, weights)


def random_mixture(rng: np.random.Generator, max_components: int = 4, *, centered: bool = True) -> GaussianMixturePrior:
    n = int(rng.integers(1, max_components + 1))
    means = rng.uniform(-3.0, 3.0, size=n)
    weights = rng.dirichlet(np.ones(n))
    if centered:
        means = means - math.fsum(weights * means)
    variances = rng.uniform(0.05, 2.0, size=n)
    return GaussianMixturePrior(means, variances, weights)


def log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
