"""Sigma sweeps and a derivative-free search for large disagreement risk.

The search maximises R(G1, sigma; G0) over pairs of centred discrete priors
with variance at most ``var_cap`` (optionally with G1 obeying a polynomial
tail bound), and over sigma on a fixed grid.  It produces lower-bound
witnesses for the supremum, nothing more.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegeneratePrior, InfeasibleConfig
from .posterior import check_sigma
from .priors import DiscretePrior, Prior, mean, prior_to_dict, tail_constant, variance
from .risk import QuadratureSpec, RiskReport, risk_quadrature

FEAS_TOL = 1e-9
STEP_DECAY = 0.8
HEAVY_TAIL_MASS = 0.05


@dataclass(frozen=True)
class SearchConfig:
    n_atoms_g0: int = 2
    n_atoms_g1: int = 2
    var_cap: float = 1.0
    sigma_grid: tuple[float, ...] = (1.0,)
    restarts: int = 4
    iters: int = 40
    seed: int = 0
    tail_k: Optional[float] = None
    tail_c: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sigma_grid", tuple(float(s) for s in self.sigma_grid))
        if self.n_atoms_g0 < 1 or self.n_atoms_g1 < 1:
            raise InfeasibleConfig("n_atoms_g0 and n_atoms_g1 must be at least 1")
        if not (math.isfinite(self.var_cap) and self.var_cap > 0):
            raise InfeasibleConfig(f"var_cap must be positive, got {self.var_cap!r}")
        if not self.sigma_grid:
            raise InfeasibleConfig("sigma_grid must be nonempty")
        for s in self.sigma_grid:
            check_sigma(s)
        if list(self.sigma_grid) != sorted(self.sigma_grid):
            raise InfeasibleConfig("sigma_grid must be sorted ascending")
        if self.restarts < 0 or self.iters < 0:
            raise InfeasibleConfig("restarts and iters must be nonnegative")
        if (self.tail_k is None) != (self.tail_c is None):
            raise InfeasibleConfig("tail_k and tail_c must be given together")
        if self.tail_k is not None and not (self.tail_k > 2 and self.tail_c > 0):
            raise InfeasibleConfig("tail constraint requires tail_k > 2 and tail_c > 0")

    @property
    def has_tail(self) -> bool:
        return self.tail_k is not None


@dataclass(frozen=True)
class SearchResult:
    best_g0: DiscretePrior
    best_g1: DiscretePrior
    best_sigma: float
    best_risk: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    best_restart: int = 0

    def to_dict(self) -> dict:
        return {
            "best_g0": prior_to_dict(self.best_g0),
            "best_g1": prior_to_dict(self.best_g1),
            "best_sigma": self.best_sigma,
            "best_risk": self.best_risk,
            "best_restart": self.best_restart,
            "trace": [[i, r] for i, r in self.trace],
        }


def sweep_sigma(g0: Prior, g1: Prior, sigma_grid: Sequence[float], spec: QuadratureSpec = QuadratureSpec()) -> list[RiskReport]:
    grid = list(sigma_grid)
    if not grid:
        raise ValueError("sigma_grid must be nonempty")
    return [risk_quadrature(g0, g1, s, spec) for s in grid]


def _project_arrays(atoms: np.ndarray, weights: np.ndarray, var_cap: float) -> np.ndarray:
    mu = math.fsum(weights * atoms)
    shifted = atoms - mu if mu != 0.0 else atoms
    var = math.fsum(weights * shifted**2)
    if var <= 0.0:
        raise DegeneratePrior("all atoms coincide; no centred prior with positive spread")
    if var > var_cap:
        shifted = shifted * math.sqrt(var_cap / var)
    return shifted


def project_moments(prior: DiscretePrior, var_cap: float) -> DiscretePrior:
    """Centre the atoms, then shrink them toward 0 until the variance is <= var_cap."""
    if len(prior) < 2:
        raise DegeneratePrior("projection needs at least two distinct atoms")
    w = prior.weights_array
    return DiscretePrior(_project_arrays(prior.atoms_array, w, var_cap), w)


# ---------------------------------------------------------------------------
# coordinate search
# ---------------------------------------------------------------------------

@dataclass
class _Side:
    """Search state for one prior: raw atoms and weights (possibly duplicated atoms)."""

    atoms: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.atoms)

    def prior(self) -> DiscretePrior:
        if self.size == 1:
            return DiscretePrior.point_mass()
        return DiscretePrior(self.atoms, self.weights)


def _pad(atoms: list[float], weights: list[float], n: int) -> _Side:
    """Fit a warm start into n slots by splitting atoms (duplicates merge back)."""
    if n == 1:
        return _Side(np.zeros(1), np.ones(1))
    atoms, weights = list(atoms[:n]), list(weights[:n])
    i = 0
    while len(atoms) < n:
        j = i % len(atoms)
        half = weights[j] / 2.0
        weights[j] = half
        atoms.append(atoms[j])
        weights.append(half)
        i += 1
    return _Side(np.array(atoms), np.array(weights))


def _feasible_side(side: _Side, cfg: SearchConfig, is_g1: bool) -> Optional[_Side]:
    if side.size == 1:
        return side
    try:
        atoms = _project_arrays(side.atoms, side.weights, cfg.var_cap)
    except DegeneratePrior:
        return None
    out = _Side(atoms, side.weights)
    if is_g1 and cfg.has_tail:
        tc = tail_constant(out.prior(), cfg.tail_k)
        if tc > cfg.tail_c:
            return None
    return out


def _fit_tail(side: _Side, cfg: SearchConfig) -> _Side:
    """Shrink a centred start until its tail constant meets tail_c (scales as factor^k)."""
    if side.size == 1 or not cfg.has_tail:
        return side
    tc = tail_constant(side.prior(), cfg.tail_k)
    if tc <= cfg.tail_c:
        return side
    factor = (cfg.tail_c / tc) ** (1.0 / cfg.tail_k) * (1.0 - 1e-12)
    return _Side(side.atoms * factor, side.weights)


def _evaluate(g0: DiscretePrior, g1: DiscretePrior, cfg: SearchConfig, spec: QuadratureSpec) -> tuple[float, float]:
    risks = [risk_quadrature(g0, g1, s, spec).risk for s in cfg.sigma_grid]
    i = int(np.argmax(risks))
    return risks[i], cfg.sigma_grid[i]


def _starts(cfg: SearchConfig) -> list[tuple[_Side, _Side]]:
    root = math.sqrt(cfg.var_cap)
    a = math.sqrt(cfg.var_cap / HEAVY_TAIL_MASS)

    def rademacher(n):
        return _pad([-root, root], [0.5, 0.5], n)

    def heavy(n):
        if n < 3:
            return rademacher(n)
        p = HEAVY_TAIL_MASS
        return _pad([-a, 0.0, a], [p / 2, 1.0 - p, p / 2], n)

    starts = [
        (rademacher(cfg.n_atoms_g0), rademacher(cfg.n_atoms_g1)),
        (heavy(cfg.n_atoms_g0), heavy(cfg.n_atoms_g1)),
    ]
    for r in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(r,)))
        sides = []
        for n in (cfg.n_atoms_g0, cfg.n_atoms_g1):
            if n == 1:
                sides.append(_Side(np.zeros(1), np.ones(1)))
                continue
            atoms = rng.uniform(-3.0 * root, 3.0 * root, size=n)
            weights = rng.dirichlet(np.ones(n))
            sides.append(_Side(atoms, weights))
        starts.append((sides[0], sides[1]))
    return starts


def _run_restart(index: int, start: tuple[_Side, _Side], cfg: SearchConfig, spec: QuadratureSpec):
    s0 = _feasible_side(start[0], cfg, False)
    s1 = _feasible_side(start[1], cfg, False)
    if s1 is not None:
        s1 = _feasible_side(_fit_tail(s1, cfg), cfg, True)
    if s0 is None or s1 is None:
        return None
    g0, g1 = s0.prior(), s1.prior()
    best, best_sigma = _evaluate(g0, g1, cfg, spec)
    trace = [(0, best)]

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(index, 1)))
    root = math.sqrt(cfg.var_cap)
    # coordinates: (side, kind, slot) with kind 0 = atom location, 1 = log weight
    coords = [
        (si, kind, j)
        for si, side in enumerate((s0, s1)) if side.size > 1
        for kind in (0, 1)
        for j in range(side.size)
    ]
    sides = [s0, s1]
    for it in range(1, cfg.iters + 1):
        scale = STEP_DECAY ** (it - 1)
        for ci in rng.permutation(len(coords)):
            si, kind, j = coords[ci]
            for direction in (1.0, -1.0):
                cur = sides[si]
                atoms, weights = cur.atoms.copy(), cur.weights.copy()
                if kind == 0:
                    atoms[j] += direction * 0.5 * root * scale
                else:
                    logw = np.log(weights)
                    logw[j] += direction * scale
                    weights = np.exp(logw - logw.max())
                    weights /= weights.sum()
                proposal = _feasible_side(_Side(atoms, weights), cfg, si == 1)
                if proposal is None:
                    continue
                cand = [sides[0], sides[1]]
                cand[si] = proposal
                c0, c1 = cand[0].prior(), cand[1].prior()
                risk, sigma = _evaluate(c0, c1, cfg, spec)
                if risk > best:
                    best, best_sigma = risk, sigma
                    sides = cand
                    g0, g1 = c0, c1
                    break
        trace.append((it, best))
    return best, best_sigma, g0, g1, trace


def _check_feasible(result: SearchResult, cfg: SearchConfig) -> None:
    for label, g in (("g0", result.best_g0), ("g1", result.best_g1)):
        assert abs(mean(g)) <= FEAS_TOL, f"{label} not centred"
        assert variance(g) <= cfg.var_cap * (1 + FEAS_TOL), f"{label} exceeds var_cap"
    if cfg.has_tail and len(result.best_g1) > 1:
        assert tail_constant(result.best_g1, cfg.tail_k) <= cfg.tail_c, "g1 violates tail bound"


def maximize_risk(cfg: SearchConfig, spec: QuadratureSpec = QuadratureSpec(), workers: int = 1) -> SearchResult:
    """Largest risk found over feasible (g0, g1, sigma); deterministic given ``cfg.seed``.

    Restart 0 is the Rademacher pair at the variance cap and restart 1 a
    three-atom heavy-tailed pair; the rest are seeded random starts.  Each
    restart runs a greedy coordinate search over atom locations and log
    weights with geometrically decaying steps, projecting every proposal
    back onto the centred, variance-capped set.
    """
    starts = _starts(cfg)

    def run(i):
        return _run_restart(i, starts[i], cfg, spec)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, range(len(starts))))
    else:
        outcomes = [run(i) for i in range(len(starts))]

    best = None
    trace: list[tuple[int, float]] = []
    offset = 0
    running = -math.inf
    for i, out in enumerate(outcomes):
        if out is None:
            continue
        risk, sigma, g0, g1, rtrace = out
        for it, r in rtrace:
            running = max(running, r)
            trace.append((offset + it, running))
        offset += len(rtrace)
        # strict comparison: ties keep the lowest restart index
        if best is None or risk > best.best_risk:
            best = SearchResult(g0, g1, sigma, risk, [], i)
    if best is None:
        raise InfeasibleConfig("no restart produced a feasible starting pair")
    result = SearchResult(best.best_g0, best.best_g1, best.best_sigma, best.best_risk, trace, best.best_restart)
    _check_feasible(result, cfg)
    return result
