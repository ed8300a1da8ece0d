"""Synthetic two-period panels and their exact diffusion targets.

The simulated process: period-0 outcomes are independent probit (or fixed
Bernoulli) draws; each period-1 outcome goes through a probit index in the
node's covariates plus a spillover term in the in-neighborhood average of
period-0 outcomes, and is forced to 0 for nodes already switched in period 0
when the irreversible flag is on.

``true_diffusion`` computes the weighted average spillover target of the
estimators by brute-force counterfactual simulation: for every edge, the
influencing node's period-0 outcome is pinned to 1 versus 0 while everything
else (including the period-1 shock) is held at its realized draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from ._rng import as_seed_sequence
from .errors import DegenerateWeightsError, DimensionMismatchError
from .graph import DirectedGraph, neighborhood_average

__all__ = [
    "BENCHMARK_GAMMA0",
    "BENCHMARK_BETA0",
    "highdim_beta0",
    "DgpSpec",
    "Panel",
    "gen_covariates",
    "gen_y0",
    "gen_y1",
    "simulate_panel",
    "TrueDiffusion",
    "true_diffusion",
]

# Benchmark coefficient sets used throughout the simulation study.
BENCHMARK_GAMMA0 = np.array([0.1, -0.5, -0.7, 0.3, 0.1])
BENCHMARK_BETA0 = np.array([1.0, -1.0, -0.1, 0.1, 0.1])


def highdim_beta0(p: int) -> np.ndarray:
    """Length-p coefficient vector (1, -1, -1, 1, 1, 0, ..., 0)."""
    if p < 5:
        raise DimensionMismatchError("need p >= 5")
    beta = np.zeros(p)
    beta[:5] = [1.0, -1.0, -1.0, 1.0, 1.0]
    return beta


@dataclass(frozen=True)
class DgpSpec:
    """Parameters of the outcome process.

    The link is the standard normal CDF in both periods.  ``y0_mode``
    selects how period-0 outcomes arise: ``"probit"`` draws them from
    Phi(x @ gamma0), ``"bernoulli"`` from a fixed success probability
    ``pi0`` that ignores the covariates.
    """

    gamma0: np.ndarray
    delta0: float
    beta0: np.ndarray
    y0_mode: str = "probit"
    pi0: float = 0.3
    irreversible: bool = True

    def __post_init__(self):
        if self.y0_mode not in ("probit", "bernoulli"):
            raise ValueError(f"unknown y0_mode {self.y0_mode!r}")
        if not 0.0 < self.pi0 < 1.0:
            raise ValueError("pi0 must lie in (0, 1)")
        object.__setattr__(self, "gamma0", np.asarray(self.gamma0, dtype=np.float64))
        object.__setattr__(self, "beta0", np.asarray(self.beta0, dtype=np.float64))

    @property
    def p(self) -> int:
        return self.beta0.size

    def mu0(self, x) -> np.ndarray:
        """Exact period-0 success probabilities."""
        x = np.asarray(x, dtype=np.float64)
        if self.y0_mode == "bernoulli":
            return np.full(x.shape[0], self.pi0)
        if x.shape[1] != self.gamma0.size:
            raise DimensionMismatchError("covariate dimension does not match gamma0")
        return ndtr(x @ self.gamma0)

    @classmethod
    def benchmark_lowdim(cls, delta0: float) -> "DgpSpec":
        """The 5-covariate probit benchmark design."""
        return cls(gamma0=BENCHMARK_GAMMA0, delta0=delta0, beta0=BENCHMARK_BETA0)

    @classmethod
    def benchmark_highdim(cls, delta0: float, p: int = 500) -> "DgpSpec":
        """The p-covariate sparse design with Bernoulli(0.3) period-0 outcomes."""
        return cls(gamma0=np.zeros(p), delta0=delta0, beta0=highdim_beta0(p),
                   y0_mode="bernoulli", pi0=0.3)


@dataclass
class Panel:
    """Observed data: binary outcome vectors y0, y1 and covariate matrix x."""

    y0: np.ndarray
    y1: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=np.int64)
        self.y1 = np.asarray(self.y1, dtype=np.int64)
        self.x = np.asarray(self.x, dtype=np.float64)
        n = self.y0.shape[0]
        if self.y1.shape != (n,) or self.x.ndim != 2 or self.x.shape[0] != n:
            raise DimensionMismatchError("y0, y1, x must agree on the node count")

    @property
    def n(self) -> int:
        return self.y0.size


def gen_covariates(n, p, seed=None) -> np.ndarray:
    """n x p matrix of independent N(1, 1) entries."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p)) + 1.0


def gen_y0(x, spec: DgpSpec, seed=None) -> np.ndarray:
    """Independent period-0 outcomes: 1{mu0 >= U} with U uniform."""
    rng = np.random.default_rng(seed)
    mu0 = spec.mu0(x)
    return (mu0 >= rng.random(mu0.size)).astype(np.int64)


def gen_y1(g: DirectedGraph, y0, x, spec: DgpSpec, seed=None) -> np.ndarray:
    """Period-1 outcomes from the spillover probit index.

    With the irreversible flag on, nodes with y0 == 1 are forced to 0.
    """
    y0 = np.asarray(y0)
    x = np.asarray(x, dtype=np.float64)
    if y0.shape[0] != g.n or x.shape[0] != g.n:
        raise DimensionMismatchError("y0 and x must match the graph's node count")
    if x.shape[1] != spec.beta0.size:
        raise DimensionMismatchError("covariate dimension does not match beta0")
    rng = np.random.default_rng(seed)
    ybar = neighborhood_average(g, y0)
    index = spec.delta0 * ybar + x @ spec.beta0
    y1 = (index - rng.standard_normal(g.n) > 0).astype(np.int64)
    if spec.irreversible:
        y1 = y1 * (1 - y0)
    return y1


def simulate_panel(g: DirectedGraph, spec: DgpSpec, seed=None) -> Panel:
    """Draw covariates and both outcome periods with derived seed streams."""
    s_x, s_y0, s_y1 = as_seed_sequence(seed).spawn(3)
    x = gen_covariates(g.n, spec.p, s_x)
    y0 = gen_y0(x, spec, s_y0)
    y1 = gen_y1(g, y0, x, spec, s_y1)
    return Panel(y0=y0, y1=y1, x=x)


class TrueDiffusion(NamedTuple):
    """Simulated diffusion targets with their Monte Carlo standard errors."""

    d: float
    d_irr: float
    se_d: float
    se_d_irr: float
    sims: int


def true_diffusion(g: DirectedGraph, x, spec: DgpSpec, sims=100_000,
                   seed=None) -> TrueDiffusion:
    """Weighted average spillover targets by counterfactual simulation.

    Weights are exact from the process (w_j proportional to mu0_j(1-mu0_j)).
    Per replication, one uniform draw per node generates period 0 and one
    normal draw per node serves both counterfactual arms (common random
    numbers), so with a nonnegative spillover coefficient every edge
    contrast is nonnegative pathwise.  The untreated-conditional target
    replaces the realized own-state factor with its expectation, which is
    exact because the contrast is independent of the node's own period-0
    draw.

    Returns both targets with Monte Carlo standard errors of the per-
    replication averages.
    """
    if sims < 1:
        raise ValueError("need sims >= 1")
    x = np.asarray(x, dtype=np.float64)
    mu0 = spec.mu0(x)
    var0 = mu0 * (1.0 - mu0)
    total = var0.sum()
    if total <= 0.0:
        raise DegenerateWeightsError("all period-0 probabilities are 0 or 1")
    w = var0 / total

    t, s = g.targets, g.sources
    deg_t = g.in_degrees[t].astype(np.float64)
    xb_t = (x @ spec.beta0)[t]
    w_s = w[s]
    adj_t = g.in_adjacency().T.tocsr()  # (source x target) for Y0 @ adj_t -> base sums

    rng = np.random.default_rng(seed)
    n_edges = max(g.n_edges, 1)
    chunk = int(np.clip(4_000_000 // n_edges, 16, 4096))
    sum_d = sum_d2 = sum_i = sum_i2 = 0.0
    done = 0
    while done < sims:
        b = min(chunk, sims - done)
        y0 = (mu0 >= rng.random((b, g.n))).astype(np.float64)
        u1 = rng.standard_normal((b, g.n))
        if g.n_edges:
            base = y0 @ adj_t  # (b, n): sum of y0 over in-neighbors
            excl = base[:, t] - y0[:, s]
            z = u1[:, t]
            hi = (spec.delta0 * (excl + 1.0) / deg_t + xb_t > z)
            lo = (spec.delta0 * excl / deg_t + xb_t > z)
            contrast = hi.astype(np.float64) - lo
            rep_irr = contrast @ w_s
            if spec.irreversible:
                rep_d = (contrast * (1.0 - y0[:, t])) @ w_s
            else:
                rep_d = rep_irr
        else:
            rep_irr = rep_d = np.zeros(b)
        sum_d += rep_d.sum()
        sum_d2 += (rep_d ** 2).sum()
        sum_i += rep_irr.sum()
        sum_i2 += (rep_irr ** 2).sum()
        done += b

    def mean_se(total_, total2):
        m = total_ / sims
        var = max(total2 / sims - m * m, 0.0)
        return m, np.sqrt(var / sims)

    d, se_d = mean_se(sum_d, sum_d2)
    d_irr, se_irr = mean_se(sum_i, sum_i2)
    return TrueDiffusion(d=d, d_irr=d_irr, se_d=se_d, se_d_irr=se_irr, sims=sims)
