"""Diffusion estimators, dependency-pair variance, intervals, lower bounds.

The point estimator is a residual cross-moment: with period-0 residuals
summed over each node's in-neighborhood, it averages the product with the
period-1 residual and normalizes by the aggregate period-0 outcome
variance.  Its sampling variance is estimated from a double sum over the
node pairs whose closed in-neighborhoods intersect -- the only pairs whose
contributions can covary -- with a diagonal-only fallback whenever the
pair sum fails to be positive.  Two estimator variants are available:

* ``"plain"``  -- raw period-1 residuals;
* ``"irr"``    -- residuals rescaled by 1/(1 - mu0_hat), the right scaling
  when a node switched in period 0 can never switch again and the target
  conditions on the untreated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri

from ._rng import as_seed_sequence
from .errors import (
    DegenerateV2Error,
    DegenerateVarianceError,
    DimensionMismatchError,
    InvalidAlphaError,
    MissingDrawsError,
)
from .graph import DirectedGraph, degree_stats, overlap_pairs
from .meanfit import CLAMP, MeanModel, SimDraws, fit_mean_model, predict_mu0, simulate_mu1

__all__ = [
    "FittedMeans",
    "DiffusionReport",
    "EstimateOptions",
    "residuals_and_v2",
    "estimate_cg",
    "compute_q_psi",
    "variance",
    "normal_quantile",
    "confidence_interval",
    "confidence_lower_bound",
    "estimate_diffusion",
]

VARIANTS = ("plain", "irr")


@dataclass
class FittedMeans:
    """Fitted means, residuals, and the aggregate period-0 variance.

    ``v2_hat`` is the mean squared period-0 residual, the sample version of
    the aggregated overlap quantity that normalizes the estimator.
    ``draws`` carries the per-draw simulation statistics needed by the
    variance estimator.
    """

    mu0_hat: np.ndarray
    mu1_hat: np.ndarray
    eps0_hat: np.ndarray
    eps1_hat: np.ndarray
    v2_hat: float
    draws: Optional[SimDraws] = None

    @property
    def n(self) -> int:
        return self.mu0_hat.size


def residuals_and_v2(y0, y1, mu0_hat, mu1_hat, draws=None) -> FittedMeans:
    """Residuals for both periods and the aggregate period-0 variance.

    Raises :class:`DegenerateV2Error` when the mean squared period-0
    residual falls below 1e-10, which signals that the aggregated overlap
    condition fails in sample (e.g. a perfect period-0 fit).
    """
    y0 = np.asarray(y0, dtype=np.float64)
    y1 = np.asarray(y1, dtype=np.float64)
    mu0_hat = np.asarray(mu0_hat, dtype=np.float64)
    mu1_hat = np.asarray(mu1_hat, dtype=np.float64)
    if not (y0.shape == y1.shape == mu0_hat.shape == mu1_hat.shape):
        raise DimensionMismatchError("all inputs must share one length")
    eps0 = y0 - mu0_hat
    eps1 = y1 - mu1_hat
    v2 = float(eps0 @ eps0) / y0.size
    if v2 < 1e-10:
        raise DegenerateV2Error(f"v2_hat = {v2:.3e} is numerically zero")
    return FittedMeans(mu0_hat=mu0_hat, mu1_hat=mu1_hat, eps0_hat=eps0,
                       eps1_hat=eps1, v2_hat=v2, draws=draws)


def _period1_residual(fm: FittedMeans, variant: str) -> np.ndarray:
    if variant == "plain":
        return fm.eps1_hat
    if variant == "irr":
        return fm.eps1_hat / np.maximum(1.0 - fm.mu0_hat, CLAMP)
    raise ValueError(f"unknown variant {variant!r}")


def neighborhood_residual_sum(fm: FittedMeans, g: DirectedGraph) -> np.ndarray:
    """Sum of period-0 residuals over each node's in-neighborhood."""
    return np.bincount(g.targets, weights=fm.eps0_hat[g.sources], minlength=g.n)


def estimate_cg(fm: FittedMeans, g: DirectedGraph, variant="plain") -> float:
    """Point estimate of the diffusion measure (one sparse pass)."""
    if fm.n != g.n:
        raise DimensionMismatchError("fitted means and graph disagree on n")
    a = neighborhood_residual_sum(fm, g)
    e1 = _period1_residual(fm, variant)
    return float(e1 @ a) / (g.n * fm.v2_hat)


def compute_q_psi(fm: FittedMeans, g: DirectedGraph, estimate: float,
                  variant="plain"):
    """Per-node influence terms and their estimated conditional means.

    ``q[i]`` is the node's contribution to the estimator's asymptotic
    linear expansion; ``psi[i]`` estimates its conditional mean using the
    retained simulation draws.  The squared-residual correction inside
    ``q`` always uses the raw period-0 residual (it comes from the
    normalization's estimation error), also under the "irr" variant.
    """
    if fm.draws is None:
        raise MissingDrawsError("compute_q_psi needs SimDraws on FittedMeans")
    a = neighborhood_residual_sum(fm, g)
    e1 = _period1_residual(fm, variant)
    q = e1 * a - fm.eps0_hat ** 2 * estimate
    c_i = np.mean(fm.draws.eps1_draws * fm.draws.a_draws, axis=0)
    var0 = fm.mu0_hat * (1.0 - fm.mu0_hat)
    if variant == "plain":
        psi = c_i - var0 * estimate
    else:
        psi = c_i / np.maximum(1.0 - fm.mu0_hat, CLAMP) - var0 * estimate
    return q, psi


def variance(q, psi, fm: FittedMeans, g: DirectedGraph, pairs=None):
    """Dependency-pair variance of the normalized estimator.

    Sums (q - psi) products over all ordered node pairs with intersecting
    closed in-neighborhoods (diagonal included), scaled by n * v2_hat**2.
    Falls back to the always-nonnegative diagonal-only sum when the pair
    sum is not positive.

    Parameters
    ----------
    pairs : optional precomputed ``overlap_pairs(g)`` array.

    Returns
    -------
    (sigma2_g, sigma2_plus, fallback_used)
    """
    u = np.asarray(q, dtype=np.float64) - np.asarray(psi, dtype=np.float64)
    if pairs is None:
        pairs = overlap_pairs(g)
    i1, i2 = pairs[:, 0], pairs[:, 1]
    # Unordered storage: off-diagonal pairs stand for both orders.
    prod = u[i1] * u[i2]
    scale = g.n * fm.v2_hat ** 2
    sigma2_g = float(prod @ np.where(i1 == i2, 1.0, 2.0)) / scale
    sigma2_1 = float(u @ u) / scale
    if sigma2_g > 0.0:
        return sigma2_g, sigma2_g, False
    if sigma2_1 <= 0.0:
        raise DegenerateVarianceError("pair sum and diagonal fallback are both degenerate")
    return sigma2_g, sigma2_1, True


def normal_quantile(prob: float) -> float:
    """Standard normal inverse CDF (well below the 1e-9 accuracy bar)."""
    return float(ndtri(prob))


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InvalidAlphaError(f"alpha must lie in (0, 1), got {alpha}")


def confidence_interval(estimate, sigma_plus, n, alpha=0.05):
    """Symmetric two-sided interval estimate +- z_{1-alpha/2} sigma / sqrt(n)."""
    _check_alpha(alpha)
    half = normal_quantile(1.0 - alpha / 2.0) * sigma_plus / np.sqrt(n)
    return float(estimate - half), float(estimate + half)


def confidence_lower_bound(estimate, sigma_plus, n, alpha=0.05):
    """One-sided bound estimate - z_{1-alpha} sigma / sqrt(n).

    Remains an asymptotically valid lower bound for the diffusion target
    when the observed graph is only a proxy of the causal one, provided
    spillovers are nonnegative.
    """
    _check_alpha(alpha)
    return float(estimate - normal_quantile(1.0 - alpha) * sigma_plus / np.sqrt(n))


@dataclass
class EstimateOptions:
    """Pipeline switches for :func:`estimate_diffusion`.

    ``variant`` picks the estimator scaling; ``irreversible`` (default: tied
    to the variant) declares whether the outcome process forbids switched
    nodes from switching again, which drives the subset fit and the
    (1 - y0) factor in the fitted period-1 mean.  They are separate so the
    plain estimator can still run on irreversible data.
    """

    fit: str = "mle"          # "mle" | "lasso"
    variant: str = "irr"      # "plain" | "irr"
    alpha: float = 0.05
    draws: Optional[int] = None   # simulation draws R; default max(1000, n)
    seed: Optional[int] = None
    folds: int = 10           # CV folds for the lasso route
    y0_fit: Optional[str] = None  # override period-0 fit strategy
    irreversible: Optional[bool] = None

    def __post_init__(self):
        if self.irreversible is None:
            self.irreversible = self.variant == "irr"


@dataclass
class DiffusionReport:
    """Everything needed to audit one estimation run."""

    estimate: float
    sigma_plus: float
    ci_lower: float
    ci_upper: float
    clb: float
    variant: str
    alpha: float
    n: int
    n_draws: int
    d_mx: int
    d_av: float
    fallback_used: bool
    v2_hat: float
    sigma2_g: float
    lasso_lambda: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    model: Optional[MeanModel] = None

    @property
    def ci(self):
        return (self.ci_lower, self.ci_upper)

    def to_json_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "sigma_plus": self.sigma_plus,
            "ci_lower": self.ci_lower,
            "ci_upper": self.ci_upper,
            "clb": self.clb,
            "alpha": self.alpha,
            "variant": self.variant,
            "n": self.n,
            "d_mx": self.d_mx,
            "d_av": self.d_av,
            "fallback_used": self.fallback_used,
        }

    def summary(self) -> str:
        level = 100 * (1 - self.alpha)
        return (
            f"estimate={self.estimate:.4f}  {level:g}% CI=[{self.ci_lower:.4f}, "
            f"{self.ci_upper:.4f}]  CLB={self.clb:.4f}  n={self.n} "
            f"variant={self.variant}"
        )


def estimate_diffusion(panel, g: DirectedGraph, options: EstimateOptions = None,
                       *, model: MeanModel = None, pairs=None) -> DiffusionReport:
    """Full pipeline: fit means, simulate, estimate, and build intervals.

    Runs fit -> predict -> simulate-period-1-means -> residuals ->
    point estimate -> influence terms -> variance -> CI and lower bound.

    ``model`` short-circuits the fitting stage (useful for refitting
    studies); ``pairs`` passes precomputed overlap pairs when the graph is
    reused across many panels.
    """
    options = options or EstimateOptions()
    if options.variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    _check_alpha(options.alpha)
    if panel.n != g.n:
        raise DimensionMismatchError("panel and graph disagree on n")
    seed_fit, seed_sims = as_seed_sequence(options.seed).spawn(2)

    if model is None:
        model = fit_mean_model(
            panel, g, method=options.fit, irreversible=options.irreversible,
            folds=options.folds, seed=seed_fit, y0_fit=options.y0_fit,
        )
    mu0 = predict_mu0(panel.x, model)
    R = options.draws if options.draws is not None else max(1000, g.n)
    mu1, draws = simulate_mu1(g, panel.x, model, R=R, seed=seed_sims)
    fm = residuals_and_v2(panel.y0, panel.y1, mu0, mu1, draws=draws)

    est = estimate_cg(fm, g, options.variant)
    q, psi = compute_q_psi(fm, g, est, options.variant)
    sigma2_g, sigma2_plus, fallback = variance(q, psi, fm, g, pairs=pairs)
    sigma_plus = float(np.sqrt(sigma2_plus))
    lo, hi = confidence_interval(est, sigma_plus, g.n, options.alpha)
    clb = confidence_lower_bound(est, sigma_plus, g.n, options.alpha)
    ds = degree_stats(g)
    return DiffusionReport(
        estimate=est,
        sigma_plus=sigma_plus,
        ci_lower=lo,
        ci_upper=hi,
        clb=clb,
        variant=options.variant,
        alpha=options.alpha,
        n=g.n,
        n_draws=R,
        d_mx=ds.d_mx,
        d_av=ds.d_av,
        fallback_used=fallback,
        v2_hat=fm.v2_hat,
        sigma2_g=sigma2_g,
        lasso_lambda=model.lasso_lambda,
        model=model,
        diagnostics={
            "fit": model.fit_diagnostics,
            "root_n_scaled_rate": ds.d_mx ** 5 * np.sqrt(ds.d_mx * ds.d_av) / np.sqrt(g.n),
        },
    )
