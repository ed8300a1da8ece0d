"""Diffusion estimation for binary outcomes on sparse directed graphs.

The package measures how period-0 outcomes spill over onto the period-1
outcomes of out-neighbors in a directed graph: a point estimate, an
asymptotic confidence interval built from a dependency-pair variance
estimator, and a one-sided confidence lower bound that stays valid when
the observed graph is only a proxy of the causal one (given nonnegative
spillovers).  A seeded Monte Carlo harness reproduces the benchmark
coverage experiments at desk scale.
"""

__version__ = "0.1.0"

from . import cli, dgp, graph, inference, meanfit, montecarlo  # noqa: F401
from .dgp import DgpSpec, Panel, TrueDiffusion, simulate_panel, true_diffusion
from .errors import NetdiffError
from .graph import (
    DegreeStats,
    DirectedGraph,
    barabasi_albert,
    degree_stats,
    erdos_renyi,
    from_edge_list,
    greedy_partition,
    neighborhood_average,
    overlap_pairs,
)
from .inference import (
    DiffusionReport,
    EstimateOptions,
    FittedMeans,
    confidence_interval,
    confidence_lower_bound,
    estimate_cg,
    estimate_diffusion,
    residuals_and_v2,
)
from .meanfit import MeanModel, SimDraws, fit_lasso, fit_probit, pseudo_loglik, simulate_mu1
from .montecarlo import McConfig, McReport, run_mc

__all__ = [
    "__version__",
    "DgpSpec", "Panel", "TrueDiffusion", "simulate_panel", "true_diffusion",
    "NetdiffError",
    "DegreeStats", "DirectedGraph", "barabasi_albert", "degree_stats",
    "erdos_renyi", "from_edge_list", "greedy_partition",
    "neighborhood_average", "overlap_pairs",
    "DiffusionReport", "EstimateOptions", "FittedMeans",
    "confidence_interval", "confidence_lower_bound", "estimate_cg",
    "estimate_diffusion", "residuals_and_v2",
    "MeanModel", "SimDraws", "fit_lasso", "fit_probit", "pseudo_loglik",
    "simulate_mu1",
    "McConfig", "McReport", "run_mc",
]
