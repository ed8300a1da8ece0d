"""Conditional-mean models for both periods.

Two fitting routes share one probit pseudo-likelihood: a Newton maximizer
for low-dimensional designs and an l1-penalized proximal-gradient maximizer
with cross-validated penalty for high-dimensional ones.  Period-1 means are
not available in closed form because they average over the unobserved
period-0 configuration of each node's in-neighborhood, so they are computed
by simulating period-0 draws from the fitted period-0 means; the per-draw
statistics are retained because the variance estimator reuses them.

Design-matrix conventions: the period-0 design is ``[1 | x]`` (or just the
intercept when the period-0 mean is modeled as a constant), and the
period-1 design is ``[ybar | 1 | x]`` with the spillover column first and
only the ``x`` block penalized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import (
    DimensionMismatchError,
    EmptySubsetError,
    NonFiniteError,
    NotConvergedError,
    SingularError,
)
from .graph import DirectedGraph, neighborhood_average

__all__ = [
    "CLAMP",
    "MeanModel",
    "SimDraws",
    "pseudo_loglik",
    "fit_probit",
    "fit_lasso",
    "fit_mean_model",
    "predict_mu0",
    "conditional_mean_y1",
    "simulate_mu1",
]

# Probabilities are clamped into [CLAMP, 1 - CLAMP] before any log or any
# 1/(1 - mu) rescaling downstream.
CLAMP = 1e-6

_SQRT2PI = np.sqrt(2.0 * np.pi)


def _npdf(z):
    return np.exp(-0.5 * z * z) / _SQRT2PI


def _clamped_probs(eta):
    return np.clip(ndtr(eta), CLAMP, 1.0 - CLAMP)


@dataclass
class MeanModel:
    """Fitted conditional-mean model for both periods (probit link).

    ``gamma_hat`` holds the period-0 coefficients for ``[1 | x]`` (a single
    entry means an intercept-only model).  ``delta_hat`` multiplies the
    in-neighborhood average of period-0 outcomes and ``beta_hat`` holds the
    period-1 coefficients for ``[1 | x]``; neither delta nor the intercept
    is ever penalized.  ``lasso_lambda`` is 0 for a plain maximum-likelihood
    fit.
    """

    gamma_hat: np.ndarray
    delta_hat: float
    beta_hat: np.ndarray
    irreversible: bool = True
    lasso_lambda: float = 0.0
    link: str = "probit"
    fit_diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "gamma_hat": np.asarray(self.gamma_hat).tolist(),
            "delta_hat": float(self.delta_hat),
            "beta_hat": np.asarray(self.beta_hat).tolist(),
            "irreversible": bool(self.irreversible),
            "lasso_lambda": float(self.lasso_lambda),
            "link": self.link,
            "fit_diagnostics": _jsonable(self.fit_diagnostics),
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MeanModel":
        d = json.loads(text)
        return cls(
            gamma_hat=np.asarray(d["gamma_hat"], dtype=np.float64),
            delta_hat=float(d["delta_hat"]),
            beta_hat=np.asarray(d["beta_hat"], dtype=np.float64),
            irreversible=bool(d["irreversible"]),
            lasso_lambda=float(d["lasso_lambda"]),
            link=d.get("link", "probit"),
            fit_diagnostics=d.get("fit_diagnostics", {}),
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating, np.bool_)):
        return obj.item()
    return obj


@dataclass
class SimDraws:
    """Per-draw statistics from the period-1 mean simulation.

    For draw r and node i: ``y0_draws[r, i]`` is the simulated period-0
    outcome 1{mu0_hat_i >= U}, ``ybar_draws[r, i]`` its in-neighborhood
    average, ``a_draws[r, i]`` the sum of simulated period-0 residuals over
    the in-neighborhood, and ``eps1_draws[r, i]`` the centered fitted
    period-1 mean evaluated at the draw.
    """

    R: int
    y0_draws: np.ndarray
    ybar_draws: np.ndarray
    a_draws: np.ndarray
    eps1_draws: np.ndarray


def pseudo_loglik(theta, y, design):
    """Probit pseudo-log-likelihood and its analytic gradient.

    Success probabilities are clamped into [CLAMP, 1 - CLAMP], so the value
    stays finite even under perfect separation.

    Returns
    -------
    (value, gradient) : float and array of length design.shape[1]
    """
    theta = np.asarray(theta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    design = np.asarray(design, dtype=np.float64)
    if not np.isfinite(design).all():
        raise NonFiniteError("design matrix contains NaN or Inf")
    eta = design @ theta
    p = _clamped_probs(eta)
    value = float(y @ np.log(p) + (1.0 - y) @ np.log(1.0 - p))
    # Where the clamp binds the objective is flat, so the exact derivative
    # of the clamped value is zero for those rows.
    interior = (p > CLAMP) & (p < 1.0 - CLAMP)
    score_eta = _npdf(eta) * (y / p - (1.0 - y) / (1.0 - p)) * interior
    return value, design.T @ score_eta


def _loglik_curvature(theta, y, design):
    """Per-row second derivative of the pseudo-log-likelihood in the index.

    Zero where the probability clamp binds, matching the flat objective.
    """
    eta = design @ theta
    p = _clamped_probs(eta)
    phi = _npdf(eta)
    r1 = phi / p
    r0 = phi / (1.0 - p)
    interior = (p > CLAMP) & (p < 1.0 - CLAMP)
    return (y * (-r1 * (eta + r1)) + (1.0 - y) * (r0 * (eta - r0))) * interior


def fit_probit(y, design, subset=None, tol=1e-8, max_iter=100):
    """Newton-Raphson probit fit with step-halving.

    Maximizes the pseudo-log-likelihood over the rows selected by
    ``subset`` (all rows when None).  Converged when the gradient max-norm
    drops below ``tol``.

    Returns the coefficient vector.  Raises :class:`SingularError` when the
    Hessian is numerically singular and :class:`NotConvergedError` (carrying
    the last iterate) when the iteration cap is hit first.
    """
    theta, _ = _newton_probit(y, design, subset, tol=tol, max_iter=max_iter)
    return theta


def _apply_subset(y, design, subset):
    y = np.asarray(y, dtype=np.float64)
    design = np.asarray(design, dtype=np.float64)
    if design.ndim != 2 or design.shape[0] != y.shape[0]:
        raise DimensionMismatchError("design rows must match y")
    if subset is not None:
        y = y[subset]
        design = design[subset]
    if y.size == 0:
        raise EmptySubsetError("no rows selected for fitting")
    return y, design


def _newton_probit(y, design, subset=None, tol=1e-8, max_iter=100, theta0=None):
    y, design = _apply_subset(y, design, subset)
    k = design.shape[1]
    theta = np.zeros(k) if theta0 is None else np.asarray(theta0, dtype=np.float64).copy()
    value, grad = pseudo_loglik(theta, y, design)
    for it in range(1, max_iter + 1):
        gnorm = float(np.abs(grad).max())
        if gnorm < tol:
            if not np.any(_loglik_curvature(theta, y, design)):
                # Flat everywhere: every probability sits at the clamp, so
                # there is no interior maximizer (e.g. a constant outcome).
                raise SingularError("no interior maximizer: all probabilities clamped")
            return theta, {"iterations": it - 1, "grad_norm": gnorm, "loglik": value}
        curv = _loglik_curvature(theta, y, design)
        hess = design.T @ (curv[:, None] * design)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError as exc:
            raise SingularError("singular Hessian in probit fit") from exc
        if not np.isfinite(step).all():
            raise SingularError("non-finite Newton step in probit fit")
        # Step-halving keeps the pseudo-log-likelihood nondecreasing, up to
        # the evaluation noise of the sum near a flat maximum.
        noise = 1e-11 * (1.0 + abs(value))
        scale = 1.0
        for _ in range(60):
            cand = theta + scale * step
            cand_value, cand_grad = pseudo_loglik(cand, y, design)
            if cand_value >= value - noise:
                break
            scale *= 0.5
        else:
            raise NotConvergedError(
                "step-halving failed to improve the probit pseudo-likelihood",
                coefficients=theta,
                diagnostics={"iterations": it, "grad_norm": gnorm, "loglik": value},
            )
        theta, value, grad = cand, cand_value, cand_grad
    gnorm = float(np.abs(grad).max())
    if gnorm < tol:
        return theta, {"iterations": max_iter, "grad_norm": gnorm, "loglik": value}
    raise NotConvergedError(
        f"probit fit did not converge in {max_iter} iterations",
        coefficients=theta,
        diagnostics={"iterations": max_iter, "grad_norm": gnorm, "loglik": value},
    )


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _lipschitz(design):
    """Upper bound on the loss curvature: the clamped probit index
    curvature never exceeds ~1, times the largest design singular value."""
    v = np.ones(design.shape[1]) / np.sqrt(design.shape[1])
    s = 1.0
    for _ in range(30):
        w = design.T @ (design @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 1.0
        v = w / s
    return 1.05 * s


def _fista(y, design, penalized, lam, theta0, tol=1e-7, max_iter=5000,
           lipschitz=None):
    """Accelerated proximal-gradient maximizer of
    loglik - lam * ||theta[penalized]||_1.

    Nesterov momentum with gradient-mapping restarts; fixed step from a
    Lipschitz bound with backtracking as a safety net.  Stops on an
    absolute objective change below ``tol``.
    """
    x = np.asarray(theta0, dtype=np.float64).copy()
    z = x.copy()
    if lipschitz is None:
        lipschitz = _lipschitz(design)
    t = 1.0 / lipschitz
    tk = 1.0
    obj = np.inf
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        value_z, grad_z = pseudo_loglik(z, y, design)
        g = -grad_z
        while True:
            cand = z - t * g
            cand[penalized] = _soft_threshold(cand[penalized], t * lam)
            diff = cand - z
            cand_value, _ = pseudo_loglik(cand, y, design)
            quad = -value_z + g @ diff + (diff @ diff) / (2.0 * t)
            if -cand_value <= quad + 1e-10 * (1.0 + abs(quad)):
                break
            t *= 0.5
            if t < 1e-18:
                raise NotConvergedError("proximal step collapsed", coefficients=x)
        new_obj = -cand_value + lam * np.abs(cand[penalized]).sum()
        if (z - cand) @ (cand - x) > 0.0:
            # Momentum points uphill; restart it.
            tk = 1.0
            z = cand.copy()
        else:
            tk_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
            z = cand + ((tk - 1.0) / tk_next) * (cand - x)
            tk = tk_next
        x = cand
        if abs(obj - new_obj) < tol:
            obj = new_obj
            converged = True
            break
        obj = new_obj
    return x, {"iterations": n_iter, "objective": obj, "converged": converged}


def _ista(y, design, penalized, lam, theta0, tol=1e-7, max_iter=5000,
          lipschitz=None, kkt_target=None):
    """Monotone proximal-gradient maximizer; slower than :func:`_fista` but
    its per-iteration gradient allows stopping on the subgradient residual
    (``kkt_target``), which the final polish uses."""
    theta = np.asarray(theta0, dtype=np.float64).copy()
    value, grad = pseudo_loglik(theta, y, design)
    obj = -value + lam * np.abs(theta[penalized]).sum()
    if lipschitz is None:
        lipschitz = _lipschitz(design)
    t = 1.0 / lipschitz
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        if kkt_target is not None and kkt_residual(theta, grad, penalized, lam) < kkt_target:
            converged = True
            break
        g = -grad
        while True:
            cand = theta - t * g
            cand[penalized] = _soft_threshold(cand[penalized], t * lam)
            diff = cand - theta
            cand_value, cand_grad = pseudo_loglik(cand, y, design)
            quad = -value + g @ diff + (diff @ diff) / (2.0 * t)
            if -cand_value <= quad + 1e-10 * (1.0 + abs(quad)):
                break
            t *= 0.5
            if t < 1e-18:
                raise NotConvergedError("proximal step collapsed", coefficients=theta)
        new_obj = -cand_value + lam * np.abs(cand[penalized]).sum()
        theta, value, grad = cand, cand_value, cand_grad
        if kkt_target is None and abs(obj - new_obj) < tol:
            obj = new_obj
            converged = True
            break
        obj = new_obj
    return theta, {"iterations": n_iter, "objective": obj,
                   "converged": converged, "grad": grad}


def kkt_residual(theta, grad, penalized, lam):
    """Max violation of the l1 stationarity conditions.

    ``grad`` is the gradient of the (maximized) pseudo-log-likelihood; at an
    exact solution unpenalized coordinates have zero gradient, zero
    penalized coordinates have |gradient| <= lam, and nonzero penalized
    ones have gradient == lam * sign(theta).
    """
    res = float(np.abs(grad[~penalized]).max()) if (~penalized).any() else 0.0
    pen_grad = grad[penalized]
    pen_theta = theta[penalized]
    zero = pen_theta == 0.0
    if zero.any():
        res = max(res, float(np.maximum(np.abs(pen_grad[zero]) - lam, 0.0).max()))
    if (~zero).any():
        res = max(res, float(np.abs(pen_grad[~zero] - lam * np.sign(pen_theta[~zero])).max()))
    return res


def _lambda_grid(y, design, penalized, n_lambdas, lambda_min_ratio, base_theta=None):
    """Descending grid from the smallest fully-shrinking penalty."""
    free = ~penalized
    if base_theta is None:
        theta_free, _ = _newton_probit(y, design[:, free])
        base_theta = np.zeros(design.shape[1])
        base_theta[free] = theta_free
    _, grad = pseudo_loglik(base_theta, y, design)
    lam_max = float(np.abs(grad[penalized]).max())
    if lam_max <= 0.0:
        lam_max = 1.0
    return np.geomspace(lam_max, lam_max * lambda_min_ratio, n_lambdas), base_theta


def _solve_at(y, design, penalized, lam, lam_prev, theta, grad, tol, max_iter,
              kkt_target=None):
    """One grid point, restricted to coordinates surviving the sequential
    strong rule, with KKT verification (and re-solve) on the full set."""
    keep = ~penalized | (theta != 0.0)
    keep |= penalized & (np.abs(grad) >= 2.0 * lam - lam_prev)
    slack = max(1e-8, 1e-6 * lam)
    info = {"iterations": 0, "converged": True}
    for _ in range(30):
        idx = np.flatnonzero(keep)
        sub = np.ascontiguousarray(design[:, idx])
        th_sub, info = _fista(y, sub, penalized[idx], lam, theta[idx], tol=tol,
                              max_iter=max_iter)
        if kkt_target is not None:
            th_sub, info = _ista(y, sub, penalized[idx], lam, th_sub, tol=0.0,
                                 max_iter=max_iter, kkt_target=kkt_target)
        theta = np.zeros(design.shape[1])
        theta[idx] = th_sub
        _, grad = pseudo_loglik(theta, y, design)
        violations = penalized & ~keep & (np.abs(grad) > lam + slack)
        if not violations.any():
            return theta, grad, info
        keep |= violations
    theta, info = _fista(y, design, penalized, lam, theta, tol=tol,
                         max_iter=max_iter)
    if kkt_target is not None:
        theta, info = _ista(y, design, penalized, lam, theta, tol=0.0,
                            max_iter=max_iter, kkt_target=kkt_target)
    _, grad = pseudo_loglik(theta, y, design)
    return theta, grad, info


def _lasso_path(y, design, penalized, lambdas, theta0, tol=1e-7, max_iter=5000):
    """Warm-started solutions down the (descending) penalty grid."""
    thetas = np.empty((lambdas.size, design.shape[1]))
    theta = np.asarray(theta0, dtype=np.float64).copy()
    _, grad = pseudo_loglik(theta, y, design)
    lam_prev = float(lambdas[0])
    for idx, lam in enumerate(lambdas):
        theta, grad, _ = _solve_at(y, design, penalized, float(lam), lam_prev,
                                   theta, grad, tol, max_iter)
        thetas[idx] = theta
        lam_prev = float(lam)
    return thetas


def _cv_choose_lambda(y, design, penalized, folds, rng, n_lambdas,
                      lambda_min_ratio, tol, max_iter):
    """K-fold cross-validation on held-out pseudo-log-likelihood."""
    n = y.shape[0]
    if folds < 2:
        raise ValueError("need folds >= 2")
    folds = min(folds, n)
    lambdas, base_theta = _lambda_grid(y, design, penalized, n_lambdas,
                                       lambda_min_ratio)
    assignment = rng.permutation(n) % folds
    cv = np.zeros(lambdas.size)
    # Penalty selection only needs held-out log-likelihoods to ~1e-3, so the
    # fold fits run at a looser tolerance than the returned solution.
    cv_tol = max(tol, 1e-5)
    for f in range(folds):
        train = assignment != f
        test = ~train
        if train.sum() == 0 or test.sum() == 0:
            continue
        thetas = _lasso_path(y[train], design[train], penalized, lambdas,
                             base_theta, tol=cv_tol, max_iter=max_iter)
        for idx in range(lambdas.size):
            value, _ = pseudo_loglik(thetas[idx], y[test], design[test])
            cv[idx] += value
    best = int(np.argmax(cv))
    return lambdas, cv, best, base_theta


def fit_lasso(y, spillover, y0, x, folds=10, seed=None, *, irreversible=True,
              y0_model="lasso", n_lambdas=50, lambda_min_ratio=1e-3,
              tol=1e-7, max_iter=5000) -> MeanModel:
    """l1-penalized probit fit of the period-1 model with CV-chosen penalty.

    Maximizes the summed pseudo-log-likelihood minus ``lam * ||beta||_1``
    (the spillover coefficient and the intercept stay unpenalized) by
    proximal gradient with backtracking, warm-started down a ``n_lambdas``-
    point log grid running from the smallest fully-shrinking penalty to
    ``lambda_min_ratio`` times it.  The penalty is picked by K-fold
    cross-validation with node-level random folds scored on held-out
    pseudo-log-likelihood.  Under irreversibility only rows with y0 == 0
    enter the fit.

    ``y0_model`` selects the period-0 fit: "lasso" (same machinery on
    ``[1 | x]``), "mle" (Newton), or "intercept" (probit of the sample
    mean, the right choice when period-0 outcomes carry no covariate
    signal).
    """
    y = np.asarray(y, dtype=np.float64)
    spillover = np.asarray(spillover, dtype=np.float64)
    y0 = np.asarray(y0)
    x = np.asarray(x, dtype=np.float64)
    n = y.shape[0]
    if spillover.shape != (n,) or y0.shape != (n,) or x.shape[0] != n:
        raise DimensionMismatchError("y, spillover, y0, x must share the node count")
    rng = np.random.default_rng(seed)

    design1 = np.column_stack([spillover, np.ones(n), x])
    penalized1 = np.zeros(design1.shape[1], dtype=bool)
    penalized1[2:] = True
    subset = (y0 == 0) if irreversible else np.ones(n, dtype=bool)
    if irreversible and not subset.any():
        raise EmptySubsetError("no rows with y0 == 0 to fit the period-1 model")
    theta1, diag1 = _fit_lasso_design(
        y[subset], design1[subset], penalized1, folds, rng, intercept_col=1,
        n_lambdas=n_lambdas, lambda_min_ratio=lambda_min_ratio,
        tol=tol, max_iter=max_iter,
    )

    diag0: dict = {"model": y0_model}
    if y0_model == "intercept":
        mean0 = float(np.clip(np.mean(y0), CLAMP, 1.0 - CLAMP))
        gamma = np.array([ndtri(mean0)])
    elif y0_model == "mle":
        gamma = fit_probit(y0, np.column_stack([np.ones(n), x]))
    elif y0_model == "lasso":
        design0 = np.column_stack([np.ones(n), x])
        penalized0 = np.zeros(design0.shape[1], dtype=bool)
        penalized0[1:] = True
        gamma, d0 = _fit_lasso_design(
            np.asarray(y0, dtype=np.float64), design0, penalized0, folds, rng,
            intercept_col=0, n_lambdas=n_lambdas,
            lambda_min_ratio=lambda_min_ratio, tol=tol, max_iter=max_iter,
        )
        diag0.update(d0)
    else:
        raise ValueError(f"unknown y0_model {y0_model!r}")

    return MeanModel(
        gamma_hat=gamma,
        delta_hat=float(theta1[0]),
        beta_hat=theta1[1:].copy(),
        irreversible=irreversible,
        lasso_lambda=float(diag1["lambda"]),
        fit_diagnostics={"period0": diag0, "period1": diag1},
    )


def _fit_lasso_design(y, design, penalized, folds, rng, *, intercept_col,
                      n_lambdas, lambda_min_ratio, tol, max_iter):
    # Center every non-intercept column.  With a free intercept this is an
    # exact reparametrization (the l1 penalty on the slopes is untouched);
    # it removes the dominant mean direction from the curvature bound, so
    # the proximal steps are orders of magnitude longer.
    means = design.mean(axis=0)
    means[intercept_col] = 0.0
    design = design - means
    lambdas, cv, best, base_theta = _cv_choose_lambda(
        y, design, penalized, folds, rng, n_lambdas, lambda_min_ratio,
        tol, max_iter,
    )
    path = _lasso_path(y, design, penalized, lambdas, base_theta,
                       tol=tol, max_iter=max_iter)
    # Polish the selected solution until the subgradient stationarity
    # conditions hold tightly on the full coordinate set.
    lam = float(lambdas[best])
    kkt_tol = 1e-5 * max(1.0, lam)
    _, grad = pseudo_loglik(path[best], y, design)
    theta, grad, info = _solve_at(y, design, penalized, lam, lam, path[best],
                                  grad, tol, 4 * max_iter, kkt_target=kkt_tol)
    if kkt_residual(theta, grad, penalized, lam) >= kkt_tol:
        raise NotConvergedError(
            "l1 fit did not reach stationarity", coefficients=theta,
            diagnostics={"kkt": kkt_residual(theta, grad, penalized, lam)},
        )
    theta = theta.copy()
    theta[intercept_col] -= means @ theta
    diagnostics = {
        "lambda": lam,
        "lambda_index": best,
        "lambdas": lambdas,
        "cv_loglik": cv,
        "path_l1": np.abs(path[:, penalized]).sum(axis=1),
        "iterations": info["iterations"],
        "objective": info["objective"],
    }
    return theta, diagnostics


def fit_mean_model(panel, g: DirectedGraph, method="mle", *, irreversible=True,
                   folds=10, seed=None, y0_fit=None, n_lambdas=50) -> MeanModel:
    """Fit both periods from a panel; the composition used by the pipeline.

    ``y0_fit`` overrides the period-0 strategy ("mle", "lasso",
    "intercept"); by default it mirrors ``method``.
    """
    ybar = neighborhood_average(g, panel.y0)
    if method == "mle":
        y0_fit = y0_fit or "mle"
        n = panel.n
        if y0_fit == "intercept":
            mean0 = float(np.clip(np.mean(panel.y0), CLAMP, 1.0 - CLAMP))
            gamma = np.array([ndtri(mean0)])
            diag0 = {"model": "intercept"}
        elif y0_fit == "mle":
            gamma = fit_probit(panel.y0, np.column_stack([np.ones(n), panel.x]))
            diag0 = {"model": "mle"}
        else:
            raise ValueError("y0_fit must be 'mle' or 'intercept' with method='mle'")
        design1 = np.column_stack([ybar, np.ones(n), panel.x])
        subset = (panel.y0 == 0) if irreversible else None
        theta1, diag1 = _newton_probit(panel.y1, design1, subset)
        return MeanModel(
            gamma_hat=gamma,
            delta_hat=float(theta1[0]),
            beta_hat=theta1[1:].copy(),
            irreversible=irreversible,
            lasso_lambda=0.0,
            fit_diagnostics={"period0": diag0, "period1": diag1},
        )
    if method == "lasso":
        return fit_lasso(panel.y1, ybar, panel.y0, panel.x, folds=folds,
                         seed=seed, irreversible=irreversible,
                         y0_model=y0_fit or "lasso", n_lambdas=n_lambdas)
    raise ValueError(f"unknown method {method!r}")


def predict_mu0(x, model: MeanModel) -> np.ndarray:
    """Fitted period-0 means, clamped into [CLAMP, 1 - CLAMP]."""
    x = np.asarray(x, dtype=np.float64)
    gamma = np.asarray(model.gamma_hat, dtype=np.float64)
    if gamma.size == 1:
        return np.full(x.shape[0], float(np.clip(ndtr(gamma[0]), CLAMP, 1.0 - CLAMP)))
    if x.shape[1] + 1 != gamma.size:
        raise DimensionMismatchError("covariate dimension does not match gamma_hat")
    return _clamped_probs(gamma[0] + x @ gamma[1:])


def conditional_mean_y1(model: MeanModel, ybar, y0, x) -> np.ndarray:
    """Fitted period-1 conditional mean g1(ybar, y0, x).

    Broadcasts: ``ybar`` and ``y0`` may carry a leading draw axis while
    ``x`` stays (n, p).
    """
    x = np.asarray(x, dtype=np.float64)
    index = model.delta_hat * np.asarray(ybar, dtype=np.float64)
    index = index + (model.beta_hat[0] + x @ model.beta_hat[1:])
    out = _clamped_probs(index)
    if model.irreversible:
        out = out * (1.0 - np.asarray(y0, dtype=np.float64))
    return out


def simulate_mu1(g: DirectedGraph, x, model: MeanModel, R=None, seed=None):
    """Simulated period-1 means plus the per-draw statistics.

    Draws R independent period-0 configurations 1{mu0_hat >= U} with U
    uniform, evaluates the fitted conditional mean at each, and averages.
    R defaults to max(1000, n).

    Returns
    -------
    (mu1_hat, SimDraws)
    """
    x = np.asarray(x, dtype=np.float64)
    n = g.n
    if x.shape[0] != n:
        raise DimensionMismatchError("x must have one row per node")
    if R is None:
        R = max(1000, n)
    if R < 1:
        raise ValueError("need R >= 1")
    rng = np.random.default_rng(seed)
    mu0 = predict_mu0(x, model)
    y0_draws = (mu0 >= rng.random((R, n))).astype(np.int8)
    adj_t = g.in_adjacency().T.tocsr()
    y0f = y0_draws.astype(np.float64)
    sums = y0f @ adj_t
    ybar_draws = sums / np.maximum(g.in_degrees, 1)
    a_draws = sums - (mu0 @ adj_t)
    g1 = conditional_mean_y1(model, ybar_draws, y0f, x)
    mu1_hat = g1.mean(axis=0)
    draws = SimDraws(
        R=int(R),
        y0_draws=y0_draws,
        ybar_draws=ybar_draws,
        a_draws=a_draws,
        eps1_draws=g1 - mu1_hat,
    )
    return mu1_hat, draws
