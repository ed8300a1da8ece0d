import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from netdiff.dgp import DgpSpec, gen_covariates, gen_y0, simulate_panel
from netdiff.errors import (
    EmptySubsetError,
    NonFiniteError,
    NotConvergedError,
    SingularError,
)
from netdiff.graph import from_edge_list, neighborhood_average
from netdiff.meanfit import (
    CLAMP,
    MeanModel,
    conditional_mean_y1,
    fit_lasso,
    fit_mean_model,
    fit_probit,
    kkt_residual,
    predict_mu0,
    pseudo_loglik,
    simulate_mu1,
)

from conftest import random_graph
from oracles import exact_simulated_means


# --- pseudo log-likelihood ---------------------------------------------

def test_loglik_at_zero_balanced():
    y = np.array([0.0, 1.0] * 25)
    value, _ = pseudo_loglik(np.zeros(2), y, np.ones((50, 2)))
    assert value == pytest.approx(50 * np.log(0.5), rel=1e-12)


def test_loglik_rejects_nonfinite_design():
    with pytest.raises(NonFiniteError):
        pseudo_loglik(np.zeros(1), np.zeros(3), np.array([[1.0], [np.nan], [0.0]]))


def test_loglik_finite_under_perfect_separation():
    design = np.array([[100.0], [-100.0]])
    y = np.array([1.0, 0.0])
    value, grad = pseudo_loglik(np.array([5.0]), y, design)
    assert np.isfinite(value) and np.isfinite(grad).all()


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(100):
        n, k = int(rng.integers(10, 60)), int(rng.integers(1, 6))
        design = rng.normal(size=(n, k))
        y = (rng.random(n) < 0.5).astype(float)
        theta = rng.normal(size=k) * 0.7
        _, grad = pseudo_loglik(theta, y, design)
        fd = np.empty(k)
        for j in range(k):
            e = np.zeros(k)
            e[j] = h
            fd[j] = (pseudo_loglik(theta + e, y, design)[0]
                     - pseudo_loglik(theta - e, y, design)[0]) / (2 * h)
        scale = max(1.0, np.abs(fd).max())
        assert np.abs(grad - fd).max() / scale < 1e-6


# --- probit fit ---------------------------------------------------------

def test_probit_intercept_only_closed_form():
    rng = np.random.default_rng(0)
    y = (rng.random(5000) < 0.3).astype(float)
    coef = fit_probit(y, np.ones((5000, 1)))
    assert coef[0] == pytest.approx(ndtri(y.mean()), abs=1e-8)


def test_probit_consistency_large_n():
    spec = DgpSpec.benchmark_lowdim(1.0)
    x = gen_covariates(20000, 5, seed=1)
    y0 = gen_y0(x, spec, seed=2)
    coef = fit_probit(y0, np.column_stack([np.ones(20000), x]))
    assert np.abs(coef - np.r_[0.0, spec.gamma0]).max() < 0.05


def test_probit_degenerate_outcome_raises():
    with pytest.raises((SingularError, NotConvergedError)):
        fit_probit(np.zeros(50), np.ones((50, 1)))


def test_probit_loglik_nondecreasing_from_start():
    rng = np.random.default_rng(9)
    design = rng.normal(size=(200, 3))
    y = (rng.random(200) < ndtr(design @ np.array([0.5, -1.0, 0.2]))).astype(float)
    coef = fit_probit(y, design)
    assert pseudo_loglik(coef, y, design)[0] >= pseudo_loglik(np.zeros(3), y, design)[0]


def test_probit_subset_fit():
    rng = np.random.default_rng(11)
    design = np.column_stack([np.ones(400), rng.normal(size=400)])
    y = (rng.random(400) < 0.4).astype(float)
    subset = np.zeros(400, dtype=bool)
    subset[:200] = True
    coef = fit_probit(y, design, subset=subset)
    coef_direct = fit_probit(y[:200], design[:200])
    assert coef == pytest.approx(coef_direct, abs=1e-10)


# --- lasso ---------------------------------------------------------------

def _small_panel(delta0=1.0, n=400, seed=9):
    g = random_graph(n, 2 * n, np.random.default_rng(3))
    panel = simulate_panel(g, DgpSpec.benchmark_lowdim(delta0), seed=seed)
    ybar = neighborhood_average(g, panel.y0)
    return g, panel, ybar


def test_lasso_zero_penalty_matches_probit():
    # the penalized maximizer at lambda = 0 is the plain probit maximizer
    from netdiff.meanfit import _fista
    g, panel, ybar = _small_panel()
    sub = panel.y0 == 0
    design = np.column_stack([ybar, np.ones(panel.n), panel.x])
    theta_ml = fit_probit(panel.y1, design, subset=sub)
    penalized = np.zeros(7, dtype=bool)
    penalized[2:] = True
    theta, _ = _fista(panel.y1[sub].astype(float), design[sub], penalized, 0.0,
                      np.zeros(7), tol=1e-12, max_iter=50_000)
    assert theta == pytest.approx(theta_ml, abs=1e-4)


def test_lasso_full_shrinkage_at_lambda_max():
    from netdiff.meanfit import _fista, _lambda_grid
    g, panel, ybar = _small_panel()
    sub = panel.y0 == 0
    design = np.column_stack([ybar, np.ones(panel.n), panel.x])[sub]
    y = panel.y1[sub].astype(float)
    penalized = np.zeros(7, dtype=bool)
    penalized[2:] = True
    lambdas, base = _lambda_grid(y, design, penalized, 10, 1e-3)
    theta, _ = _fista(y, design, penalized, lambdas[0] * (1 + 1e-9), base,
                      tol=1e-10, max_iter=5000)
    assert np.all(theta[penalized] == 0.0)


def test_lasso_subgradient_optimality_and_path():
    spec = DgpSpec.benchmark_highdim(1.0, p=120)
    g = random_graph(250, 700, np.random.default_rng(8))
    panel = simulate_panel(g, spec, seed=21)
    ybar = neighborhood_average(g, panel.y0)
    model = fit_lasso(panel.y1, ybar, panel.y0, panel.x, folds=5, seed=2,
                      y0_model="intercept")
    lam = model.lasso_lambda
    sub = panel.y0 == 0
    design = np.column_stack([ybar, np.ones(panel.n), panel.x])
    penalized = np.zeros(design.shape[1], dtype=bool)
    penalized[2:] = True
    theta = np.r_[model.delta_hat, model.beta_hat]
    _, grad = pseudo_loglik(theta, panel.y1[sub], design[sub])
    # stationarity: |score| <= lam + tol on zeros, score = lam*sign on support
    tol = 1e-3 * max(1.0, lam)
    beta = theta[penalized]
    zero = beta == 0.0
    assert np.all(np.abs(grad[penalized][zero]) <= lam + tol)
    nz = ~zero
    if nz.any():
        assert np.abs(grad[penalized][nz] - lam * np.sign(beta[nz])).max() <= tol
    assert np.abs(grad[~penalized]).max() <= tol
    assert kkt_residual(theta, grad, penalized, lam) <= tol
    # l1 norm of the path never grows as the penalty grows
    path_l1 = model.fit_diagnostics["period1"]["path_l1"]
    assert np.all(np.diff(path_l1) >= -1e-8)


def test_lasso_empty_subset_raises():
    x = gen_covariates(20, 3, seed=0)
    with pytest.raises(EmptySubsetError):
        fit_lasso(np.zeros(20), np.zeros(20), np.ones(20, dtype=int), x,
                  folds=3, seed=0)


def test_lasso_support_recovery_repeated_seeds():
    # sparse design: the five true coordinates should dominate |beta_hat|
    hits = 0
    seeds = range(10)
    for s in seeds:
        spec = DgpSpec.benchmark_highdim(1.0, p=500)
        g = random_graph(500, 1500, np.random.default_rng(100 + s))
        panel = simulate_panel(g, spec, seed=200 + s)
        ybar = neighborhood_average(g, panel.y0)
        model = fit_lasso(panel.y1, ybar, panel.y0, panel.x, folds=10,
                          seed=300 + s, y0_model="intercept")
        top5 = set(np.argsort(-np.abs(model.beta_hat[1:]))[:5].tolist())
        hits += top5 == {0, 1, 2, 3, 4}
    assert hits >= 9


# --- predictions ---------------------------------------------------------

def test_predict_mu0_zero_coefficients():
    model = MeanModel(gamma_hat=np.zeros(4), delta_hat=0.0, beta_hat=np.zeros(4))
    x = gen_covariates(50, 3, seed=1)
    assert np.all(predict_mu0(x, model) == 0.5)


def test_predict_mu0_intercept_only_equals_sample_mean():
    rng = np.random.default_rng(2)
    y0 = (rng.random(800) < 0.3).astype(int)
    x = gen_covariates(800, 4, seed=3)
    model = MeanModel(gamma_hat=np.array([ndtri(np.clip(y0.mean(), CLAMP, 1 - CLAMP))]),
                      delta_hat=0.0, beta_hat=np.zeros(5))
    mu0 = predict_mu0(x, model)
    assert np.allclose(mu0, y0.mean(), atol=1e-12)


def test_predict_mu0_monotone_in_positive_coordinate():
    rng = np.random.default_rng(4)
    model = MeanModel(gamma_hat=np.array([0.1, 0.8, -0.5]), delta_hat=0.0,
                      beta_hat=np.zeros(3))
    x = rng.normal(size=(40, 2))
    bumped = x.copy()
    bumped[:, 0] += 0.5  # positive coefficient
    assert np.all(predict_mu0(bumped, model) >= predict_mu0(x, model))


# --- simulated period-1 means --------------------------------------------

def test_simulate_mu1_spillover_free_is_exact():
    g = random_graph(60, 150, np.random.default_rng(6))
    x = gen_covariates(60, 3, seed=7)
    model = MeanModel(gamma_hat=np.array([0.2, 0.1, 0.0, -0.3]), delta_hat=0.0,
                      beta_hat=np.array([0.5, 1.0, -1.0, 0.2]), irreversible=False)
    mu1_a, _ = simulate_mu1(g, x, model, R=1, seed=1)
    mu1_b, _ = simulate_mu1(g, x, model, R=64, seed=2)
    direct = conditional_mean_y1(model, np.zeros(60), np.zeros(60), x)
    assert np.allclose(mu1_a, direct, atol=1e-12)
    assert np.allclose(mu1_b, direct, atol=1e-12)


def test_simulate_mu1_matches_enumeration():
    g = from_edge_list([(0, 1), (0, 2), (3, 0), (2, 1)], 4)
    x = gen_covariates(4, 2, seed=8)
    model = MeanModel(gamma_hat=np.array([-0.3, 0.4, 0.2]), delta_hat=0.8,
                      beta_hat=np.array([0.1, 0.6, -0.4]), irreversible=True)
    mu0 = predict_mu0(x, model)
    exact_mu1, _ = exact_simulated_means(g, x, model, mu0)
    R = 100_000
    mu1, draws = simulate_mu1(g, x, model, R=R, seed=9)
    g1 = draws.eps1_draws + mu1
    se = g1.std(axis=0, ddof=1) / np.sqrt(R)
    assert np.all(np.abs(mu1 - exact_mu1) <= 3 * se + 1e-12)


def test_simulate_mu1_deterministic_and_degenerate_probs():
    g = from_edge_list([(0, 1), (1, 0), (2, 0)], 3)
    x = gen_covariates(3, 2, seed=10)
    model = MeanModel(gamma_hat=np.array([40.0, 0.0, 0.0]), delta_hat=0.3,
                      beta_hat=np.array([0.0, 0.1, 0.1]), irreversible=False)
    mu1_a, draws_a = simulate_mu1(g, x, model, R=2000, seed=11)
    mu1_b, draws_b = simulate_mu1(g, x, model, R=2000, seed=11)
    assert np.array_equal(mu1_a, mu1_b)
    assert np.array_equal(draws_a.y0_draws, draws_b.y0_draws)
    # mu0_hat clamps at 1 - 1e-6; this seed never draws above it
    assert np.all(draws_a.ybar_draws == 1.0)


def test_simulate_mu1_relabeling_consistency():
    # draws attach to node labels, so exact bit equality cannot survive a
    # relabeling; the simulated means must still agree to Monte Carlo error
    rng = np.random.default_rng(14)
    g = random_graph(8, 20, rng)
    x = gen_covariates(8, 2, seed=15)
    model = MeanModel(gamma_hat=np.array([-0.2, 0.3, 0.1]), delta_hat=0.9,
                      beta_hat=np.array([0.2, 0.5, -0.3]), irreversible=True)
    perm = rng.permutation(8)
    x_perm = np.empty_like(x)
    x_perm[perm] = x
    R = 60_000
    mu1, _ = simulate_mu1(g, x, model, R=R, seed=16)
    mu1_p, _ = simulate_mu1(g.relabel(perm), x_perm, model, R=R, seed=17)
    tol = 4 * 0.5 / np.sqrt(R)
    assert np.all(np.abs(mu1_p[perm] - mu1) < tol + 1e-12)


def test_mean_model_json_round_trip():
    model = MeanModel(gamma_hat=np.array([0.1, -0.2]), delta_hat=1.5,
                      beta_hat=np.array([0.3, 0.0, -0.7]), irreversible=True,
                      lasso_lambda=2.5,
                      fit_diagnostics={"period1": {"lambda": 2.5,
                                                   "path_l1": np.array([0.0, 1.0])}})
    back = MeanModel.from_json(model.to_json())
    assert np.array_equal(back.gamma_hat, model.gamma_hat)
    assert back.delta_hat == model.delta_hat
    assert np.array_equal(back.beta_hat, model.beta_hat)
    assert back.lasso_lambda == 2.5


def test_fit_mean_model_mle_end_to_end():
    g = random_graph(300, 600, np.random.default_rng(12))
    panel = simulate_panel(g, DgpSpec.benchmark_lowdim(1.0), seed=13)
    model = fit_mean_model(panel, g, method="mle")
    assert model.lasso_lambda == 0.0
    assert model.gamma_hat.size == 6
    assert model.beta_hat.size == 6
    assert np.isfinite(model.delta_hat)
