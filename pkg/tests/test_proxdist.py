import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import sparsecov as sc
from sparsecov.proxdist import RHO_CEIL


def _sample_problem(p, n, seed, frac=0.05):
    design = sc.SimDesign(kind="random_sparse", p=p, sparsity_frac=frac, seed=seed)
    truth = sc.make_design(design)
    data = sc.sample_mvn(truth, n, sc.RngStream(seed=seed, stream_id=1))
    return sc.sample_covariance(data)


def test_config_validation():
    for kwargs in (
        {"rho0": 0.0},
        {"rho_growth": 1.0},
        {"rho_max": 0.0},
        {"tol": 0.0},
        {"max_outer": 0},
        {"max_halvings": -1},
        {"ridge_delta": -1e-3},
    ):
        with pytest.raises(ValueError):
            sc.FitConfig(**kwargs)


def test_objective_known_value():
    Sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
    S = np.eye(2)
    # ln det + tr(inv S) = ln 0.75 + 8/3; penalty (2/2) * 2 * 0.25
    expected = math.log(0.75) + 8.0 / 3.0 + 0.5
    got = sc.objective(Sigma, S, sc.SparsityConstraint(0), rho=2.0)
    assert got == pytest.approx(expected, abs=1e-12)


def test_objective_rejects_negative_rho():
    with pytest.raises(ValueError):
        sc.objective(np.eye(2), np.eye(2), sc.SparsityConstraint(0), rho=-1.0)


def test_loss_minimized_at_sample_covariance():
    S = _sample_problem(4, 40, 0)
    at_S = sc.negative_loglik_loss(S, S)
    assert at_S == pytest.approx(sc.log_det_pd(S) + 4.0, abs=1e-10)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        B = rng.standard_normal((4, 4))
        other = B @ B.T + np.eye(4)
        assert sc.negative_loglik_loss(other, S) >= at_S - 1e-10


def test_gradient_zero_at_unconstrained_stationary_point():
    # Sigma = Sigma_k = S with a full constraint set: every term cancels
    S = _sample_problem(3, 30, 1)
    G = sc.surrogate_gradient(S, S, S, sc.SparsityConstraint(3), rho=2.0)
    assert np.max(np.abs(G)) <= 1e-12


def test_gradient_known_value():
    Sigma_k = 2.0 * np.eye(2)
    G = sc.surrogate_gradient(
        Sigma_k, Sigma_k, np.eye(2), sc.SparsityConstraint(0), rho=1.0
    )
    assert_allclose(G, 0.25 * np.eye(2), atol=1e-14)


def test_mm_step_descends():
    S = _sample_problem(6, 60, 2)
    c = sc.SparsityConstraint(3)
    Sigma_k = np.diag(np.diag(S))
    rho = 0.5
    before = sc.objective(Sigma_k, S, c, rho)
    Sigma_next, halvings = sc.mm_step(Sigma_k, S, c, rho)
    assert sc.is_positive_definite(Sigma_next)
    assert sc.objective(Sigma_next, S, c, rho) < before
    assert halvings >= 0


def test_mm_step_exhausts_at_stationary_point():
    # diagonal S with k = 0: the diagonal itself is the global optimum,
    # so the solver returns a zero direction and no strict decrease exists
    S = np.diag([2.0, 5.0, 1.0])
    with pytest.raises(sc.BacktrackExhaustedError) as info:
        sc.mm_step(S, S, sc.SparsityConstraint(0), rho=1.0)
    assert info.value.halvings == 32


def test_fit_diagonal_limit():
    # off-support entries settle at O(1/rho), so a tight tolerance is
    # needed to let rho run high enough before the change test fires
    S = _sample_problem(5, 50, 3)
    result = sc.fit(S, sc.SparsityConstraint(0), sc.FitConfig(tol=1e-9))
    assert result.converged
    assert_allclose(result.sigma_hat, np.diag(np.diag(S)), atol=1e-6)
    assert result.support.sum() == 5
    assert result.final_penalty <= 1e-12


def test_fit_unconstrained_recovers_sample_covariance():
    S = _sample_problem(4, 80, 4)
    result = sc.fit(S, sc.SparsityConstraint(6))
    rel = np.linalg.norm(result.sigma_hat - S) / np.linalg.norm(S)
    assert rel <= 1e-3


def test_fit_result_traces_consistent():
    S = _sample_problem(6, 60, 5)
    cfg = sc.FitConfig()
    result = sc.fit(S, sc.SparsityConstraint(4), cfg)
    assert result.iterations == len(result.objective_trace)
    assert result.iterations == len(result.rho_trace)
    assert result.rho_trace[0] == cfg.rho0
    ratios = np.array(result.rho_trace[1:]) / np.array(result.rho_trace[:-1])
    assert np.all(ratios <= cfg.rho_growth + 1e-12)
    assert result.total_halvings >= 0
    # support counts the projected pattern: k pairs at most, plus diagonal
    off = result.support.sum() - S.shape[0]
    assert off <= 2 * 4


def test_fit_callback_contract():
    S = _sample_problem(5, 50, 6)
    events = []
    sc.fit(S, sc.SparsityConstraint(2), callback=events.append)
    assert [ev["iteration"] for ev in events] == list(range(1, len(events) + 1))
    rhos = [ev["rho"] for ev in events]
    assert all(b >= a for a, b in zip(rhos, rhos[1:]))
    for ev in events:
        assert set(ev) == {
            "iteration",
            "rho",
            "sigma",
            "objective_before",
            "objective",
            "halvings",
            "accepted",
        }


def test_fit_respects_max_outer():
    S = _sample_problem(6, 60, 7)
    result = sc.fit(S, sc.SparsityConstraint(3), sc.FitConfig(max_outer=3))
    assert result.iterations == 3
    assert not result.converged


def test_fit_rho_max_caps_schedule():
    S = _sample_problem(5, 50, 8)
    result = sc.fit(S, sc.SparsityConstraint(2), sc.FitConfig(rho_max=10.0))
    assert max(result.rho_trace) <= 10.0


def test_default_schedule_unbounded_below_overflow_guard():
    assert sc.FitConfig().rho_max == math.inf
    assert RHO_CEIL < math.inf


def test_auto_ridge_fires_only_when_rank_deficient():
    S = _sample_problem(5, 50, 9)
    assert sc.fit(S, sc.SparsityConstraint(2)).ridge_delta == 0.0
    data = sc.sample_mvn(np.eye(6), 3, sc.RngStream(seed=9, stream_id=2))
    S_deficient = sc.sample_covariance(data)
    result = sc.fit(S_deficient, sc.SparsityConstraint(2))
    expected = 1e-4 * np.trace(S_deficient) / 6
    assert result.ridge_delta == pytest.approx(expected)


def test_explicit_ridge_used_verbatim():
    data = sc.sample_mvn(np.eye(5), 3, sc.RngStream(seed=10, stream_id=2))
    S = sc.sample_covariance(data)
    result = sc.fit(S, sc.SparsityConstraint(2), sc.FitConfig(ridge_delta=0.5))
    assert result.ridge_delta == 0.5
    assert result.converged


def test_zero_matrix_rejected():
    with pytest.raises(sc.NotPositiveDefiniteError, match="ridge_delta"):
        sc.fit(np.zeros((3, 3)), sc.SparsityConstraint(0))


def test_fit_correlation_requires_unit_diagonal():
    R = np.array([[1.0, 0.2], [0.2, 1.1]])
    with pytest.raises(ValueError, match="unit diagonal"):
        sc.fit_correlation(R, k=1)


def test_fit_correlation_identity_limit():
    R = 0.7 * np.eye(5) + 0.3 * np.ones((5, 5))
    result = sc.fit_correlation(R, k=0)
    assert result.converged
    assert np.max(np.abs(result.sigma_hat - np.eye(5))) <= 1e-3
    assert result.final_penalty <= 1e-6


def test_fit_correlation_keeps_requested_pairs():
    R = np.eye(4)
    R[0, 1] = R[1, 0] = 0.6
    R[2, 3] = R[3, 2] = 0.4
    result = sc.fit_correlation(R, k=2)
    assert result.converged
    assert result.support[0, 1] and result.support[2, 3]
    assert not result.support[0, 2]
