"""Penalized maximum likelihood covariance estimation by proximal distance.

The estimator minimizes

    h_rho(Sigma) = ln det Sigma + tr(Sigma^{-1} S) + (rho/2) * dist(Sigma, C)^2

where C is the set of symmetric matrices with at most k nonzero strict
upper-triangular entries (diagonal free in covariance mode, fixed to one
in correlation mode).  Each outer iteration majorizes the squared
distance at the current iterate, solves the resulting stationarity
equation in closed form (see :mod:`sparsecov.sylvester`), and
backtracks by step halving until the trial point is positive definite
and strictly decreases the objective.  The penalty weight rho follows a
geometric schedule so that iterates are pushed onto the sparse set as
rho grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from .matcore import (
    NotPositiveDefiniteError,
    as_symmetric,
    cholesky_pd,
    inverse_pd,
)
from .sparsity import SparsityConstraint, support_mask
from .sylvester import SurrogateSystem, solve_spectral

__all__ = [
    "FitConfig",
    "FitResult",
    "BacktrackExhaustedError",
    "negative_loglik_loss",
    "objective",
    "surrogate_gradient",
    "mm_step",
    "fit",
    "fit_correlation",
]

# Relative eigenvalue floor below which S gets an automatic ridge.
RIDGE_EIG_RTOL = 1e-10
# Automatic ridge size, as a multiple of mean variance trace(S)/p.  Must be
# large enough that iterates near the ridged spectrum stay numerically PD
# under the growing penalty; smaller values let rank-deficient fits stall.
RIDGE_SCALE = 1e-4
# Absolute ceiling on rho, below float overflow.
RHO_CEIL = 1e300

# Terminal refinement: the single-step schedule leaves an O(1/rho) lag in
# the coordinates the anchored majorizer pins to the previous iterate, so
# after the loop exits we equilibrate at the final rho until the gradient
# of the penalized objective clears this relative tolerance.
STATIONARITY_RTOL = 1e-3
REFINE_MAX = 60
POLISH_MAX = 50
POLISH_COORD_CAP = 256


class BacktrackExhaustedError(RuntimeError):
    """No step size in the halving schedule was accepted.

    Raised by :func:`mm_step` when every candidate
    ``Sigma_k + 2^{-s} (Sigma_hat - Sigma_k)`` for ``s = 0..max_halvings``
    fails positive definiteness or strict objective decrease.  The fit
    driver treats this as stationarity at the current penalty weight.
    """

    def __init__(self, message: str, halvings: int):
        super().__init__(message)
        self.halvings = halvings


@dataclass(frozen=True)
class FitConfig:
    """Tuning knobs for the outer MM loop.

    Parameters
    ----------
    rho0 : float
        Initial penalty weight.
    rho_growth : float
        Geometric growth factor applied after every outer iteration.
    rho_max : float
        Cap on the penalty weight, infinite by default.  An uncapped
        schedule is what drives badly conditioned fits (p > n with a
        tiny ridge) onto the constraint set; capping freezes them mid
        descent.  Finite caps remain useful for studying feasibility in
        the growing-rho limit.  The schedule always stops at 1e300 to
        keep the arithmetic finite.
    tol : float
        Relative objective-change threshold for convergence.
    max_outer : int
        Outer iteration budget.
    max_halvings : int
        Largest step-halving exponent tried per iteration.
    ridge_delta : float
        Explicit ridge added to S before fitting.  Zero means automatic:
        a ridge of ``1e-4 * trace(S)/p`` is applied only when
        ``lambda_min(S) < 1e-10 * lambda_max(S)``.
    """

    rho0: float = 0.1
    rho_growth: float = 1.2
    rho_max: float = math.inf
    tol: float = 1e-6
    max_outer: int = 500
    max_halvings: int = 32
    ridge_delta: float = 0.0

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        if not self.rho_growth > 1:
            raise ValueError(f"rho_growth must exceed 1, got {self.rho_growth}")
        if not self.rho_max > 0:
            raise ValueError(f"rho_max must be positive, got {self.rho_max}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be at least 1, got {self.max_outer}")
        if self.max_halvings < 0:
            raise ValueError(
                f"max_halvings must be nonnegative, got {self.max_halvings}"
            )
        if self.ridge_delta < 0:
            raise ValueError(
                f"ridge_delta must be nonnegative, got {self.ridge_delta}"
            )


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit.

    ``sigma_hat`` is the final iterate, positive definite by
    construction.  ``support`` marks the exact nonzero pattern of its
    projection onto the constraint set, which is the sparsity pattern
    the penalty drove the iterate toward; ``final_penalty`` is the
    squared distance between the two at exit.
    """

    sigma_hat: np.ndarray
    objective_trace: list[float]
    rho_trace: list[float]
    iterations: int
    total_halvings: int
    converged: bool
    final_penalty: float
    support: np.ndarray
    ridge_delta: float = 0.0


def _loss_parts(Sigma: np.ndarray, S: np.ndarray) -> float:
    """ln det Sigma + tr(Sigma^{-1} S); raises if Sigma is not PD."""
    L = cholesky_pd(Sigma)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return logdet + float(np.trace(cho_solve((L, True), S)))


def negative_loglik_loss(Sigma: np.ndarray, S: np.ndarray) -> float:
    """Gaussian negative log-likelihood loss ``ln det Sigma + tr(Sigma^{-1} S)``.

    Raises
    ------
    NotPositiveDefiniteError
        If ``Sigma`` is not positive definite (the loss is +inf there).
    """
    Sigma = as_symmetric(Sigma)
    S = as_symmetric(S)
    if Sigma.shape != S.shape:
        raise ValueError(f"shape mismatch: {Sigma.shape} vs {S.shape}")
    return _loss_parts(Sigma, S)


def objective(
    Sigma: np.ndarray, S: np.ndarray, c: SparsityConstraint, rho: float
) -> float:
    """Penalized objective ``negative_loglik_loss + (rho/2) dist(Sigma, C)^2``."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    Sigma = as_symmetric(Sigma)
    S = as_symmetric(S)
    if Sigma.shape != S.shape:
        raise ValueError(f"shape mismatch: {Sigma.shape} vs {S.shape}")
    return _loss_parts(Sigma, S) + 0.5 * rho * c.squared_distance(Sigma)


def surrogate_gradient(
    Sigma: np.ndarray,
    Sigma_k: np.ndarray,
    S: np.ndarray,
    c: SparsityConstraint,
    rho: float,
) -> np.ndarray:
    """Gradient of the quadratic surrogate anchored at ``Sigma_k``.

    The surrogate replaces the loss by its second-order expansion with
    the Fisher scoring Hessian and the squared distance by the anchored
    majorizer, giving

        grad = A - A S A + A (Sigma - Sigma_k) A + rho (Sigma - P(Sigma_k))

    with ``A = Sigma_k^{-1}`` and ``P`` the constraint projection.  At
    ``Sigma = Sigma_k`` this is the stationarity residual of the full
    objective.
    """
    Sigma = as_symmetric(Sigma)
    Sigma_k = as_symmetric(Sigma_k)
    S = as_symmetric(S)
    A = inverse_pd(Sigma_k)
    D = Sigma - Sigma_k
    G = A - A @ S @ A + A @ D @ A + rho * (Sigma - c.project(Sigma_k))
    return (G + G.T) / 2.0


def _mm_step(
    Sigma_k: np.ndarray,
    S: np.ndarray,
    c: SparsityConstraint,
    rho: float,
    max_halvings: int,
    h_k: float | None = None,
) -> tuple[np.ndarray, int, float]:
    """One accepted MM step; returns (Sigma_next, halvings, h_next)."""
    A = inverse_pd(Sigma_k)
    C_k = rho * c.project(Sigma_k) + A @ S @ A
    C_k = (C_k + C_k.T) / 2.0  # the triple product drifts by O(eps)
    system = SurrogateSystem(Sigma_k, C_k, rho, A)
    Sigma_hat = solve_spectral(system)

    if h_k is None:
        h_k = _loss_parts(Sigma_k, S) + 0.5 * rho * c.squared_distance(Sigma_k)

    direction = Sigma_hat - Sigma_k
    for s in range(max_halvings + 1):
        candidate = Sigma_k + 0.5**s * direction
        candidate = (candidate + candidate.T) / 2.0
        try:
            h_cand = _loss_parts(candidate, S)
        except NotPositiveDefiniteError:
            continue
        h_cand += 0.5 * rho * c.squared_distance(candidate)
        if h_cand < h_k:
            return candidate, s, h_cand
    raise BacktrackExhaustedError(
        f"no accepted step within {max_halvings} halvings at rho={rho:.3e}; "
        "iterate is stationary or the update is numerically degenerate",
        halvings=max_halvings,
    )


def mm_step(
    Sigma_k: np.ndarray,
    S: np.ndarray,
    c: SparsityConstraint,
    rho: float,
    max_halvings: int = 32,
) -> tuple[np.ndarray, int]:
    """One MM update with positive-definiteness-preserving backtracking.

    Forms ``C_k = rho * P(Sigma_k) + Sigma_k^{-1} S Sigma_k^{-1}``, solves
    the stationarity equation for the unconstrained surrogate minimizer
    ``Sigma_hat``, then returns ``Sigma_k + 2^{-s} (Sigma_hat - Sigma_k)``
    for the smallest ``s`` whose candidate is positive definite and
    strictly decreases the penalized objective.

    Returns
    -------
    (Sigma_next, halvings)
        The accepted iterate and the halving exponent ``s`` used.

    Raises
    ------
    BacktrackExhaustedError
        If no candidate is accepted, which at a stationary point is the
        expected outcome (the full step is a fixed point there).
    """
    Sigma_k = as_symmetric(Sigma_k)
    S = as_symmetric(S)
    c.check_dimension(Sigma_k.shape[0])
    Sigma_next, halvings, _ = _mm_step(Sigma_k, S, c, rho, max_halvings)
    return Sigma_next, halvings


def _resolve_ridge(S: np.ndarray, cfg: FitConfig) -> tuple[np.ndarray, float]:
    """Apply the explicit or automatic ridge; returns (S_used, delta)."""
    if cfg.ridge_delta > 0:
        delta = cfg.ridge_delta
    else:
        eigvals = np.linalg.eigvalsh(S)
        lam_max = float(eigvals[-1])
        if eigvals[0] < RIDGE_EIG_RTOL * max(lam_max, 0.0):
            delta = RIDGE_SCALE * float(np.trace(S)) / S.shape[0]
        else:
            return S, 0.0
    S_used = S.copy()
    S_used[np.diag_indices_from(S_used)] += delta
    return S_used, delta


def _free_coordinates(Sigma: np.ndarray, c: SparsityConstraint) -> tuple:
    """Index arrays (I, J) of the coordinates the penalty never touches.

    Covariance mode leaves every diagonal entry free; both modes leave the
    current projected support free.  Support pairs are dropped when the
    coordinate count would exceed POLISH_COORD_CAP, since the Newton system
    below is dense in the coordinate count.
    """
    p = Sigma.shape[0]
    idx: list[tuple[int, int]] = []
    if c.mode == "covariance":
        idx.extend((i, i) for i in range(p))
    if c.k > 0 and p + c.k <= POLISH_COORD_CAP:
        mask = np.triu(np.abs(c.project(Sigma)) > 0, 1)
        rows, cols = np.nonzero(mask)
        idx.extend(zip(rows.tolist(), cols.tolist()))
    if not idx:
        return None, None
    arr = np.asarray(idx)
    return arr[:, 0], arr[:, 1]


def _polish_free(
    Sigma: np.ndarray, S: np.ndarray, I: np.ndarray, J: np.ndarray, f: float
) -> tuple[np.ndarray, float]:
    """Newton descent on the penalty-free coordinates of the loss.

    The anchored majorizer charges rho for movement in every coordinate,
    but the distance penalty only involves the off-support entries, so the
    loop exits with the diagonal and the support still biased toward the
    anchor.  This drives the loss gradient on those coordinates to zero
    with the off-support entries held fixed; the penalty term is therefore
    unchanged (up to re-selection, which only lowers it) and descent in
    the loss ``f = ln det Sigma + tr(Sigma^{-1} S)`` is descent overall.

    The coordinate basis is ``B_a = e_i e_j^T + e_j e_i^T`` (twice the unit
    for diagonal coordinates); gradient entries are ``2 G_ij`` with
    ``G = A - A S A`` and the Hessian follows from the second directional
    derivative ``tr(-A B_b A B_a + A B_b M B_a + M B_b A B_a)``, M = ASA.
    """
    for _ in range(POLISH_MAX):
        A = inverse_pd(Sigma)
        M = A @ S @ A
        G = A - M
        g = 2.0 * G[I, J]
        if np.max(np.abs(g)) <= 1e-12 * max(1.0, float(np.linalg.norm(A))):
            break

        def h2(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
            # rows indexed by coordinate a, columns by coordinate b
            return (
                Q[np.ix_(I, J)] * P[np.ix_(J, I)]
                + Q[np.ix_(I, I)] * P[np.ix_(J, J)]
                + Q[np.ix_(J, J)] * P[np.ix_(I, I)]
                + Q[np.ix_(J, I)] * P[np.ix_(I, J)]
            )

        H = -h2(A, A) + h2(A, M) + h2(M, A)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        if float(step @ g) <= 0.0:  # not a descent direction; H indefinite
            step = g
        accepted = False
        for s in range(33):
            candidate = Sigma.copy()
            update = 0.5**s * step
            np.subtract.at(candidate, (I, J), update)
            np.subtract.at(candidate, (J, I), update)
            try:
                f_cand = _loss_parts(candidate, S)
            except NotPositiveDefiniteError:
                continue
            if f_cand < f:
                Sigma, f, accepted = candidate, f_cand, True
                break
        if not accepted:
            break
    return Sigma, f


def _fit_core(
    S: np.ndarray,
    c: SparsityConstraint,
    cfg: FitConfig,
    callback: Callable[[dict], None] | None,
) -> FitResult:
    S = as_symmetric(S)
    p = S.shape[0]
    c.check_dimension(p)
    S, ridge_delta = _resolve_ridge(S, cfg)
    if np.any(np.diag(S) <= 0):
        raise NotPositiveDefiniteError(
            "S has a nonpositive diagonal entry, so the diagonal start is "
            "singular; set ridge_delta > 0 in FitConfig"
        )

    Sigma = np.diag(np.diag(S)).copy()
    rho = cfg.rho0
    objective_trace: list[float] = []
    rho_trace: list[float] = []
    total_halvings = 0
    converged = False
    h_prev: float | None = None

    for _ in range(cfg.max_outer):
        h_before = _loss_parts(Sigma, S) + 0.5 * rho * c.squared_distance(Sigma)
        try:
            Sigma_next, halvings, h = _mm_step(
                Sigma, S, c, rho, cfg.max_halvings, h_k=h_before
            )
            accepted = True
        except BacktrackExhaustedError:
            Sigma_next, halvings, h = Sigma, 0, h_before
            accepted = False
        if callback is not None:
            callback(
                {
                    "iteration": len(objective_trace) + 1,
                    "rho": rho,
                    "sigma": Sigma_next,
                    "objective_before": h_before,
                    "objective": h,
                    "halvings": halvings,
                    "accepted": accepted,
                }
            )
        Sigma = Sigma_next
        total_halvings += halvings
        objective_trace.append(h)
        rho_trace.append(rho)
        if h_prev is not None:
            rel_change = abs(h - h_prev) / max(abs(h_prev), 1e-12)
            if rel_change <= cfg.tol:
                converged = True
                break
        h_prev = h
        rho = min(rho * cfg.rho_growth, cfg.rho_max, RHO_CEIL)

    # Equilibrate at the final rho: one step per rho level leaves the
    # iterate short of stationarity for the penalized objective, and the
    # anchored majorizer slows the diagonal by a factor of rho, so we
    # alternate a diagonal Newton polish with full steps until the
    # gradient is small relative to the inverse scale.
    rho_ref = rho_trace[-1]
    h = objective_trace[-1]
    for _ in range(REFINE_MAX):
        h_pass = h
        free_i, free_j = _free_coordinates(Sigma, c)
        if free_i is not None:
            pen = 0.5 * rho_ref * c.squared_distance(Sigma)
            Sigma, f = _polish_free(Sigma, S, free_i, free_j, h - pen)
            h = f + 0.5 * rho_ref * c.squared_distance(Sigma)
        A = inverse_pd(Sigma)
        G = A - A @ S @ A + rho_ref * (Sigma - c.project(Sigma))
        if float(np.linalg.norm(G)) <= 0.5 * STATIONARITY_RTOL * max(
            1.0, float(np.linalg.norm(A))
        ):
            break
        try:
            Sigma_next, halvings, h_next = _mm_step(
                Sigma, S, c, rho_ref, cfg.max_halvings, h_k=h
            )
        except BacktrackExhaustedError:
            break
        if callback is not None:
            callback(
                {
                    "iteration": len(objective_trace) + 1,
                    "rho": rho_ref,
                    "sigma": Sigma_next,
                    "objective_before": h,
                    "objective": h_next,
                    "halvings": halvings,
                    "accepted": True,
                }
            )
        Sigma = Sigma_next
        h = h_next
        total_halvings += halvings
        objective_trace.append(h)
        rho_trace.append(rho_ref)
        # a pass that barely moved the objective will not clear the
        # gradient test either; stop crawling
        if abs(h - h_pass) / max(abs(h_pass), 1e-12) <= cfg.tol:
            break

    projected = c.project(Sigma)
    return FitResult(
        sigma_hat=Sigma,
        objective_trace=objective_trace,
        rho_trace=rho_trace,
        iterations=len(objective_trace),
        total_halvings=total_halvings,
        converged=converged,
        final_penalty=float(np.sum((Sigma - projected) ** 2)),
        support=support_mask(projected, tol=0.0),
        ridge_delta=ridge_delta,
    )


def fit(
    S: np.ndarray,
    c: SparsityConstraint,
    cfg: FitConfig = FitConfig(),
    callback: Callable[[dict], None] | None = None,
) -> FitResult:
    """Fit a sparse covariance matrix to the sample covariance ``S``.

    Starts from ``Diag(S)`` (starting from S itself provokes heavy
    backtracking), runs MM steps while growing rho geometrically, and
    stops when the relative objective change falls to ``cfg.tol`` or the
    iteration budget runs out.  A step rejected by backtracking leaves
    the iterate in place; the schedule still advances, so the run
    terminates once rho saturates and the objective freezes.

    Parameters
    ----------
    S : ndarray
        Sample covariance matrix, symmetric positive semidefinite.
        Near-singular S is ridged automatically (see FitConfig).
    c : SparsityConstraint
        Target sparsity level and mode.
    cfg : FitConfig
        Schedule and tolerance settings.
    callback : callable, optional
        Called once per outer iteration with a dict of that iteration's
        state (iteration, rho, sigma, objective_before, objective,
        halvings, accepted).  For tracing and tests.

    Raises
    ------
    ValueError
        If S has non-finite entries or shape problems.
    NotPositiveDefiniteError
        If S still has a nonpositive diagonal entry after ridging, so
        the diagonal start is singular.
    """
    return _fit_core(S, c, cfg, callback)


def fit_correlation(
    R: np.ndarray,
    k: int,
    cfg: FitConfig = FitConfig(),
    callback: Callable[[dict], None] | None = None,
) -> FitResult:
    """Fit a sparse correlation matrix to the sample correlation ``R``.

    Same loop as :func:`fit` with the correlation-mode constraint, whose
    projection pins the diagonal to one.  ``R`` is typically
    ``D^{-1/2} S D^{-1/2}`` with ``D = diag(S)``.

    Raises
    ------
    ValueError
        If any diagonal entry of ``R`` differs from 1 by more than 1e-8.
    """
    R = as_symmetric(R)
    if np.max(np.abs(np.diag(R) - 1.0)) > 1e-8:
        raise ValueError("R must have unit diagonal to within 1e-8")
    c = SparsityConstraint(k=k, mode="correlation")
    return _fit_core(R, c, cfg, callback)
