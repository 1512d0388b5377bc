"""Accuracy and likelihood metrics for covariance estimates.

Conventions, stated once here:

* RMSE divides the squared Frobenius distance by all p^2 entries, so
  symmetric pairs count twice.
* False positive and false negative rates are computed over strict
  upper-triangular positions only, per class, with 0/0 taken as 0.
* The Gaussian negative log-likelihood drops the (np/2) ln(2*pi)
  constant; model comparisons at fixed data are unaffected.
* Information criteria count q = p + (strict-upper nonzeros) free
  parameters; EBIC adds 2*gamma*q*ln(p(p+1)/2) with gamma = 0.5 by
  default.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import cho_solve

from .matcore import NotPositiveDefiniteError, as_symmetric, cholesky_pd
from .proxdist import FitConfig, fit
from .sparsity import SparsityConstraint
from .baselines import ThresholdSpec, threshold

__all__ = [
    "MetricReport",
    "entropy_loss",
    "rmse",
    "fp_fn_rates",
    "gaussian_nll",
    "info_criteria",
    "compute_report",
    "roc_sweep",
]

EBIC_GAMMA = 0.5


@dataclass(frozen=True)
class MetricReport:
    """Flat record of all metrics for one (truth, estimate) pair.

    Likelihood-based fields are ``None`` when they cannot be computed:
    ``entropy_loss`` needs a positive definite estimate, and ``nll``,
    ``aic``, ``bic``, ``ebic`` additionally need sample data.
    """

    entropy_loss: float | None
    rmse: float
    fp_rate: float
    fn_rate: float
    nll: float | None
    aic: float | None
    bic: float | None
    ebic: float | None
    nnz: int

    def to_dict(self) -> dict:
        return asdict(self)


def _check_same_shape(A: np.ndarray, B: np.ndarray):
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")


def entropy_loss(Sigma_true: np.ndarray, Sigma_hat: np.ndarray) -> float:
    """Entropy loss ``tr(M) - ln det(M) - p`` with ``M = Sigma_true^{-1} Sigma_hat``.

    A Bregman divergence: nonnegative, zero exactly when the estimate
    equals the truth, and not symmetric in its arguments.

    Raises
    ------
    NotPositiveDefiniteError
        If either matrix is not positive definite.
    """
    Sigma_true = as_symmetric(Sigma_true)
    Sigma_hat = as_symmetric(Sigma_hat)
    _check_same_shape(Sigma_true, Sigma_hat)
    p = Sigma_true.shape[0]
    L_true = cholesky_pd(Sigma_true)
    L_hat = cholesky_pd(Sigma_hat)
    trace_term = float(np.trace(cho_solve((L_true, True), Sigma_hat)))
    logdet_ratio = 2.0 * float(
        np.sum(np.log(np.diag(L_hat))) - np.sum(np.log(np.diag(L_true)))
    )
    return trace_term - logdet_ratio - p


def rmse(Sigma_true: np.ndarray, Sigma_hat: np.ndarray) -> float:
    """Root mean squared entrywise error, ``||Sigma_true - Sigma_hat||_F / p``."""
    Sigma_true = np.asarray(Sigma_true, dtype=float)
    Sigma_hat = np.asarray(Sigma_hat, dtype=float)
    _check_same_shape(Sigma_true, Sigma_hat)
    p = Sigma_true.shape[0]
    return float(np.linalg.norm(Sigma_true - Sigma_hat) / p)


def fp_fn_rates(
    Sigma_true: np.ndarray,
    Sigma_hat: np.ndarray,
    tol: float | None = None,
) -> tuple[float, float]:
    """False positive and false negative rates over strict-upper entries.

    The true support is taken from exact nonzeros of ``Sigma_true``.
    The estimated support counts entries with ``|value| > tol``; pass
    ``tol=0.0`` for estimators that produce exact zeros.  The default
    ``tol=None`` uses ``1e-8 * max|Sigma_hat|``.  Empty classes give a
    rate of 0.
    """
    Sigma_true = np.asarray(Sigma_true, dtype=float)
    Sigma_hat = np.asarray(Sigma_hat, dtype=float)
    _check_same_shape(Sigma_true, Sigma_hat)
    if tol is None:
        tol = 1e-8 * float(np.max(np.abs(Sigma_hat), initial=0.0))
    iu = np.triu_indices(Sigma_true.shape[0], k=1)
    true_nz = Sigma_true[iu] != 0.0
    est_nz = np.abs(Sigma_hat[iu]) > tol
    n_zero = int(np.sum(~true_nz))
    n_nonzero = int(np.sum(true_nz))
    fp = int(np.sum(est_nz & ~true_nz))
    fn = int(np.sum(~est_nz & true_nz))
    fp_rate = fp / n_zero if n_zero else 0.0
    fn_rate = fn / n_nonzero if n_nonzero else 0.0
    return fp_rate, fn_rate


def gaussian_nll(Sigma_hat: np.ndarray, S: np.ndarray, n: int) -> float:
    """Negative Gaussian log-likelihood ``(n/2)[ln det Sigma_hat + tr(Sigma_hat^{-1} S)]``.

    Additive constants are dropped.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    Sigma_hat = as_symmetric(Sigma_hat)
    S = as_symmetric(S)
    _check_same_shape(Sigma_hat, S)
    L = cholesky_pd(Sigma_hat)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return 0.5 * n * (logdet + float(np.trace(cho_solve((L, True), S))))


def _nnz_upper(Sigma: np.ndarray) -> int:
    iu = np.triu_indices(Sigma.shape[0], k=1)
    return int(np.count_nonzero(Sigma[iu]))


def info_criteria(
    Sigma_hat: np.ndarray,
    S: np.ndarray,
    n: int,
    gamma: float = EBIC_GAMMA,
    support_nnz: int | None = None,
) -> tuple[float, float, float]:
    """AIC, BIC, and EBIC for a sparse covariance estimate.

    Uses ``q = p + nnz_upper`` free parameters (diagonal plus exact
    strict-upper nonzeros of the estimate):

        AIC  = 2 nll + 2 q
        BIC  = 2 nll + q ln n
        EBIC = BIC + 2 gamma q ln(p(p+1)/2)

    ``support_nnz`` overrides the nonzero count, for estimates whose
    sparsity pattern lives in a separate support mask.
    """
    Sigma_hat = as_symmetric(Sigma_hat)
    p = Sigma_hat.shape[0]
    nll = gaussian_nll(Sigma_hat, S, n)
    q = p + (_nnz_upper(Sigma_hat) if support_nnz is None else support_nnz)
    aic = 2.0 * nll + 2.0 * q
    bic = 2.0 * nll + q * math.log(n)
    ebic = bic + 2.0 * gamma * q * math.log(p * (p + 1) / 2)
    return aic, bic, ebic


def compute_report(
    Sigma_true: np.ndarray,
    Sigma_hat: np.ndarray,
    S: np.ndarray | None = None,
    n: int | None = None,
    tol: float | None = None,
    gamma: float = EBIC_GAMMA,
) -> MetricReport:
    """Assemble the full metric record for one estimate.

    ``entropy_loss`` is ``None`` when the estimate is not positive
    definite; the likelihood fields are also ``None`` when ``S``/``n``
    are absent.  ``tol`` is passed through to :func:`fp_fn_rates`.
    """
    Sigma_true = as_symmetric(Sigma_true)
    Sigma_hat = as_symmetric(Sigma_hat)
    _check_same_shape(Sigma_true, Sigma_hat)
    try:
        ent = entropy_loss(Sigma_true, Sigma_hat)
    except NotPositiveDefiniteError:
        ent = None
    fp, fn = fp_fn_rates(Sigma_true, Sigma_hat, tol=tol)
    nll = aic = bic = ebic = None
    if S is not None and n is not None:
        try:
            nll = gaussian_nll(Sigma_hat, S, n)
            aic, bic, ebic = info_criteria(Sigma_hat, S, n, gamma=gamma)
        except NotPositiveDefiniteError:
            nll = aic = bic = ebic = None
    return MetricReport(
        entropy_loss=ent,
        rmse=rmse(Sigma_true, Sigma_hat),
        fp_rate=fp,
        fn_rate=fn,
        nll=nll,
        aic=aic,
        bic=bic,
        ebic=ebic,
        nnz=_nnz_upper(Sigma_hat),
    )


def roc_sweep(
    S: np.ndarray,
    Sigma_true: np.ndarray,
    method: str,
    grid,
    cfg: FitConfig = FitConfig(),
) -> list[tuple[float, float]]:
    """Operating points (fpr, tpr) along a regularization grid.

    ``method`` is one of ``proxdist`` (grid of sparsity levels k),
    ``soft``, or ``hard`` (grids of threshold levels).  Each point is
    ``(fp_rate, 1 - fn_rate)`` against the true support; points are
    returned sorted by fpr.
    """
    S = as_symmetric(S)
    Sigma_true = as_symmetric(Sigma_true)
    _check_same_shape(S, Sigma_true)
    points = []
    for g in np.asarray(grid).ravel():
        if method == "proxdist":
            c = SparsityConstraint(k=int(round(float(g))))
            res = fit(S, c, cfg)
            est = c.project(res.sigma_hat)
        elif method in ("soft", "hard"):
            est = threshold(S, ThresholdSpec(lam=float(g), kind=method))
        else:
            raise ValueError(f"unknown method {method!r}")
        fp, fn = fp_fn_rates(Sigma_true, est, tol=0.0)
        points.append((fp, 1.0 - fn))
    return sorted(points)
