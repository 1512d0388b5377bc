"""K-fold cross-validation over sparsity level or threshold level.

Folds partition the rows of the data matrix.  For each grid value the
estimator is fit on the training folds' sample covariance and scored
against the held-out folds' sample covariance, by default in Frobenius
norm.  The entropy-loss option scores ``entropy_loss(S_test, estimate)``
and falls back to Frobenius on folds whose held-out covariance is not
positive definite.

Ties in the mean CV loss break toward parsimony: the smallest sparsity
level k, or the largest threshold.  A selected value on either end of
the grid triggers a warning rather than any automatic grid extension.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._workers import parallel_map
from .baselines import ThresholdSpec, threshold
from .evaluation import entropy_loss
from .matcore import NotPositiveDefiniteError, is_positive_definite, sample_covariance
from .proxdist import FitConfig, fit
from .sparsity import SparsityConstraint

__all__ = ["CvSpec", "CvRow", "kfold_split", "cross_validate", "default_grid"]

METHODS = ("proxdist", "soft", "hard")
LOSSES = ("frobenius", "entropy")


@dataclass(frozen=True)
class CvSpec:
    """Cross-validation protocol: fold count, parameter grid, loss, seed."""

    grid: Sequence[float]
    folds: int = 5
    loss: str = "frobenius"
    seed: int = 0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty 1-D sequence")
        if np.any(np.diff(grid) < 0):
            raise ValueError("grid must be ascending")
        if self.folds < 2:
            raise ValueError(f"folds must be at least 2, got {self.folds}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")


class CvRow(NamedTuple):
    param: float
    mean_loss: float
    stderr: float
    n_folds: int
    boundary: bool


def kfold_split(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Partition ``range(n)`` into ``folds`` index arrays of near-equal size.

    Sizes differ by at most one; the assignment is a seeded permutation,
    identical across calls with the same arguments.
    """
    if n < folds:
        raise ValueError(f"need n >= folds, got n={n}, folds={folds}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return list(np.array_split(rng.permutation(n), folds))


def default_grid(method: str, S: np.ndarray, size: int = 40) -> np.ndarray:
    """The standard tuning grid for one method on sample covariance ``S``.

    Sparsity levels ``round(linspace(0, p(p-1)/2, size))`` for the
    penalized estimator; threshold levels ``linspace(0, max off-diagonal
    |S|, size)`` for the baselines.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if method == "proxdist":
        return np.rint(np.linspace(0, p * (p - 1) // 2, size)).astype(int)
    off = np.abs(S - np.diag(np.diag(S)))
    return np.linspace(0.0, float(off.max()), size)


def _estimate(method: str, S_train: np.ndarray, param: float, cfg: FitConfig):
    if method == "proxdist":
        c = SparsityConstraint(k=int(round(param)))
        return fit(S_train, c, cfg).sigma_hat
    return threshold(S_train, ThresholdSpec(lam=float(param), kind=method))


def cross_validate(
    data: np.ndarray,
    method: str,
    spec: CvSpec,
    cfg: FitConfig = FitConfig(),
) -> tuple[int | float, list[CvRow]]:
    """Select a tuning parameter by k-fold CV on a data matrix.

    Returns ``(best_param, table)`` where the table has one row per grid
    value with the mean held-out loss and its standard error.  A failed
    fit on a fold scores that cell as +inf with a warning.  The
    ``boundary`` field is set on the selected row when it sits at either
    end of the grid.

    Parameters
    ----------
    data : ndarray, shape (n, p)
        Raw observations; each fold's sample covariance uses divisor
        n_fold without centering.
    method : str
        One of ``proxdist``, ``soft``, ``hard``.
    spec : CvSpec
        Folds, grid, loss, and fold-assignment seed.
    cfg : FitConfig
        Passed to the penalized fits; ignored by the baselines.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError(f"data must be 2-D, got shape {data.shape}")
    grid = np.asarray(spec.grid, dtype=float)
    folds = kfold_split(data.shape[0], spec.folds, spec.seed)

    split = []
    for test_idx in folds:
        mask = np.ones(data.shape[0], dtype=bool)
        mask[test_idx] = False
        S_train = sample_covariance(data[mask])
        S_test = sample_covariance(data[test_idx])
        test_pd = is_positive_definite(S_test) if spec.loss == "entropy" else False
        split.append((S_train, S_test, test_pd))

    def cell_loss(cell: tuple[int, int]) -> float:
        gi, fi = cell
        S_train, S_test, test_pd = split[fi]
        try:
            est = _estimate(method, S_train, grid[gi], cfg)
            if spec.loss == "entropy" and test_pd:
                return entropy_loss(S_test, est)
        except (NotPositiveDefiniteError, RuntimeError, np.linalg.LinAlgError) as exc:
            warnings.warn(
                f"fold {fi} failed at parameter {grid[gi]:g} ({exc}); "
                "scoring the cell as +inf",
                stacklevel=2,
            )
            return np.inf
        return float(np.linalg.norm(est - S_test))

    if spec.loss == "entropy" and not all(t[2] for t in split):
        warnings.warn(
            "held-out sample covariance not positive definite on some folds; "
            "those folds fall back to Frobenius loss",
            stacklevel=2,
        )

    cells = [(gi, fi) for gi in range(grid.size) for fi in range(len(folds))]
    losses = np.asarray(parallel_map(cell_loss, cells)).reshape(
        grid.size, len(folds)
    )

    means = losses.mean(axis=1)
    with np.errstate(invalid="ignore"):
        stderrs = losses.std(axis=1, ddof=1) / np.sqrt(len(folds))
    tied = np.flatnonzero(means == means.min())
    best_idx = int(tied[0]) if method == "proxdist" else int(tied[-1])
    on_boundary = best_idx in (0, grid.size - 1)
    if on_boundary:
        warnings.warn(
            f"selected parameter {grid[best_idx]:g} lies on the grid boundary; "
            "consider widening the grid",
            stacklevel=2,
        )

    table = [
        CvRow(
            param=float(grid[gi]),
            mean_loss=float(means[gi]),
            stderr=float(stderrs[gi]),
            n_folds=len(folds),
            boundary=(gi == best_idx and on_boundary),
        )
        for gi in range(grid.size)
    ]
    best_param = int(round(grid[best_idx])) if method == "proxdist" else float(grid[best_idx])
    return best_param, table
