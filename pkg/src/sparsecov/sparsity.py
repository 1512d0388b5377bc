"""Sparsity constraint sets, their projections, and the distance penalty.

The covariance constraint set consists of symmetric matrices with at most
``k`` nonzero entries in the strict upper triangle (mirrored below), with
the diagonal left unconstrained.  The correlation variant additionally
forces a unit diagonal.  Projection is hard thresholding: keep the ``k``
largest-magnitude off-diagonal entries, zero the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import as_symmetric

__all__ = ["SparsityConstraint", "project", "squared_distance", "support_mask"]

MODES = ("covariance", "correlation")


@dataclass(frozen=True)
class SparsityConstraint:
    """Constraint descriptor: at most ``k`` nonzero strict-upper entries.

    ``mode`` selects the plain covariance set or the unit-diagonal
    correlation set.
    """

    k: int
    mode: str = "covariance"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"k must be a nonnegative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def check_dimension(self, p: int) -> None:
        limit = p * (p - 1) // 2
        if self.k > limit:
            raise ValueError(
                f"k={self.k} exceeds the {limit} strict-upper entries of a {p}x{p} matrix"
            )

    def project(self, M: np.ndarray) -> np.ndarray:
        return project(M, self)

    def squared_distance(self, M: np.ndarray) -> float:
        return squared_distance(M, self)


def _top_k_upper(M: np.ndarray, k: int):
    """Indices of the k largest-magnitude strict-upper entries of M.

    Ties are broken toward the smaller (row, col) lexicographic position so
    the projection is deterministic even on the measure-zero tie set.
    Exactly-zero entries are never selected.
    """
    rows, cols = np.triu_indices(M.shape[0], 1)
    vals = np.abs(M[rows, cols])
    # stable sort on descending magnitude keeps lexicographic order in ties
    order = np.argsort(-vals, kind="stable")[:k]
    keep = order[vals[order] > 0.0]
    return rows[keep], cols[keep]


def project(M: np.ndarray, c: SparsityConstraint) -> np.ndarray:
    """Euclidean projection of a symmetric matrix onto the constraint set.

    Covariance mode copies the diagonal unchanged; correlation mode sets it
    to ones.  In both modes the ``k`` largest-magnitude strict-upper
    entries survive and are mirrored to the lower triangle.
    """
    M = as_symmetric(M)
    p = M.shape[0]
    c.check_dimension(p)
    out = np.zeros_like(M)
    if c.mode == "correlation":
        np.fill_diagonal(out, 1.0)
    else:
        np.fill_diagonal(out, np.diag(M))
    rows, cols = _top_k_upper(M, c.k)
    out[rows, cols] = M[rows, cols]
    out[cols, rows] = M[rows, cols]
    return out


def squared_distance(M: np.ndarray, c: SparsityConstraint) -> float:
    """Squared Frobenius distance from ``M`` to the constraint set.

    Zero exactly when ``M`` is a member.
    """
    diff = as_symmetric(M) - project(M, c)
    return float(np.sum(diff * diff))


def support_mask(M: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Boolean mask of entries with ``|M_ij| > tol``.

    With ``tol=None`` a reporting default of ``1e-8 * max|M|`` is used;
    pass ``tol=0.0`` to count exact nonzeros (e.g. projector output).
    """
    M = np.asarray(M, dtype=float)
    if tol is None:
        tol = 1e-8 * float(np.abs(M).max()) if M.size else 0.0
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return np.abs(M) > tol
