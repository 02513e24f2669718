"""Complex least squares for the combiner regression."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Solution:
    coeffs: np.ndarray
    residual_norm: float
    condition_estimate: float
    rank: int

    @property
    def full_rank(self) -> bool:
        return self.rank == self.coeffs.shape[0]


def lstsq(A, b, ridge: float = 0.0, rcond: float | None = None) -> Solution:
    """Minimise ``||A x - b||^2 + ridge ||x||^2``.

    With ``ridge == 0`` this is the minimum-norm (pseudoinverse) solution
    computed by LAPACK's SVD driver; a rank-deficient ``A`` raises a
    :class:`RankDeficiencyWarning`. A positive ridge is handled by stacking
    ``sqrt(ridge) I`` under ``A`` so the problem stays orthogonally solved.
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if A.ndim != 2:
        raise ValueError("A must be 2-D")
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"b has {b.shape[0]} rows, A has {A.shape[0]}")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    n = A.shape[1]
    if ridge > 0:
        A_aug = np.vstack([A, np.sqrt(ridge) * np.eye(n)])
        b_aug = np.concatenate([b, np.zeros((n,) + b.shape[1:], dtype=complex)])
        x, _, rank, sv = np.linalg.lstsq(A_aug, b_aug, rcond=rcond)
    else:
        x, _, rank, sv = np.linalg.lstsq(A, b, rcond=rcond)
        if rank < n:
            warnings.warn(
                f"design matrix is rank deficient ({rank} < {n} columns)",
                RankDeficiencyWarning,
                stacklevel=2,
            )
    resid = float(np.linalg.norm(A @ x - b))
    cond = float(sv[0] / sv[-1]) if sv.size and sv[-1] > 0 else np.inf
    return Solution(coeffs=x, residual_norm=resid, condition_estimate=cond, rank=int(rank))


def column_scale(A) -> tuple[np.ndarray, np.ndarray]:
    """Divide every column by its RMS magnitude.

    Returns the scaled matrix and the scale vector; a solution ``z`` of the
    scaled problem maps back as ``x = z / scales``. All-zero columns keep
    scale 1 and are logged.
    """
    A = np.asarray(A, dtype=complex)
    scales = np.sqrt(np.mean(np.abs(A) ** 2, axis=0))
    zero = scales == 0
    if np.any(zero):
        log.warning("%d all-zero design column(s): %s", zero.sum(), np.flatnonzero(zero).tolist())
        scales = np.where(zero, 1.0, scales)
    return A / scales, scales


def condition_number(A) -> float:
    sv = np.linalg.svd(np.asarray(A), compute_uv=False)
    return float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
