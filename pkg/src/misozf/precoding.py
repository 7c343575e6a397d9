"""Zero-forcing and matched-filter precoders built from channel estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, RankDeficient, ZeroMatrix
from .estimation import ChannelEstimate

__all__ = [
    "EstimatedChannelMatrix",
    "PrecodingMatrix",
    "zf_precoder",
    "mf_precoder",
    "effective_channel",
]

ZF_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class EstimatedChannelMatrix:
    """Channel estimates of all K users as the columns of an M x K matrix."""

    columns: np.ndarray

    def __post_init__(self):
        H = np.array(self.columns, dtype=complex)
        if H.ndim == 1:
            H = H[:, None]
        if H.ndim != 2 or H.shape[1] < 1:
            raise DimensionMismatch(f"expected an M x K matrix, got shape {H.shape}")
        object.__setattr__(self, "columns", H)

    @classmethod
    def from_estimates(cls, estimates: Sequence[ChannelEstimate]) -> "EstimatedChannelMatrix":
        lengths = {e.h_hat.shape for e in estimates}
        if len(lengths) != 1:
            raise DimensionMismatch(f"estimates have differing shapes {sorted(lengths)}")
        return cls(np.column_stack([e.h_hat for e in estimates]))


@dataclass(frozen=True, eq=False)
class PrecodingMatrix:
    """M x K precoder with ``trace(P P^H) = 1``.

    ``normalization`` is the scalar applied to the unnormalized precoder
    (delta for ZF, delta' for MF).
    """

    matrix: np.ndarray
    normalization: float
    scheme: str


def _as_matrix(H_hat) -> np.ndarray:
    if isinstance(H_hat, EstimatedChannelMatrix):
        return H_hat.columns
    return EstimatedChannelMatrix(H_hat).columns


def zf_precoder(H_hat) -> PrecodingMatrix:
    """``P = delta * H_hat (H_hat^H H_hat)^{-1}``.

    The Gram matrix is solved by Cholesky; ``delta`` is
    ``1 / sqrt(trace((H_hat^H H_hat)^{-1}))`` which equals the inverse
    Frobenius norm of the unnormalized precoder.

    Raises
    ------
    RankDeficient
        If ``K > M`` or the Gram matrix has condition number above 1e12.
    """
    H = _as_matrix(H_hat)
    M, K = H.shape
    if K > M:
        raise RankDeficient(f"zero-forcing needs K <= M, got K={K}, M={M}")
    gram = H.conj().T @ H
    gram = 0.5 * (gram + gram.conj().T)
    w = np.linalg.eigvalsh(gram)
    if not w[0] > 0 or w[-1] / w[0] > ZF_COND_LIMIT:
        raise RankDeficient("estimated channel Gram matrix is (numerically) singular")
    X = sla.cho_solve(sla.cho_factor(gram, lower=True, check_finite=False), H.conj().T, check_finite=False)
    P = X.conj().T
    delta = 1.0 / np.linalg.norm(P)
    return PrecodingMatrix(delta * P, float(delta), "ZF")


def mf_precoder(H_hat) -> PrecodingMatrix:
    """Matched filter ``delta' * H_hat`` with ``delta' = 1/||H_hat||_F``."""
    H = _as_matrix(H_hat)
    norm = np.linalg.norm(H)
    if norm == 0:
        raise ZeroMatrix("cannot build a matched filter from an all-zero estimate")
    return PrecodingMatrix(H / norm, float(1.0 / norm), "MF")


def effective_channel(H_true, P: PrecodingMatrix) -> np.ndarray:
    """``H^H P``; entry (k, j) is the gain of user j's stream at user k."""
    H = np.asarray(H_true, dtype=complex)
    Pm = P.matrix if isinstance(P, PrecodingMatrix) else np.asarray(P, dtype=complex)
    if H.ndim != 2 or H.shape != Pm.shape:
        raise DimensionMismatch(f"channel {H.shape} and precoder {Pm.shape} do not match")
    return H.conj().T @ Pm
