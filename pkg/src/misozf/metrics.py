"""Per-user SINR, achievable rates and estimation error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidPrelog
from .estimation import ChannelEstimate
from .precoding import PrecodingMatrix, effective_channel

__all__ = ["RateBreakdown", "prelog", "sinr_per_user", "rates", "mse_sample"]


@dataclass(frozen=True)
class RateBreakdown:
    """Rates of one channel realization, in bits per channel use."""

    per_user_sinr: np.ndarray
    per_user_rate: np.ndarray
    sum_rate: float
    prelog: float


def prelog(T_dl: int, T_coh: int) -> float:
    """Fraction of the coherence interval left for data, ``1 - T_dl/T_coh``."""
    if not 0 <= T_dl < T_coh:
        raise InvalidPrelog(f"need 0 <= T_dl < T_coh, got T_dl={T_dl}, T_coh={T_coh}")
    return 1.0 - T_dl / T_coh


def sinr_per_user(H, P: PrecodingMatrix, sigma2_data: float) -> np.ndarray:
    """``|h_k^H p_k|^2 / (sum_{j != k} |h_k^H p_j|^2 + sigma2)`` for every user."""
    if not sigma2_data > 0:
        raise ValueError("data noise variance must be positive")
    gains = np.abs(effective_channel(H, P)) ** 2
    if gains.shape[0] != gains.shape[1]:
        raise DimensionMismatch("effective channel must be square (one stream per user)")
    desired = np.diag(gains)
    interference = gains.sum(axis=1) - desired
    # the subtraction can leave -eps when interference is exactly nulled
    return desired / (np.maximum(interference, 0.0) + sigma2_data)


def rates(H, P: PrecodingMatrix, sigma2_data: float, T_dl: int, T_coh: int) -> RateBreakdown:
    tau = prelog(T_dl, T_coh)
    sinr = sinr_per_user(H, P, sigma2_data)
    per_user = tau * np.log2(1.0 + sinr)
    return RateBreakdown(sinr, per_user, float(np.sum(per_user)), tau)


def mse_sample(h, h_hat) -> float:
    """Squared error ``||h - h_hat||^2`` (``h_hat`` may be a ChannelEstimate)."""
    h = np.asarray(h, dtype=complex)
    est = h_hat.h_hat if isinstance(h_hat, ChannelEstimate) else np.asarray(h_hat, dtype=complex)
    if h.shape != est.shape:
        raise DimensionMismatch(f"shapes {h.shape} and {est.shape} differ")
    d = h - est
    return float(np.real(np.vdot(d, d)))
