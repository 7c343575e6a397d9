"""LS and LMMSE channel estimation, their noiseless limits and MSE oracles."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .channel_model import ChannelCovariance
from .errors import DimensionMismatch, SingularPilotGram, SingularSystem
from .training import PilotMatrix, TrainingObservation

__all__ = [
    "Estimator",
    "ChannelEstimate",
    "estimate_ls",
    "estimate_lmmse",
    "asymptotic_ls",
    "asymptotic_lmmse",
    "genie",
    "mse_closed_form_ls",
    "mse_closed_form_lmmse",
]

# reciprocal condition limit for the regularized Gram solve
LMMSE_COND_LIMIT = 1e14
# eigenvalue cut for the noiseless LMMSE limit, relative to the largest one
ASYMPTOTIC_RCOND = 1e-12


class Estimator(str, enum.Enum):
    LS = "LS"
    LMMSE = "LMMSE"
    ASYMPTOTIC_LS = "AsymptoticLS"
    ASYMPTOTIC_LMMSE = "AsymptoticLMMSE"
    GENIE = "Genie"

    def __str__(self):
        return self.value


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    h_hat: np.ndarray
    estimator: Estimator

    def __post_init__(self):
        if not np.all(np.isfinite(self.h_hat)):
            raise ValueError("channel estimate has non-finite entries")


def _check_channel(pilots: PilotMatrix, h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim not in (1, 2) or h.shape[0] != pilots.num_antennas:
        raise DimensionMismatch(f"channel has shape {h.shape}, expected leading dimension {pilots.num_antennas}")
    return h


def _check_observation(pilots: PilotMatrix, obs: TrainingObservation) -> np.ndarray:
    y = np.asarray(obs.y, dtype=complex)
    if y.ndim not in (1, 2) or y.shape[0] != pilots.num_pilots:
        raise DimensionMismatch(f"observation has shape {y.shape}, expected leading dimension {pilots.num_pilots}")
    return y


def _check_covariance(pilots: PilotMatrix, cov: ChannelCovariance):
    if cov.num_antennas != pilots.num_antennas:
        raise DimensionMismatch(f"covariance is {cov.num_antennas}x{cov.num_antennas}, pilots have M={pilots.num_antennas}")


def estimate_ls(pilots: PilotMatrix, obs: TrainingObservation) -> ChannelEstimate:
    """LS estimate ``Phi y``; the pseudo-inverse collapses because ``Phi^H Phi = I``."""
    y = _check_observation(pilots, obs)
    return ChannelEstimate(pilots.matrix @ y, Estimator.LS)


def _cho_solve_checked(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        c, lower = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularSystem("Gram system is not positive definite") from None
    d = np.abs(np.diag(c))
    # cond(A) = cond(L)^2 >= (max|l_ii| / min|l_ii|)^2
    if d.min() == 0 or (d.max() / d.min()) ** 2 > LMMSE_COND_LIMIT:
        raise SingularSystem("Gram system is numerically singular")
    return sla.cho_solve((c, lower), b, check_finite=False)


def estimate_lmmse(pilots: PilotMatrix, obs: TrainingObservation, cov: ChannelCovariance, sigma2: float) -> ChannelEstimate:
    """LMMSE estimate with mean correction.

    Computes ``mu + C Phi x`` where ``x`` solves the Hermitian system
    ``(Phi^H C Phi + sigma2 I) x = y - Phi^H mu`` by Cholesky factorization.
    ``sigma2`` must be positive; the noiseless case is :func:`asymptotic_lmmse`.
    """
    y = _check_observation(pilots, obs)
    _check_covariance(pilots, cov)
    if not sigma2 > 0:
        raise ValueError("estimate_lmmse needs sigma2 > 0; use asymptotic_lmmse for the noiseless limit")
    Phi, C, mu = pilots.matrix, cov.matrix, cov.mean
    CPhi = C @ Phi
    gram = Phi.conj().T @ CPhi
    gram = 0.5 * (gram + gram.conj().T) + sigma2 * np.eye(pilots.num_pilots)
    resid = y - (Phi.conj().T @ mu if y.ndim == 1 else (Phi.conj().T @ mu)[:, None])
    x = _cho_solve_checked(gram, resid)
    h_hat = CPhi @ x + (mu if y.ndim == 1 else mu[:, None])
    return ChannelEstimate(h_hat, Estimator.LMMSE)


def asymptotic_ls(pilots: PilotMatrix, h) -> ChannelEstimate:
    """Noiseless LS estimate, the projection ``Phi Phi^H h``."""
    h = _check_channel(pilots, h)
    return ChannelEstimate(pilots.matrix @ (pilots.H @ h), Estimator.ASYMPTOTIC_LS)


def asymptotic_lmmse(pilots: PilotMatrix, h, cov: ChannelCovariance, rcond: float = ASYMPTOTIC_RCOND, strict: bool = False) -> ChannelEstimate:
    """Noiseless limit of the LMMSE estimate.

    Returns ``mu + C Phi G^+ Phi^H (h - mu)`` with ``G = Phi^H C Phi``. When
    ``G`` is invertible this is the usual ``C Phi G^{-1} Phi^H`` form. When it
    is numerically singular the pseudo-inverse (eigenvalues below
    ``rcond * lambda_max`` dropped) still gives the exact ``sigma2 -> 0``
    limit, because ``Phi^H (h - mu)`` lies in the range of ``G`` for every
    channel drawn from ``cov``.

    Raises
    ------
    SingularPilotGram
        If ``G`` holds no energy at all (the covariance is invisible to the
        pilots), or if ``strict`` is set and ``cond(G) > 1 / rcond``.
    """
    h = _check_channel(pilots, h)
    _check_covariance(pilots, cov)
    Phi, C, mu = pilots.matrix, cov.matrix, cov.mean
    CPhi = C @ Phi
    gram = Phi.conj().T @ CPhi
    w, U = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    c_scale = np.abs(np.linalg.eigvalsh(C)).max()
    if w[-1] <= rcond * c_scale:
        raise SingularPilotGram("covariance has no energy in the pilot subspace")
    keep = w > rcond * w[-1]
    if strict and not keep.all():
        raise SingularPilotGram(f"Phi^H C Phi has condition number above {1 / rcond:.0e}")
    centered = h - (mu if h.ndim == 1 else mu[:, None])
    z = U[:, keep].conj().T @ (Phi.conj().T @ centered)
    z = z / (w[keep] if h.ndim == 1 else w[keep][:, None])
    h_hat = CPhi @ (U[:, keep] @ z) + (mu if h.ndim == 1 else mu[:, None])
    return ChannelEstimate(h_hat, Estimator.ASYMPTOTIC_LMMSE)


def genie(h) -> ChannelEstimate:
    return ChannelEstimate(np.array(h, dtype=complex), Estimator.GENIE)


def mse_closed_form_ls(pilots: PilotMatrix, cov: ChannelCovariance, sigma2: float) -> float:
    """Expected ``||h - Phi y||^2``.

    Equals ``tr(R) - tr(Phi^H R Phi) + sigma2 * T_dl`` with the second-moment
    matrix ``R = C + mu mu^H`` (``R = C`` for zero-mean channels): the part of
    the channel outside the pilot span is lost and the noise passes through
    ``Phi`` unchanged in power.
    """
    _check_covariance(pilots, cov)
    R = cov.matrix + np.outer(cov.mean, cov.mean.conj())
    Phi = pilots.matrix
    projected = np.real(np.trace(Phi.conj().T @ R @ Phi))
    return float(np.real(np.trace(R)) - projected + sigma2 * pilots.num_pilots)


def mse_closed_form_lmmse(pilots: PilotMatrix, cov: ChannelCovariance, sigma2: float) -> float:
    """Expected LMMSE error ``tr(C) - tr(C Phi (Phi^H C Phi + sigma2 I)^{-1} Phi^H C)``."""
    _check_covariance(pilots, cov)
    if not sigma2 > 0:
        raise ValueError("mse_closed_form_lmmse needs sigma2 > 0")
    Phi, C = pilots.matrix, cov.matrix
    CPhi = C @ Phi
    gram = Phi.conj().T @ CPhi
    gram = 0.5 * (gram + gram.conj().T) + sigma2 * np.eye(pilots.num_pilots)
    X = _cho_solve_checked(gram, CPhi.conj().T)
    return float(np.real(np.trace(C)) - np.real(np.trace(CPhi @ X)))
