"""Downlink pilot matrices and noisy training observations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidDimensions, NonPositivePower

__all__ = [
    "PILOT_KINDS",
    "FEEDBACK_MODELS",
    "PilotMatrix",
    "TrainingObservation",
    "make_pilot_matrix",
    "effective_noise_variance",
    "observe",
]

PILOT_KINDS = ("dft_subset", "random_semi_unitary", "identity_subset")

# additive: 1/P_dl + 1/P_fb.  scaled: (1 + 1/P_fb)/P_dl, i.e. the feedback
# link adds noise at 1/P_fb relative to the un-normalized DL observation.
FEEDBACK_MODELS = ("additive", "scaled")


@dataclass(frozen=True, eq=False)
class PilotMatrix:
    """M x T_dl pilot matrix with orthonormal columns."""

    matrix: np.ndarray
    kind: str

    def __post_init__(self):
        Phi = np.array(self.matrix, dtype=complex)
        Phi.flags.writeable = False
        object.__setattr__(self, "matrix", Phi)

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_pilots(self) -> int:
        return self.matrix.shape[1]

    @property
    def H(self) -> np.ndarray:
        return self.matrix.conj().T

    def projector(self) -> np.ndarray:
        """``Phi Phi^H``, the orthogonal projector onto the pilot span."""
        return self.matrix @ self.H


@dataclass(frozen=True, eq=False)
class TrainingObservation:
    y: np.ndarray
    noise_variance: float


def make_pilot_matrix(M: int, T_dl: int, kind: str = "dft_subset", rng: np.random.Generator | None = None) -> PilotMatrix:
    """Build ``T_dl`` orthonormal pilot sequences of length ``M``.

    Parameters
    ----------
    M, T_dl : int
        Number of BS antennas and of pilot sequences, ``1 <= T_dl <= M``.
    kind : {'dft_subset', 'random_semi_unitary', 'identity_subset'}
        ``dft_subset`` takes the first ``T_dl`` columns of the unitary M-point
        DFT matrix ``F[m, n] = exp(-2j*pi*m*n/M) / sqrt(M)``;
        ``random_semi_unitary`` orthonormalizes an i.i.d. complex Gaussian
        matrix (needs ``rng``); ``identity_subset`` uses canonical vectors.
    """
    if M < 1 or T_dl < 1 or T_dl > M:
        raise InvalidDimensions(f"need 1 <= T_dl <= M, got M={M}, T_dl={T_dl}")
    if kind == "dft_subset":
        m = np.arange(M)[:, None]
        n = np.arange(T_dl)[None, :]
        Phi = np.exp(-2j * np.pi * m * n / M) / math.sqrt(M)
    elif kind == "identity_subset":
        Phi = np.eye(M, T_dl, dtype=complex)
    elif kind == "random_semi_unitary":
        if rng is None:
            raise ValueError("random_semi_unitary pilots need a generator")
        G = rng.standard_normal((M, T_dl)) + 1j * rng.standard_normal((M, T_dl))
        Q, R = np.linalg.qr(G)
        # fix the phase ambiguity of QR so the result is Haar distributed
        d = np.diag(R)
        Phi = Q * (d / np.abs(d))
    else:
        raise ValueError(f"unknown pilot kind {kind!r}; expected one of {PILOT_KINDS}")
    return PilotMatrix(Phi, kind)


def effective_noise_variance(p_dl: float, p_fb: float | None = None, model: str = "additive") -> float:
    """Total training-noise variance seen by the BS.

    ``p_dl`` and ``p_fb`` are linear powers. Without feedback noise this is
    ``1/p_dl``. With ``model='additive'`` the feedback contributes an
    independent ``1/p_fb``; with ``model='scaled'`` it contributes
    ``1/(p_dl * p_fb)`` and therefore vanishes as ``p_dl`` grows.
    """
    if not p_dl > 0:
        raise NonPositivePower(f"DL power must be positive, got {p_dl}")
    if p_fb is None:
        return 1.0 / p_dl
    if not p_fb > 0:
        raise NonPositivePower(f"feedback power must be positive, got {p_fb}")
    if model == "additive":
        return 1.0 / p_dl + 1.0 / p_fb
    if model == "scaled":
        return (1.0 + 1.0 / p_fb) / p_dl
    raise ValueError(f"unknown feedback model {model!r}; expected one of {FEEDBACK_MODELS}")


def observe(pilots: PilotMatrix, h, sigma2: float, rng: np.random.Generator | None = None) -> TrainingObservation:
    """``y = Phi^H h + n`` with ``n ~ CN(0, sigma2 I)``.

    ``h`` may be a single channel (length M) or M x K channels as columns,
    in which case ``y`` is T_dl x K. ``sigma2 == 0`` consumes no randomness.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim not in (1, 2) or h.shape[0] != pilots.num_antennas:
        raise DimensionMismatch(f"channel has shape {h.shape}, expected leading dimension {pilots.num_antennas}")
    if sigma2 < 0:
        raise ValueError("noise variance must be >= 0")
    y = pilots.H @ h
    if sigma2 > 0:
        if rng is None:
            raise ValueError("noisy observations need a generator")
        noise = rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
        y = y + math.sqrt(sigma2 / 2.0) * noise
    return TrainingObservation(y, float(sigma2))
